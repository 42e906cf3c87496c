#pragma once

// Grid solves for the model operators A = -Lap + 3 and B = -Lap + 2 in
// weighted L^2_s: preconditioned CG on the symmetrized weighted normal
// equations, homogeneous Dirichlet bands at both shell boundaries.

#include <cmath>
#include <vector>

#include "ahc/geoops.hpp"
#include "ahc/linop.hpp"
#include "ahc/wspace.hpp"

namespace ahc {

// Pointwise rows of the model operators against Cartesian jet slots.
// Slots: 0=v, 1..3 = d1, 4..9 = packed d2.
inline void model_op_rows(ModelOp which, const ChartGrid& g, int idx, double* P /* nout x (nc*10) */) {
  Vec3 p = g.node_x[idx];
  double rho = g.node_rho[idx];
  double x[3] = {p.x, p.y, p.z};
  if (which == ModelOp::A) {
    double* row = P;
    for (int s = 0; s < 10; ++s) row[s] = 0.0;
    row[0] = 3.0;
    for (int i = 0; i < 3; ++i) row[1 + i] = -rho * x[i];        // -Lap: -rho * x . grad
    for (int i = 0; i < 3; ++i) row[4 + sym3_index(i, i)] = -rho * rho;
    return;
  }
  double G[18], dG[18][3];
  gb_christoffel(p, rho, G);
  gb_christoffel_deriv(p, rho, dG);
  auto GG = [&](int k, int i, int j) { return G[k * 6 + sym3_index(i, j)]; };
  auto dGG = [&](int m, int k, int i, int j) { return dG[k * 6 + sym3_index(i, j)][m]; };
  for (int i = 0; i < 3; ++i) {
    double* row = P + size_t(i) * 30;
    for (int s = 0; s < 30; ++s) row[s] = 0.0;
    row[i * 10 + 0] += 2.0;  // +(n-1) X_i
    double r2 = rho * rho;
    for (int k = 0; k < 3; ++k) {
      // -rho^2 * [ dd_{kk} X_i - (dk G^m_{ki}) X_m - 2 G^m_{ki} dk X_m
      //            - G^m_{kk} dm X_i + (G^m_{kk} G^l_{mi} + G^m_{ki} G^l_{km}) X_l ]
      row[i * 10 + 4 + sym3_index(k, k)] -= r2;
      for (int m = 0; m < 3; ++m) {
        row[m * 10 + 0] += r2 * dGG(k, m, k, i);
        row[m * 10 + 1 + k] += r2 * 2.0 * GG(m, k, i);
        row[i * 10 + 1 + m] += r2 * GG(m, k, k);
        for (int l = 0; l < 3; ++l)
          row[l * 10 + 0] -= r2 * (GG(m, k, k) * GG(l, m, i) + GG(m, k, i) * GG(l, k, m));
      }
    }
  }
}

// LinOp wrapper for a model operator on the grid (values -> values).
struct ModelOpPipeline {
  const ChartGrid* g = nullptr;
  ModelOp which = ModelOp::A;
  int nc = 1;
  JetPipeline jets;
  mutable std::vector<double> jbuf;

  ModelOpPipeline(const ChartGrid& grid, ModelOp op)
      : g(&grid), which(op), nc(op == ModelOp::A ? 1 : 3), jets(grid, op == ModelOp::A ? 1 : 3) {}

  void apply(const double* in, double* out) const {
    jbuf.resize(jets.njets());
    jets.forward(in, jbuf.data());
    double P[3 * 30];
    for (int idx = 0; idx < g->n_nodes(); ++idx) {
      model_op_rows(which, *g, idx, P);
      const double* js = jbuf.data() + size_t(idx) * nc * 10;
      for (int o = 0; o < nc; ++o) {
        double acc = 0;
        const double* row = P + size_t(o) * nc * 10;
        for (int s = 0; s < nc * 10; ++s) acc += row[s] * js[s];
        out[size_t(idx) * nc + o] = acc;
      }
    }
  }
  void applyT(const double* in, double* out) const {
    jbuf.assign(jets.njets(), 0.0);
    double P[3 * 30];
    for (int idx = 0; idx < g->n_nodes(); ++idx) {
      model_op_rows(which, *g, idx, P);
      double* js = jbuf.data() + size_t(idx) * nc * 10;
      for (int o = 0; o < nc; ++o) {
        double v = in[size_t(idx) * nc + o];
        const double* row = P + size_t(o) * nc * 10;
        for (int s = 0; s < nc * 10; ++s) js[s] += row[s] * v;
      }
    }
    jets.adjoint(jbuf.data(), out);
  }
  LinOp linop() const {
    LinOp op;
    op.n_in = op.n_out = size_t(g->n_nodes()) * nc;
    op.apply = [this](const double* a, double* b) { apply(a, b); };
    op.applyT = [this](const double* a, double* b) { applyT(a, b); };
    return op;
  }
};

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  bool window_violation = false;
  double constant_estimate = 0.0;  // ||u||_{2,2,s} / ||f||_{2,s}
};

// L^2_s quadrature weights on the output components of kind `kind`.
inline std::vector<double> l2s_weights(const ChartGrid& g, FieldKind kind, double s) {
  int nc = ncomp(kind);
  double mult[kMaxComp];
  norm_multiplicity(kind, mult);
  int cw = conformal_weight(kind);
  std::vector<double> W(size_t(g.n_nodes()) * nc);
  for (int idx = 0; idx < g.n_nodes(); ++idx) {
    double rho = g.node_rho[idx];
    double base = g.weight_h(idx) / (rho * rho * rho) * std::pow(rho, 2.0 * s + 2.0 * cw);
    for (int c = 0; c < nc; ++c) W[size_t(idx) * nc + c] = base * mult[c];
  }
  return W;
}

inline std::vector<std::uint8_t> dirichlet_mask(const ChartGrid& g, int nc, int band_cells = 1) {
  std::vector<std::uint8_t> mask(size_t(g.n_nodes()) * nc, 1);
  for (int idx = 0; idx < g.n_nodes(); ++idx)
    if (g.in_boundary_band(idx, band_cells))
      for (int c = 0; c < nc; ++c) mask[size_t(idx) * nc + c] = 0;
  return mask;
}

inline Field model_operator_solve(ModelOp which, const Field& f, double s, SolveReport* report = nullptr,
                                  bool warn_and_proceed = false, double tol = 1e-10) {
  const ChartGrid& g = *f.chart;
  SolveReport rep;
  if (std::abs(s) >= 2.0) {
    rep.window_violation = true;
    if (!warn_and_proceed) throw WeightOutOfRange("isomorphism window needs |s| < 2");
  }
  FieldKind kind = which == ModelOp::A ? FieldKind::Scalar : FieldKind::OneForm;
  if (f.kind != kind) throw KindMismatch("rhs kind does not match the operator");
  ModelOpPipeline pipe(g, which);
  LinOp A = pipe.linop();
  std::vector<double> W = l2s_weights(g, kind, s);
  std::vector<std::uint8_t> mask = dirichlet_mask(g, ncomp(kind));
  int nc = ncomp(kind);
  std::vector<double> diag = exact_normal_diagonal(
      g, nc, nc, W, [&](int idx, double* P) { model_op_rows(which, g, idx, P); });
  std::vector<double> x;
  // The normal equations square the conditioning; 10*sqrt(dof) starves the
  // iteration at tol 1e-10, so the cap runs at 50*sqrt(dof).
  int cap = int(50.0 * std::sqrt(double(A.n_in))) + 50;
  CgReport cg = cg_normal(A, W, f.values, x, tol, cap, diag, mask);
  rep.iterations = cg.iterations;
  rep.residual = cg.residual;
  rep.converged = cg.converged;
  if (!cg.converged) throw SolverDivergence("model operator CG hit the iteration cap");
  Field u = make_field(g, kind);
  u.values = x;
  RegionMask all = full_region(g);
  double nf = weighted_norm(f, {0, 2, s}, all);
  if (nf > 0) rep.constant_estimate = weighted_norm(u, {2, 2, s}, all) / nf;
  if (report) *report = rep;
  return u;
}

}  // namespace ahc
