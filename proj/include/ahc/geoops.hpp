#pragma once

// The background geometric operators: Hessian-type T(N) = nb2 N - N gb,
// Killing operator S(Y) = nb_(i Y_j), the order-two operator
// U_{kji}(X) = nb2_{kj} X_i - gb_{jk} X_i + gb_{ik} X_j, the second-derivative
// identity they satisfy, and the model Helmholtz operators
// A = -Lap + n (functions), B = -Lap + n-1 (1-forms).

#include <cmath>
#include <optional>

#include "ahc/ball.hpp"
#include "ahc/residual.hpp"
#include "ahc/tensor_ops.hpp"

namespace ahc {

struct OperatorOutput {
  Field field;
  Field trace;  // gb-trace where meaningful
};

namespace detail {

// Background connection data at a node.
struct BgConn {
  double G[18];
  double dG[18][3];
  double rho;
  Vec3 p;
};

inline BgConn bg_conn(const ChartGrid& g, int idx, bool with_deriv) {
  BgConn b;
  b.rho = g.node_rho[idx];
  b.p = g.node_x[idx];
  gb_christoffel(b.p, b.rho, b.G);
  if (with_deriv) gb_christoffel_deriv(b.p, b.rho, b.dG);
  return b;
}

// Coordinate derivatives of S(X)_{ij} from X 2-jets and the background
// connection data, then the covariant derivative of S as a (0,2) pair.
inline void killing_with_derivs(const CompJets& Xj, const BgConn& b, double* S /*6*/,
                                double (*nabS)[6] /*3 x 6: nb_k S_{ij}*/) {
  double dS[6][3];
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      int ij = sym3_index(i, j);
      double v = 0.5 * (Xj.d1[j][i] + Xj.d1[i][j]);
      for (int m = 0; m < 3; ++m) v -= b.G[m * 6 + ij] * Xj.v[m];
      S[ij] = v;
      if (!nabS) continue;
      for (int k = 0; k < 3; ++k) {
        double d = 0.5 * (Xj.d2[j][sym3_index(k, i)] + Xj.d2[i][sym3_index(k, j)]);
        for (int m = 0; m < 3; ++m) d -= b.dG[m * 6 + ij][k] * Xj.v[m] + b.G[m * 6 + ij] * Xj.d1[m][k];
        dS[ij][k] = d;
      }
    }
  if (!nabS) return;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        int ij = sym3_index(i, j);
        double v = dS[ij][k];
        for (int m = 0; m < 3; ++m)
          v -= b.G[m * 6 + sym3_index(k, i)] * S[sym3_index(m, j)] +
               b.G[m * 6 + sym3_index(k, j)] * S[sym3_index(i, m)];
        nabS[k][ij] = v;
      }
}

}  // namespace detail

// T(N) = nb2 N - N gb; trace = Lap N - 3 N.
inline OperatorOutput op_T(const Field& N) {
  if (N.kind != FieldKind::Scalar) throw KindMismatch("op_T expects a scalar");
  const ChartGrid& g = *N.chart;
  OperatorOutput out{make_field(g, FieldKind::SymCov2), make_field(g, FieldKind::Scalar)};
  CompJets nj;
  for (int idx = 0; idx < g.n_nodes(); ++idx) {
    auto b = detail::bg_conn(g, idx, false);
    jets_at(N, idx, nj);
    double hess[6];
    hess_scalar_kernel(nj, b.G, hess);
    double irho2 = 1.0 / (b.rho * b.rho);
    double lap = b.rho * b.rho * (hess[0] + hess[1] + hess[2]);  // gb^{ij} = rho^2 delta
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        double gbij = (i == j) ? irho2 : 0.0;
        out.field.at(idx, sym3_index(i, j)) = sym_get(hess, i, j) - nj.v[0] * gbij;
      }
    out.trace.at(idx, 0) = lap - 3.0 * nj.v[0];
  }
  return out;
}

// S(Y) = symmetrized covariant derivative; trace = div Y.
inline OperatorOutput op_S(const Field& Y) {
  if (Y.kind != FieldKind::OneForm) throw KindMismatch("op_S expects a 1-form");
  const ChartGrid& g = *Y.chart;
  OperatorOutput out{make_field(g, FieldKind::SymCov2), make_field(g, FieldKind::Scalar)};
  CompJets yj;
  double S[6];
  for (int idx = 0; idx < g.n_nodes(); ++idx) {
    auto b = detail::bg_conn(g, idx, false);
    jets_at(Y, idx, yj);
    detail::killing_with_derivs(yj, b, S, nullptr);
    double tr = b.rho * b.rho * (S[0] + S[1] + S[2]);
    for (int c = 0; c < 6; ++c) out.field.at(idx, c) = S[c];
    out.trace.at(idx, 0) = tr;
  }
  return out;
}

// U_{kji}(X), stored with index ((k*3+j)*3+i).
inline Field op_U(const Field& X) {
  if (X.kind != FieldKind::OneForm) throw KindMismatch("op_U expects a 1-form");
  const ChartGrid& g = *X.chart;
  Field out = make_field(g, FieldKind::Gen3Cov);
  CompJets xj;
  double ddX[27];
  for (int idx = 0; idx < g.n_nodes(); ++idx) {
    auto b = detail::bg_conn(g, idx, true);
    jets_at(X, idx, xj);
    covd2_oneform_kernel(xj, b.G, b.dG, ddX);
    double irho2 = 1.0 / (b.rho * b.rho);
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i) {
          double v = ddX[(k * 3 + j) * 3 + i];
          if (j == k) v -= irho2 * xj.v[i];
          if (i == k) v += irho2 * xj.v[j];
          out.at(idx, (k * 3 + j) * 3 + i) = v;
        }
  }
  return out;
}

// Residual of nb2_{kj} X_i = Riem_{ijkl} X^l + nb_k S_{ij} + nb_j S_{ik} - nb_i S_{jk}
// with the exact model Riemann tensor.
inline Residual second_derivative_identity_residual(const Field& X) {
  if (X.kind != FieldKind::OneForm) throw InsufficientSmoothness("b29 residual expects a 1-form");
  const ChartGrid& g = *X.chart;
  Residual out;
  out.id = "B29";
  out.notes = "pole rings and one boundary cell excluded";
  double sup = 0, l2 = 0, vol = 0;
  CompJets xj, sj;
  double ddX[27], S[6], nabS[3][6];
  // Without analytic jets the S-route differentiates the materialized S(X)
  // grid field, so the two sides discretize independently.
  Field Sfield = make_field(g, FieldKind::SymCov2);
  if (!X.has_analytic()) Sfield = op_S(X).field;
  for (int idx = 0; idx < g.n_nodes(); ++idx) {
    if (g.pole_ring(idx) || g.in_boundary_band(idx, 1)) continue;
    auto b = detail::bg_conn(g, idx, true);
    jets_at(X, idx, xj);
    covd2_oneform_kernel(xj, b.G, b.dG, ddX);
    if (X.has_analytic()) {
      detail::killing_with_derivs(xj, b, S, nabS);
    } else {
      jets_at(Sfield, idx, sj);
      for (int c = 0; c < 6; ++c) S[c] = sj.v[c];
      double dh[18];
      covd_sym2_kernel(sj, b.G, dh);
      for (int k = 0; k < 3; ++k)
        for (int c = 0; c < 6; ++c) nabS[k][c] = dh[k * 6 + c];
    }
    double irho2 = 1.0 / (b.rho * b.rho);
    double w = g.weight_h(idx);
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i) {
          // Riem_{ijkl} X^l = gb_{jk} X_i - gb_{ik} X_j on the exact model
          double riemX = 0.0;
          if (j == k) riemX += irho2 * xj.v[i];
          if (i == k) riemX -= irho2 * xj.v[j];
          double rhs = riemX + nabS[k][sym3_index(i, j)] + nabS[j][sym3_index(i, k)] - nabS[i][sym3_index(j, k)];
          // residual scaled to the gb-norm of a (0,3) slot
          double res = (ddX[(k * 3 + j) * 3 + i] - rhs) * b.rho * b.rho * b.rho;
          sup = std::max(sup, std::abs(res));
          l2 += res * res * w / (b.rho * b.rho * b.rho);
          vol += w / (b.rho * b.rho * b.rho);
        }
  }
  out.sup = sup;
  out.l2 = vol > 0 ? std::sqrt(l2 / vol) : 0;
  return out;
}

enum class ModelOp { A, B };

// -Lap u + n u on functions, or -Lap Y + (n-1) Y on 1-forms, with the
// Laplacian of the supplied metric (background by default).
inline Field model_operator_apply(ModelOp which, const Field& u, const Field* metric = nullptr) {
  const ChartGrid& g = *u.chart;
  if (which == ModelOp::A && u.kind != FieldKind::Scalar) throw KindMismatch("A acts on functions");
  if (which == ModelOp::B && u.kind != FieldKind::OneForm) throw KindMismatch("B acts on 1-forms");
  Field out = make_field(g, u.kind);
  CompJets uj, gj;
  double cst = which == ModelOp::A ? 3.0 : 2.0;
  for (int idx = 0; idx < g.n_nodes(); ++idx) {
    jets_at(u, idx, uj);
    double G[18], dG[18][3], ginv[6];
    if (metric) {
      jets_at(*metric, idx, gj);
      christoffel_kernel(gj, ginv, G, which == ModelOp::B ? dG : nullptr);
    } else {
      auto b = detail::bg_conn(g, idx, which == ModelOp::B);
      for (int c = 0; c < 18; ++c) G[c] = b.G[c];
      if (which == ModelOp::B)
        for (int c = 0; c < 18; ++c)
          for (int m = 0; m < 3; ++m) dG[c][m] = b.dG[c][m];
      double irho2 = 1.0 / (b.rho * b.rho);
      double w = 1.0 / irho2;  // gb^{ii} = rho^2
      ginv[0] = ginv[1] = ginv[2] = w;
      ginv[3] = ginv[4] = ginv[5] = 0.0;
    }
    if (which == ModelOp::A) {
      double hess[6];
      hess_scalar_kernel(uj, G, hess);
      double lap = 0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) lap += sym_get(ginv, i, j) * sym_get(hess, i, j);
      out.at(idx, 0) = -lap + cst * uj.v[0];
    } else {
      double ddX[27];
      covd2_oneform_kernel(uj, G, dG, ddX);
      for (int i = 0; i < 3; ++i) {
        double lap = 0;
        for (int k = 0; k < 3; ++k)
          for (int j = 0; j < 3; ++j) lap += sym_get(ginv, k, j) * ddX[(k * 3 + j) * 3 + i];
        out.at(idx, i) = -lap + cst * uj.v[i];
      }
    }
  }
  return out;
}

}  // namespace ahc
