#pragma once

// Matrix-free linear operators on grid fields, built from two primitives
// with exact transposes: per-axis stencil sweeps and pointwise blocks.
// Everything here is deterministic: fixed sweep order, no atomics.

#include <cstring>
#include <functional>
#include <vector>

#include "ahc/field.hpp"
#include "ahc/grid.hpp"

namespace ahc {

// Derivative sweep along one axis. order: 1 or 2. in/out are node-major
// arrays with `nc` components.
inline void axis_sweep(const ChartGrid& g, int axis, int order, const double* in, double* out, int nc) {
  const LineStencil& s = axis == 0 ? g.sten_r : axis == 1 ? g.sten_theta : g.sten_phi;
  int W = s.width;
  const std::vector<double>& w = order == 1 ? s.w1 : s.w2;
  int nr = g.nr_nodes(), nt = g.n_theta, np = g.n_phi;
  for (int ir = 0; ir < nr; ++ir)
    for (int it = 0; it < nt; ++it)
      for (int ip = 0; ip < np; ++ip) {
        int line = axis == 0 ? ir : axis == 1 ? it : ip;
        size_t base = size_t(g.index(ir, it, ip)) * nc;
        for (int c = 0; c < nc; ++c) out[base + c] = 0.0;
        for (int k = 0; k < W; ++k) {
          int nidx = axis == 0 ? g.index(s.node(ir, k), it, ip)
                     : axis == 1 ? g.index(ir, s.node(it, k), ip)
                                 : g.index(ir, it, s.node(ip, k));
          double wk = w[size_t(line) * W + k];
          const double* src = in + size_t(nidx) * nc;
          double* dst = out + base;
          for (int c = 0; c < nc; ++c) dst[c] += wk * src[c];
        }
      }
}

// Transpose of axis_sweep: accumulates into out.
inline void axis_sweep_T(const ChartGrid& g, int axis, int order, const double* in, double* out, int nc) {
  const LineStencil& s = axis == 0 ? g.sten_r : axis == 1 ? g.sten_theta : g.sten_phi;
  int W = s.width;
  const std::vector<double>& w = order == 1 ? s.w1 : s.w2;
  int nr = g.nr_nodes(), nt = g.n_theta, np = g.n_phi;
  for (int ir = 0; ir < nr; ++ir)
    for (int it = 0; it < nt; ++it)
      for (int ip = 0; ip < np; ++ip) {
        int line = axis == 0 ? ir : axis == 1 ? it : ip;
        size_t base = size_t(g.index(ir, it, ip)) * nc;
        for (int k = 0; k < W; ++k) {
          int nidx = axis == 0 ? g.index(s.node(ir, k), it, ip)
                     : axis == 1 ? g.index(ir, s.node(it, k), ip)
                                 : g.index(ir, it, s.node(ip, k));
          double wk = w[size_t(line) * W + k];
          const double* src = in + base;
          double* dst = out + size_t(nidx) * nc;
          for (int c = 0; c < nc; ++c) dst[c] += wk * src[c];
        }
      }
}

// The 10x10 chain matrix mapping spherical jet slots
// (f, Dr, Dt, Dp, Drr, Dtt, Dpp, Dtp, Drp, Drt) to Cartesian
// (v, dx, dy, dz, packed hessian).
inline void chain_matrix(const ChartGrid& g, int idx, double M[10][10]) {
  int ir, it, ip;
  g.split(idx, ir, it, ip);
  SphericalFrame fr = spherical_frame(g.r[ir], g.theta[it], g.phi[ip]);
  for (int a = 0; a < 10; ++a)
    for (int b = 0; b < 10; ++b) M[a][b] = 0.0;
  M[0][0] = 1.0;
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 3; ++a) M[1 + i][1 + a] = fr.B[a][i];
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      int row = 4 + sym3_index(i, j);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          double f = fr.B[a][i] * fr.B[b][j];
          M[row][4 + sym3_index(a, b)] += f;
          for (int c = 0; c < 3; ++c) M[row][1 + c] -= f * fr.C[c][sym3_index(a, b)];
        }
    }
}

// Jets pipeline: field values (n_nodes*nc) -> Cartesian jets (n_nodes*nc*10).
struct JetPipeline {
  const ChartGrid* g = nullptr;
  int nc = 1;
  mutable std::vector<double> work;  // 9 derivative arrays

  JetPipeline() = default;
  JetPipeline(const ChartGrid& grid, int ncomp) : g(&grid), nc(ncomp) {}

  size_t nvals() const { return size_t(g->n_nodes()) * nc; }
  size_t njets() const { return nvals() * 10; }

  void forward(const double* in, double* jets) const {
    size_t nv = nvals();
    if (work.size() < nv * 9) work.resize(nv * 9);
    double* D[9];
    for (int k = 0; k < 9; ++k) D[k] = work.data() + k * nv;
    // 0:Dr 1:Dt 2:Dp 3:Drr 4:Dtt 5:Dpp 6:Dtp 7:Drp 8:Drt
    axis_sweep(*g, 0, 1, in, D[0], nc);
    axis_sweep(*g, 1, 1, in, D[1], nc);
    axis_sweep(*g, 2, 1, in, D[2], nc);
    axis_sweep(*g, 0, 2, in, D[3], nc);
    axis_sweep(*g, 1, 2, in, D[4], nc);
    axis_sweep(*g, 2, 2, in, D[5], nc);
    axis_sweep(*g, 1, 1, D[2], D[6], nc);  // Dtp = d_t(Dp)
    axis_sweep(*g, 0, 1, D[2], D[7], nc);  // Drp
    axis_sweep(*g, 0, 1, D[1], D[8], nc);  // Drt
    double M[10][10], s[10], c[10];
    for (int idx = 0; idx < g->n_nodes(); ++idx) {
      chain_matrix(*g, idx, M);
      for (int comp = 0; comp < nc; ++comp) {
        size_t off = size_t(idx) * nc + comp;
        s[0] = in[off];
        for (int k = 0; k < 9; ++k) s[1 + k] = D[k][off];
        // slot order expected by chain: (f, Dr,Dt,Dp, Drr,Dtt,Dpp, Dtp,Drp,Drt)
        for (int a = 0; a < 10; ++a) {
          double acc = 0;
          for (int b = 0; b < 10; ++b) acc += M[a][b] * s[b];
          c[a] = acc;
        }
        double* out = jets + off * 10;
        for (int a = 0; a < 10; ++a) out[a] = c[a];
      }
    }
  }

  // Accumulates the transpose into `out` (must be zeroed by the caller).
  void adjoint(const double* jets_adj, double* out) const {
    size_t nv = nvals();
    if (work.size() < nv * 9) work.resize(nv * 9);
    double* D[9];
    for (int k = 0; k < 9; ++k) D[k] = work.data() + k * nv;
    double M[10][10], c[10];
    for (int idx = 0; idx < g->n_nodes(); ++idx) {
      chain_matrix(*g, idx, M);
      for (int comp = 0; comp < nc; ++comp) {
        size_t off = size_t(idx) * nc + comp;
        const double* ja = jets_adj + off * 10;
        for (int b = 0; b < 10; ++b) {
          double acc = 0;
          for (int a = 0; a < 10; ++a) acc += M[a][b] * ja[a];
          c[b] = acc;
        }
        out[off] += c[0];
        for (int k = 0; k < 9; ++k) D[k][off] = c[1 + k];
      }
    }
    // reverse the compositions
    axis_sweep_T(*g, 1, 1, D[6], D[2], nc);  // Dtp -> Dp
    axis_sweep_T(*g, 0, 1, D[7], D[2], nc);  // Drp -> Dp
    axis_sweep_T(*g, 0, 1, D[8], D[1], nc);  // Drt -> Dt
    axis_sweep_T(*g, 0, 1, D[0], out, nc);
    axis_sweep_T(*g, 1, 1, D[1], out, nc);
    axis_sweep_T(*g, 2, 1, D[2], out, nc);
    axis_sweep_T(*g, 0, 2, D[3], out, nc);
    axis_sweep_T(*g, 1, 2, D[4], out, nc);
    axis_sweep_T(*g, 2, 2, D[5], out, nc);
  }
};

// General linear operator with transpose.
struct LinOp {
  size_t n_in = 0, n_out = 0;
  std::function<void(const double*, double*)> apply;   // out = A in
  std::function<void(const double*, double*)> applyT;  // out = A^T in
};

struct CgReport {
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

// CG on the weighted normal equations: minimizes ||A x - b||_W by solving
// (A^T W A) x = A^T W b. `diag` is a Jacobi preconditioner for the normal
// operator (pass empty to disable). `mask` zeroes constrained dofs.
// All iterates stay masked, so the operator never sees constrained dofs.
inline CgReport cg_normal(const LinOp& A, const std::vector<double>& W, const std::vector<double>& b,
                          std::vector<double>& x, double tol, int max_iter,
                          const std::vector<double>& diag = {},
                          const std::vector<std::uint8_t>& mask = {}) {
  size_t n = A.n_in, m = A.n_out;
  auto masked = [&](std::vector<double>& v) {
    if (mask.empty()) return;
    for (size_t i = 0; i < n; ++i)
      if (!mask[i]) v[i] = 0.0;
  };
  std::vector<double> tmp_m(m), tmp_n(n), r(n), z(n), p(n), Kp(n);
  auto normal_apply = [&](const std::vector<double>& v, std::vector<double>& out) {
    A.apply(v.data(), tmp_m.data());
    for (size_t i = 0; i < m; ++i) tmp_m[i] *= W[i];
    std::fill(out.begin(), out.end(), 0.0);
    A.applyT(tmp_m.data(), out.data());
    masked(out);
  };
  // rhs = A^T W b
  std::vector<double> rhs(n, 0.0);
  for (size_t i = 0; i < m; ++i) tmp_m[i] = W[i] * b[i];
  A.applyT(tmp_m.data(), rhs.data());
  masked(rhs);

  if (x.size() != n) x.assign(n, 0.0);
  masked(x);
  normal_apply(x, tmp_n);
  for (size_t i = 0; i < n; ++i) r[i] = rhs[i] - tmp_n[i];
  auto precond = [&](const std::vector<double>& v, std::vector<double>& out) {
    if (diag.empty()) {
      out = v;
    } else {
      for (size_t i = 0; i < n; ++i) out[i] = v[i] / diag[i];
    }
    if (!mask.empty())
      for (size_t i = 0; i < n; ++i)
        if (!mask[i]) out[i] = 0.0;
  };
  precond(r, z);
  p = z;
  double rz = 0, rhs_norm = 0;
  for (size_t i = 0; i < n; ++i) {
    rz += r[i] * z[i];
    rhs_norm += rhs[i] * rhs[i];
  }
  rhs_norm = std::sqrt(rhs_norm);
  CgReport rep;
  double stop = tol * std::max(rhs_norm, 1e-300);
  for (int it = 0; it < max_iter; ++it) {
    double rnorm = 0;
    for (size_t i = 0; i < n; ++i) rnorm += r[i] * r[i];
    rnorm = std::sqrt(rnorm);
    rep.iterations = it;
    rep.residual = rnorm;
    if (rnorm <= stop) {
      rep.converged = true;
      return rep;
    }
    normal_apply(p, Kp);
    double pKp = 0;
    for (size_t i = 0; i < n; ++i) pKp += p[i] * Kp[i];
    if (!(pKp > 0)) break;
    double alpha = rz / pKp;
    for (size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Kp[i];
    }
    precond(r, z);
    double rz_new = 0;
    for (size_t i = 0; i < n; ++i) rz_new += r[i] * z[i];
    double beta = rz_new / rz;
    rz = rz_new;
    for (size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  double rnorm = 0;
  for (size_t i = 0; i < n; ++i) rnorm += r[i] * r[i];
  rep.residual = std::sqrt(rnorm);
  rep.converged = rep.residual <= stop;
  return rep;
}

// Jet-stencil footprint of one node: every grid node whose value enters the
// Cartesian jets there, with its weights on the 10 spherical slots
// (f, Dr, Dt, Dp, Drr, Dtt, Dpp, Dtp, Drp, Drt).
struct FootprintEntry {
  int node;
  double w[10];
};

inline void jets_footprint(const ChartGrid& g, int idx, std::vector<FootprintEntry>& out) {
  out.clear();
  int ir, it, ip;
  g.split(idx, ir, it, ip);
  auto slot = [&](int node, int s, double w) {
    for (auto& e : out)
      if (e.node == node) {
        e.w[s] += w;
        return;
      }
    FootprintEntry e{};
    e.node = node;
    e.w[s] = w;
    out.push_back(e);
  };
  const LineStencil& sr = g.sten_r;
  const LineStencil& st = g.sten_theta;
  const LineStencil& sp = g.sten_phi;
  slot(idx, 0, 1.0);
  for (int k = 0; k < sr.width; ++k) {
    int n = g.index(sr.node(ir, k), it, ip);
    slot(n, 1, sr.w1[size_t(ir) * sr.width + k]);
    slot(n, 4, sr.w2[size_t(ir) * sr.width + k]);
  }
  for (int l = 0; l < st.width; ++l) {
    int n = g.index(ir, st.node(it, l), ip);
    slot(n, 2, st.w1[size_t(it) * st.width + l]);
    slot(n, 5, st.w2[size_t(it) * st.width + l]);
  }
  for (int q = 0; q < sp.width; ++q) {
    int n = g.index(ir, it, sp.node(ip, q));
    slot(n, 3, sp.w1[size_t(ip) * sp.width + q]);
    slot(n, 6, sp.w2[size_t(ip) * sp.width + q]);
  }
  for (int l = 0; l < st.width; ++l)
    for (int q = 0; q < sp.width; ++q)
      slot(g.index(ir, st.node(it, l), sp.node(ip, q)), 7,
           st.w1[size_t(it) * st.width + l] * sp.w1[size_t(ip) * sp.width + q]);
  for (int k = 0; k < sr.width; ++k)
    for (int q = 0; q < sp.width; ++q)
      slot(g.index(sr.node(ir, k), it, sp.node(ip, q)), 8,
           sr.w1[size_t(ir) * sr.width + k] * sp.w1[size_t(ip) * sp.width + q]);
  for (int k = 0; k < sr.width; ++k)
    for (int l = 0; l < st.width; ++l)
      slot(g.index(sr.node(ir, k), st.node(it, l), ip), 9,
           sr.w1[size_t(ir) * sr.width + k] * st.w1[size_t(it) * st.width + l]);
}

// Exact diag(A^T W A) for a single-stage pipeline: out(node) = rows(node)
// applied to the Cartesian jets of the input. `cart_rows` fills the
// (nc_out) x (nc_in*10) row block against Cartesian jet slots.
inline std::vector<double> exact_normal_diagonal(const ChartGrid& g, int nc_in, int nc_out,
                                                 const std::vector<double>& W,
                                                 const std::function<void(int, double*)>& cart_rows) {
  std::vector<double> diag(size_t(g.n_nodes()) * nc_in, 0.0);
  std::vector<FootprintEntry> fp;
  std::vector<double> P(size_t(nc_out) * nc_in * 10), Pp(size_t(nc_out) * nc_in * 10);
  double M[10][10];
  for (int idx = 0; idx < g.n_nodes(); ++idx) {
    cart_rows(idx, P.data());
    chain_matrix(g, idx, M);
    // fold the chain: Pp[o][c,s_sph] = sum_cart P[o][c,cart] M[cart][s_sph]
    for (int o = 0; o < nc_out; ++o)
      for (int c = 0; c < nc_in; ++c)
        for (int s = 0; s < 10; ++s) {
          double acc = 0;
          for (int a = 0; a < 10; ++a) acc += P[(size_t(o) * nc_in + c) * 10 + a] * M[a][s];
          Pp[(size_t(o) * nc_in + c) * 10 + s] = acc;
        }
    jets_footprint(g, idx, fp);
    for (int o = 0; o < nc_out; ++o) {
      double w = W[size_t(idx) * nc_out + o];
      for (const auto& e : fp)
        for (int c = 0; c < nc_in; ++c) {
          double a = 0;
          for (int s = 0; s < 10; ++s) a += Pp[(size_t(o) * nc_in + c) * 10 + s] * e.w[s];
          diag[size_t(e.node) * nc_in + c] += w * a * a;
        }
    }
  }
  double mean = 0;
  for (double d : diag) mean += std::abs(d);
  mean = mean / diag.size() + 1e-300;
  for (auto& d : diag)
    if (!(d > 1e-14 * mean)) d = mean;
  return diag;
}

// Deterministic Hutchinson estimate of diag(A^T W A) from fixed sign probes.
inline std::vector<double> estimate_normal_diagonal(const LinOp& A, const std::vector<double>& W,
                                                    int probes, std::uint64_t seed) {
  size_t n = A.n_in, m = A.n_out;
  std::vector<double> diag(n, 0.0), v(n), tmp(m), out(n);
  Rng rng(seed);
  for (int p = 0; p < probes; ++p) {
    for (size_t i = 0; i < n; ++i) v[i] = (rng.next_u64() & 1) ? 1.0 : -1.0;
    A.apply(v.data(), tmp.data());
    for (size_t i = 0; i < m; ++i) tmp[i] *= W[i];
    std::fill(out.begin(), out.end(), 0.0);
    A.applyT(tmp.data(), out.data());
    for (size_t i = 0; i < n; ++i) diag[i] += v[i] * out[i];
  }
  double mean = 0;
  for (size_t i = 0; i < n; ++i) mean += std::abs(diag[i]);
  mean = mean / n + 1e-300;
  for (size_t i = 0; i < n; ++i) {
    diag[i] /= probes;
    if (!(diag[i] > 1e-8 * mean)) diag[i] = mean;  // guard masked/degenerate rows
  }
  return diag;
}

}  // namespace ahc
