#pragma once

// Tensor-valued fields over a ChartGrid. Components are kept in the
// Cartesian frame; derivatives come either from analytic closures (exact
// 2-jets) or from grid stencils mapped through the spherical chain rule.

#include <cmath>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "ahc/errors.hpp"
#include "ahc/grid.hpp"
#include "ahc/jet.hpp"

namespace ahc {

enum class FieldKind {
  Scalar,    // 1 comp
  OneForm,   // (0,1), 3 comps
  VectorF,   // (1,0), 3 comps
  SymCov2,   // (0,2) symmetric, 6 comps packed
  SymCon2,   // (2,0) symmetric, 6 comps packed
  CovDSym2,  // (0,3), nabla of a symmetric pair: 18 comps, k*6+sym
  Gen3Cov,   // (0,3) general, 27 comps, (k*9 + j*3 + i)
};

inline int ncomp(FieldKind k) {
  switch (k) {
    case FieldKind::Scalar: return 1;
    case FieldKind::OneForm:
    case FieldKind::VectorF: return 3;
    case FieldKind::SymCov2:
    case FieldKind::SymCon2: return 6;
    case FieldKind::CovDSym2: return 18;
    case FieldKind::Gen3Cov: return 27;
  }
  return 0;
}

// Covariant-minus-contravariant rank (the exponent in |u|_gb = rho^{m-r} |u|_h).
inline int conformal_weight(FieldKind k) {
  switch (k) {
    case FieldKind::Scalar: return 0;
    case FieldKind::OneForm: return 1;
    case FieldKind::VectorF: return -1;
    case FieldKind::SymCov2: return 2;
    case FieldKind::SymCon2: return -2;
    case FieldKind::CovDSym2: return 3;
    case FieldKind::Gen3Cov: return 3;
  }
  return 0;
}

// Multiplicity of each packed component in the Euclidean norm square.
inline void norm_multiplicity(FieldKind k, double* mult) {
  int n = ncomp(k);
  for (int i = 0; i < n; ++i) mult[i] = 1.0;
  if (k == FieldKind::SymCov2 || k == FieldKind::SymCon2)
    for (int i = 3; i < 6; ++i) mult[i] = 2.0;
  if (k == FieldKind::CovDSym2)
    for (int c = 0; c < 3; ++c)
      for (int i = 3; i < 6; ++i) mult[c * 6 + i] = 2.0;
}

constexpr int kMaxComp = 27;

// Jets of all components of a field at one point.
struct CompJets {
  int n = 0;
  double v[kMaxComp];
  double d1[kMaxComp][3];
  double d2[kMaxComp][6];
  void from_jets(const Jet2* js, int count) {
    n = count;
    for (int c = 0; c < count; ++c) {
      v[c] = js[c].v;
      for (int i = 0; i < 3; ++i) d1[c][i] = js[c].g[i];
      for (int i = 0; i < 6; ++i) d2[c][i] = js[c].h[i];
    }
  }
};

using AnalyticFn = std::function<void(const Vec3&, Jet2*)>;

inline Jet2 jet_x(const Vec3& p) { return Jet2::coordinate(p.x, 0); }
inline Jet2 jet_y(const Vec3& p) { return Jet2::coordinate(p.y, 1); }
inline Jet2 jet_z(const Vec3& p) { return Jet2::coordinate(p.z, 2); }
inline Jet2 jet_r2(const Vec3& p) {
  Jet2 x = jet_x(p), y = jet_y(p), z = jet_z(p);
  return x * x + y * y + z * z;
}
inline Jet2 jet_rho(const Vec3& p) { return 0.5 * (1.0 - jet_r2(p)); }

struct Field {
  FieldKind kind = FieldKind::Scalar;
  const ChartGrid* chart = nullptr;
  std::vector<double> values;  // n_nodes * ncomp, node-major
  AnalyticFn analytic;         // optional exact jets
  int deriv_order = 2;         // derivatives available (analytic or FD)
  bool fd_one_sided = false;   // FD path used one-sided closures somewhere

  int nc() const { return ncomp(kind); }
  double& at(int node, int c) { return values[size_t(node) * nc() + c]; }
  const double& at(int node, int c) const { return values[size_t(node) * nc() + c]; }
  bool has_analytic() const { return bool(analytic); }
};

inline Field make_field(const ChartGrid& g, FieldKind kind) {
  Field f;
  f.kind = kind;
  f.chart = &g;
  f.values.assign(size_t(g.n_nodes()) * ncomp(kind), 0.0);
  return f;
}

inline Field sample_analytic(const ChartGrid& g, FieldKind kind, AnalyticFn fn) {
  Field f = make_field(g, kind);
  f.analytic = std::move(fn);
  int nc = f.nc();
  Jet2 js[kMaxComp];
  for (int i = 0; i < g.n_nodes(); ++i) {
    f.analytic(g.node_x[i], js);
    for (int c = 0; c < nc; ++c) f.values[size_t(i) * nc + c] = js[c].v;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Grid-stencil jets (Cartesian, via the flat spherical chain rule).

struct SphericalFrame {
  double B[3][3];  // B[a][i] = d xi^a / d x^i,  a in (r,theta,phi)
  double C[3][6];  // flat-space Christoffels C^c_{ab}, packed sym(ab)
};

inline SphericalFrame spherical_frame(double r, double th) {
  SphericalFrame f{};
  double st = std::sin(th), ct = std::cos(th);
  // phi frame vectors need phi; caller supplies via full version below.
  (void)st;
  (void)ct;
  (void)r;
  return f;
}

inline SphericalFrame spherical_frame(double r, double th, double ph) {
  SphericalFrame f{};
  double st = std::sin(th), ct = std::cos(th);
  double cp = std::cos(ph), sp = std::sin(ph);
  double nr[3] = {st * cp, st * sp, ct};
  double nt[3] = {ct * cp, ct * sp, -st};
  double np[3] = {-sp, cp, 0.0};
  for (int i = 0; i < 3; ++i) {
    f.B[0][i] = nr[i];
    f.B[1][i] = nt[i] / r;
    f.B[2][i] = np[i] / (r * st);
  }
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < 6; ++k) f.C[c][k] = 0.0;
  // sym(ab) packing: (rr, tt, pp, tp, rp, rt)
  f.C[0][1] = -r;                 // C^r_{tt}
  f.C[0][2] = -r * st * st;       // C^r_{pp}
  f.C[1][5] = 1.0 / r;            // C^t_{rt}
  f.C[1][2] = -st * ct;           // C^t_{pp}
  f.C[2][4] = 1.0 / r;            // C^p_{rp}
  f.C[2][3] = ct / st;            // C^p_{tp}
  return f;
}

// First and second spherical-axis derivatives of one component at a node.
struct SphericalDerivs {
  double d[3];    // d/dr, d/dtheta, d/dphi
  double dd[6];   // packed sym(ab) second derivatives
};

inline void spherical_derivs(const ChartGrid& g, const std::vector<double>& vals, int stride, int comp,
                             int ir, int it, int ip, SphericalDerivs& out) {
  const LineStencil& sr = g.sten_r;
  const LineStencil& st = g.sten_theta;
  const LineStencil& sp = g.sten_phi;
  auto val = [&](int a, int b, int c) { return vals[size_t(g.index(a, b, c)) * stride + comp]; };

  double dr = 0, dt = 0, dp = 0, drr = 0, dtt = 0, dpp = 0, drt = 0, drp = 0, dtp = 0;
  int Wr = sr.width, Wt = st.width, Wp = sp.width;
  for (int k = 0; k < Wr; ++k) {
    double v = val(sr.node(ir, k), it, ip);
    dr += sr.w1[size_t(ir) * Wr + k] * v;
    drr += sr.w2[size_t(ir) * Wr + k] * v;
  }
  for (int k = 0; k < Wt; ++k) {
    double v = val(ir, st.node(it, k), ip);
    dt += st.w1[size_t(it) * Wt + k] * v;
    dtt += st.w2[size_t(it) * Wt + k] * v;
  }
  for (int k = 0; k < Wp; ++k) {
    double v = val(ir, it, sp.node(ip, k));
    dp += sp.w1[size_t(ip) * Wp + k] * v;
    dpp += sp.w2[size_t(ip) * Wp + k] * v;
  }
  for (int k = 0; k < Wr; ++k) {
    int irk = sr.node(ir, k);
    double wt_r = sr.w1[size_t(ir) * Wr + k];
    double s1 = 0, s2 = 0;
    for (int l = 0; l < Wt; ++l) s1 += st.w1[size_t(it) * Wt + l] * val(irk, st.node(it, l), ip);
    for (int l = 0; l < Wp; ++l) s2 += sp.w1[size_t(ip) * Wp + l] * val(irk, it, sp.node(ip, l));
    drt += wt_r * s1;
    drp += wt_r * s2;
  }
  for (int l = 0; l < Wt; ++l) {
    int itl = st.node(it, l);
    double wt_t = st.w1[size_t(it) * Wt + l];
    double s = 0;
    for (int m = 0; m < Wp; ++m) s += sp.w1[size_t(ip) * Wp + m] * val(ir, itl, sp.node(ip, m));
    dtp += wt_t * s;
  }
  out.d[0] = dr;
  out.d[1] = dt;
  out.d[2] = dp;
  // packed sym(ab): (rr, tt, pp, tp, rp, rt)
  out.dd[0] = drr;
  out.dd[1] = dtt;
  out.dd[2] = dpp;
  out.dd[3] = dtp;
  out.dd[4] = drp;
  out.dd[5] = drt;
}

inline void spherical_to_cartesian(const SphericalFrame& f, const SphericalDerivs& s, double g1[3],
                                   double g2[6]) {
  double cov[6];  // flat covariant Hessian in spherical coords
  for (int k = 0; k < 6; ++k) {
    cov[k] = s.dd[k];
    for (int c = 0; c < 3; ++c) cov[k] -= f.C[c][k] * s.d[c];
  }
  for (int i = 0; i < 3; ++i) {
    g1[i] = 0.0;
    for (int a = 0; a < 3; ++a) g1[i] += f.B[a][i] * s.d[a];
  }
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      double acc = 0.0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          int ab = sym3_index(a, b);
          acc += f.B[a][i] * f.B[b][j] * cov[ab];
        }
      g2[sym3_index(i, j)] = acc;
    }
}

// Cartesian 2-jets of all components of a field at node idx.
inline void jets_at(const Field& f, int idx, CompJets& out) {
  const ChartGrid& g = *f.chart;
  int nc = f.nc();
  out.n = nc;
  if (f.analytic) {
    Jet2 js[kMaxComp];
    f.analytic(g.node_x[idx], js);
    out.from_jets(js, nc);
    return;
  }
  int ir, it, ip;
  g.split(idx, ir, it, ip);
  SphericalFrame fr = spherical_frame(g.r[ir], g.theta[it], g.phi[ip]);
  SphericalDerivs sd;
  for (int c = 0; c < nc; ++c) {
    spherical_derivs(g, f.values, nc, c, ir, it, ip, sd);
    out.v[c] = f.at(idx, c);
    spherical_to_cartesian(fr, sd, out.d1[c], out.d2[c]);
  }
}

// Pointwise Euclidean norm-square of packed components.
inline double comp_norm2(FieldKind k, const double* v) {
  double mult[kMaxComp];
  norm_multiplicity(k, mult);
  double acc = 0.0;
  for (int c = 0; c < ncomp(k); ++c) acc += mult[c] * v[c] * v[c];
  return acc;
}

// gb-norm at a node: rho^{m-r} * Euclidean norm.
inline double gb_norm(FieldKind k, const double* v, double rho) {
  return std::pow(rho, conformal_weight(k)) * std::sqrt(comp_norm2(k, v));
}

}  // namespace ahc
