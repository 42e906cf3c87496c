#pragma once

// Phase-space data for the constraint operator: a metric g and conjugate
// momentum pi. Momentum components are stored relative to d mu(gb) with the
// volume ratio s = sqrt(det g / det gb) kept as an explicit scalar field, so
// every *s and /s in the constraint algebra is a visible multiplication.

#include <cmath>

#include "ahc/ball.hpp"
#include "ahc/tensor_ops.hpp"

namespace ahc {

struct ReferenceData {
  double tau = 0.0;
  double Lambda = 0.0;  // 2 Lambda = n(n-1)(tau^2 - 1), n = 3
};

inline ReferenceData reference_data(double tau) {
  ReferenceData r;
  r.tau = tau;
  r.Lambda = 3.0 * (tau * tau - 1.0);
  return r;
}

// Reference momentum pi^{ij} = tau (1-n) gb^{ij} (density factor 1).
inline AnalyticFn reference_momentum_fn(double tau) {
  return [tau](const Vec3& p, Jet2* out) {
    Jet2 rho = jet_rho(p);
    Jet2 w = (-2.0 * tau) * rho * rho;  // gb^{ij} = rho^2 delta
    for (int c = 0; c < 6; ++c) out[c] = (c < 3) ? w : Jet2(0.0);
  };
}

struct PhasePoint {
  Field g;      // SymCov2
  Field pi;     // SymCon2, density components relative to d mu(gb)
  Field sqrtg;  // Scalar: s = sqrt(det g / det gb)
  double lambda = 0.5;
};

// Eigenvalue bounds of a symmetric 3x3 (cyclic Jacobi).
inline void sym_eig_bounds(const double* s, double& lo, double& hi) {
  double a[3][3] = {{s[0], s[5], s[4]}, {s[5], s[1], s[3]}, {s[4], s[3], s[2]}};
  for (int sweep = 0; sweep < 16; ++sweep) {
    double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
    if (off < 1e-14) break;
    for (int p = 0; p < 3; ++p)
      for (int q = p + 1; q < 3; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        double theta = 0.5 * std::atan2(2.0 * a[p][q], a[q][q] - a[p][p]);
        double c = std::cos(theta), sn = std::sin(theta);
        for (int k = 0; k < 3; ++k) {
          double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - sn * akq;
          a[k][q] = sn * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - sn * aqk;
          a[q][k] = sn * apk + c * aqk;
        }
      }
  }
  lo = std::min(a[0][0], std::min(a[1][1], a[2][2]));
  hi = std::max(a[0][0], std::max(a[1][1], a[2][2]));
}

// Builds a phase point, deriving s and checking positivity plus the
// lambda-equivalence with the background (a hard error: the norm bounds
// downstream assume it).
inline PhasePoint make_phase_point(Field g, Field pi, double lambda = 0.5) {
  const ChartGrid& grid = *g.chart;
  PhasePoint pt;
  pt.lambda = lambda;
  pt.sqrtg = make_field(grid, FieldKind::Scalar);
  for (int idx = 0; idx < grid.n_nodes(); ++idx) {
    double rho = grid.node_rho[idx];
    double gs[6];
    for (int c = 0; c < 6; ++c) gs[c] = g.at(idx, c) * rho * rho;  // gb^{-1} g in Cartesian
    double lo, hi;
    sym_eig_bounds(gs, lo, hi);
    if (!(lo > 0)) throw SingularMetric("metric not positive definite at node " + std::to_string(idx));
    if (!(lo > lambda) || !(hi < 1.0 / lambda))
      throw EquivalenceViolation("metric leaves the lambda-equivalence window at node " +
                                 std::to_string(idx));
    pt.sqrtg.at(idx, 0) = std::sqrt(lo * hi * (gs[0] + gs[1] + gs[2] - lo - hi));  // product of eigs
  }
  // attach the analytic s when g is analytic
  if (g.has_analytic()) {
    AnalyticFn gfn = g.analytic;
    pt.sqrtg.analytic = [gfn](const Vec3& p, Jet2* out) {
      Jet2 gc[6];
      gfn(p, gc);
      Jet2 det = gc[0] * (gc[1] * gc[2] - gc[3] * gc[3]) - gc[5] * (gc[5] * gc[2] - gc[3] * gc[4]) +
                 gc[4] * (gc[5] * gc[3] - gc[1] * gc[4]);
      Jet2 rho = jet_rho(p);
      Jet2 rho6 = rho * rho;
      rho6 = rho6 * rho6 * rho6;
      out[0] = sqrt(det * rho6);  // det gb = rho^{-6}
    };
    // refresh stored values from the closure for bit-consistency
    Jet2 v;
    for (int idx = 0; idx < grid.n_nodes(); ++idx) {
      pt.sqrtg.analytic(grid.node_x[idx], &v);
      pt.sqrtg.at(idx, 0) = v.v;
    }
  }
  pt.g = std::move(g);
  pt.pi = std::move(pi);
  return pt;
}

inline PhasePoint reference_point(const ChartGrid& g, const ReferenceData& ref) {
  Field gb = sample_analytic(g, FieldKind::SymCov2, gb_metric_fn());
  Field pib = sample_analytic(g, FieldKind::SymCon2, reference_momentum_fn(ref.tau));
  return make_phase_point(std::move(gb), std::move(pib));
}

// pi^{ij} = (K^{ij} - tr_g K g^{ij}) s  from a (0,2) second fundamental form.
inline Field momentum_from_K(const PhasePoint& pt, const Field& K_cov) {
  const ChartGrid& grid = *pt.g.chart;
  Field pi = make_field(grid, FieldKind::SymCon2);
  for (int idx = 0; idx < grid.n_nodes(); ++idx) {
    double ginv[6];
    double gv[6];
    for (int c = 0; c < 6; ++c) gv[c] = pt.g.at(idx, c);
    sym_inv3(gv, ginv);
    double Kup[6], trK = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        double acc = 0;
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            acc += sym_get(ginv, i, a) * sym_get(ginv, j, b) * sym_get(&K_cov.at(idx, 0), a, b);
        Kup[sym3_index(i, j)] = acc;
      }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trK += sym_get(ginv, i, j) * sym_get(&K_cov.at(idx, 0), i, j);
    double s = pt.sqrtg.at(idx, 0);
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j)
        pi.at(idx, sym3_index(i, j)) = (sym_get(Kup, i, j) - trK * sym_get(ginv, i, j)) * s;
  }
  return pi;
}

// K^{ij} recovered from pi (algebraic inverse of momentum_from_K), raised form.
inline Field extrinsic_from_momentum(const PhasePoint& pt) {
  const ChartGrid& grid = *pt.g.chart;
  Field K = make_field(grid, FieldKind::SymCon2);
  for (int idx = 0; idx < grid.n_nodes(); ++idx) {
    double gv[6], ginv[6];
    for (int c = 0; c < 6; ++c) gv[c] = pt.g.at(idx, c);
    sym_inv3(gv, ginv);
    double s = pt.sqrtg.at(idx, 0);
    double tr = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) tr += sym_get(gv, i, j) * sym_get(&pt.pi.at(idx, 0), i, j) / s;
    for (int c = 0; c < 6; ++c) K.at(idx, c) = pt.pi.at(idx, c) / s;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) K.at(idx, sym3_index(i, j)) -= 0.5 * tr * sym_get(ginv, i, j);
  }
  return K;
}

struct LapseShift {
  Field N;  // Scalar
  Field X;  // OneForm
};

}  // namespace ahc
