#pragma once

// Spherical-shell chart of the Poincare ball model: rho = (1-|x|^2)/2,
// background h = Euclidean, gb = rho^{-2} h (exact hyperbolic 3-space).
// The shell excises an inner ball (inner boundary) and truncates at
// r_outer < 1 (numerical stand-in for the boundary at infinity).

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ahc/errors.hpp"
#include "ahc/fornberg.hpp"

namespace ahc {

inline constexpr double kPi = 3.14159265358979323846;

// Gauss-Legendre nodes/weights on [-1,1].
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (t * p1 - p0) / (t * t - 1.0);
    x[i] = -t;
    x[n - 1 - i] = t;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

struct Vec3 {
  double x = 0, y = 0, z = 0;
};

inline double rho_of_r(double r) { return 0.5 * (1.0 - r * r); }
// Omega_R boundary radius: rho > e^{-2R}  <=>  r < sqrt(1 - 2 e^{-2R}).
inline double omega_radius(double R) {
  double t = 1.0 - 2.0 * std::exp(-2.0 * R);
  return t > 0.0 ? std::sqrt(t) : -1.0;
}

struct ChartGrid {
  double r_inner = 0, r_outer = 0;
  int n_r = 0;      // radial cells; 3 Gauss-Legendre nodes per cell
  int n_theta = 0;  // Gauss-Legendre nodes in cos(theta)
  int n_phi = 0;    // uniform longitudes

  std::vector<double> r;        // radial node positions (3*n_r)
  std::vector<double> wr;       // radial quadrature weights (dr measure)
  std::vector<double> theta;    // colatitudes (n_theta), increasing
  std::vector<double> wcos;     // weights for the d(cos theta) measure
  std::vector<double> phi;      // longitudes (n_phi)
  double wphi = 0;              // uniform weight 2*pi/n_phi

  std::vector<double> rho_r;    // rho per radial node
  std::vector<double> quad_h;   // per radial-angular factorized? full weight per node
  // Per-node caches (size = n_nodes)
  std::vector<double> node_rho;
  std::vector<Vec3> node_x;

  LineStencil sten_r, sten_theta, sten_phi;

  int nr_nodes() const { return 3 * n_r; }
  int n_nodes() const { return nr_nodes() * n_theta * n_phi; }
  int index(int ir, int it, int ip) const { return (ir * n_theta + it) * n_phi + ip; }
  void split(int idx, int& ir, int& it, int& ip) const {
    ip = idx % n_phi;
    idx /= n_phi;
    it = idx % n_theta;
    ir = idx / n_theta;
  }
  Vec3 position(int idx) const { return node_x[idx]; }
  // Weight of node for the Euclidean measure (r^2 dr dcos dphi).
  double weight_h(int idx) const { return quad_h[idx]; }
  double rho(int idx) const { return node_rho[idx]; }

  // Interior radial band check: true if node lies within `cells` radial cells
  // of either shell boundary.
  bool in_boundary_band(int idx, int cells) const {
    int ir = idx / (n_theta * n_phi);
    return ir < 3 * cells || ir >= nr_nodes() - 3 * cells;
  }
  bool pole_ring(int idx) const {
    int it = (idx / n_phi) % n_theta;
    return it == 0 || it == n_theta - 1;
  }
};

inline ChartGrid build_ball_chart(double r_inner, double r_outer, int n_r, int n_ang) {
  if (!(r_inner > 0.0) || !(r_inner < r_outer) || !(r_outer < 1.0))
    throw InvalidGeometry("need 0 < r_inner < r_outer < 1, got [" + std::to_string(r_inner) + ", " +
                          std::to_string(r_outer) + "]");
  if (n_r < 8 || n_ang < 8) throw InvalidGeometry("grid counts must be >= 8");

  ChartGrid g;
  g.r_inner = r_inner;
  g.r_outer = r_outer;
  g.n_r = n_r;
  g.n_theta = n_ang;
  g.n_phi = n_ang;

  std::vector<double> gx, gw;
  gauss_legendre(3, gx, gw);
  double dr = (r_outer - r_inner) / n_r;
  g.r.resize(3 * n_r);
  g.wr.resize(3 * n_r);
  for (int c = 0; c < n_r; ++c) {
    double a = r_inner + c * dr;
    for (int k = 0; k < 3; ++k) {
      g.r[3 * c + k] = a + 0.5 * dr * (gx[k] + 1.0);
      g.wr[3 * c + k] = 0.5 * dr * gw[k];
    }
  }

  std::vector<double> cx, cw;
  gauss_legendre(g.n_theta, cx, cw);
  g.theta.resize(g.n_theta);
  g.wcos.resize(g.n_theta);
  for (int j = 0; j < g.n_theta; ++j) {
    g.theta[j] = std::acos(cx[g.n_theta - 1 - j]);  // increasing theta
    g.wcos[j] = cw[g.n_theta - 1 - j];
  }

  g.phi.resize(g.n_phi);
  for (int k = 0; k < g.n_phi; ++k) g.phi[k] = 2.0 * kPi * k / g.n_phi;
  g.wphi = 2.0 * kPi / g.n_phi;

  g.rho_r.resize(g.nr_nodes());
  for (int i = 0; i < g.nr_nodes(); ++i) g.rho_r[i] = rho_of_r(g.r[i]);

  g.node_rho.resize(g.n_nodes());
  g.node_x.resize(g.n_nodes());
  g.quad_h.resize(g.n_nodes());
  for (int ir = 0; ir < g.nr_nodes(); ++ir)
    for (int it = 0; it < g.n_theta; ++it)
      for (int ip = 0; ip < g.n_phi; ++ip) {
        int idx = g.index(ir, it, ip);
        double rr = g.r[ir], th = g.theta[it], ph = g.phi[ip];
        double st = std::sin(th);
        g.node_x[idx] = Vec3{rr * st * std::cos(ph), rr * st * std::sin(ph), rr * std::cos(th)};
        g.node_rho[idx] = g.rho_r[ir];
        g.quad_h[idx] = g.wr[ir] * rr * rr * g.wcos[it] * g.wphi;
      }

  g.sten_r = LineStencil::build(g.r, false, 0.0);
  g.sten_theta = LineStencil::build(g.theta, false, 0.0);
  g.sten_phi = LineStencil::build(g.phi, true, 2.0 * kPi);
  return g;
}

struct DefiningFunction {
  // rho = (1-|x|^2)/2 with d rho = -x and Euclidean Hessian = -I.
  std::vector<double> value;
  std::vector<Vec3> gradient;
  // euclidean_hessian is -identity at every node; kept as the constant.
  double hessian_diag = -1.0;
};

inline DefiningFunction evaluate_defining_function(const ChartGrid& g) {
  DefiningFunction f;
  f.value.resize(g.n_nodes());
  f.gradient.resize(g.n_nodes());
  for (int i = 0; i < g.n_nodes(); ++i) {
    f.value[i] = g.node_rho[i];
    Vec3 p = g.node_x[i];
    f.gradient[i] = Vec3{-p.x, -p.y, -p.z};
  }
  return f;
}

enum class RegionKind { OmegaR, ER, AR, All };

struct RegionMask {
  RegionKind kind = RegionKind::All;
  double R = 0;
  std::vector<std::uint8_t> member;
  // Membership uses the strict inequality rho > e^{-2R} for Omega_R.
  bool strict_inequality = true;
  int count = 0;
};

inline RegionMask region_mask(const ChartGrid& g, RegionKind kind, double R) {
  if (kind != RegionKind::All && !(R > 0)) throw InvalidGeometry("region threshold R must be positive");
  RegionMask m;
  m.kind = kind;
  m.R = R;
  m.member.assign(g.n_nodes(), 0);
  double thr = std::exp(-2.0 * R);
  double thr_half = std::exp(-R);  // Omega_{R/2} threshold
  for (int i = 0; i < g.n_nodes(); ++i) {
    double rho = g.node_rho[i];
    bool in = false;
    switch (kind) {
      case RegionKind::All: in = true; break;
      case RegionKind::OmegaR: in = rho > thr; break;
      case RegionKind::ER: in = !(rho > thr); break;
      case RegionKind::AR: in = (rho > thr) && !(rho > thr_half); break;
    }
    if (in) {
      m.member[i] = 1;
      ++m.count;
    }
  }
  if (m.count == 0) throw DegenerateRegion("region contains no grid node (R=" + std::to_string(R) + ")");
  return m;
}

inline RegionMask full_region(const ChartGrid& g) {
  RegionMask m;
  m.kind = RegionKind::All;
  m.member.assign(g.n_nodes(), 1);
  m.count = g.n_nodes();
  return m;
}

// Quintic smoothstep profile: 1 on (-inf,1], 0 on [2,inf), C^2 in between.
inline double cutoff_profile(double t) {
  if (t <= 1.0) return 1.0;
  if (t >= 2.0) return 0.0;
  double s = t - 1.0;
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

inline std::vector<double> cutoff_chi(const ChartGrid& g, double R) {
  if (!(R > 0)) throw InvalidGeometry("cutoff scale R must be positive");
  // Requires Omega_R to intersect the grid.
  double thr = std::exp(-2.0 * R);
  bool any = false;
  for (int i = 0; i < g.nr_nodes() && !any; ++i) any = g.rho_r[i] > thr;
  if (!any) throw DegenerateRegion("Omega_R contains no grid node; cutoff degenerate");
  std::vector<double> chi(g.n_nodes());
  for (int i = 0; i < g.n_nodes(); ++i) chi[i] = cutoff_profile(-std::log(g.node_rho[i]) / R);
  return chi;
}

enum class Measure { Hyperbolic, Euclidean };  // g-ring vs h-ring volume measure

// Integral of f * rho^dexp over a region. For the hyperbolic measure
// d mu(gb) = rho^{-3} d mu(h).
template <class F>
double integrate_weighted_fn(const ChartGrid& g, F&& f, double dexp, const RegionMask& region,
                             Measure measure = Measure::Hyperbolic) {
  double acc = 0.0;
  for (int i = 0; i < g.n_nodes(); ++i) {
    if (!region.member[i]) continue;
    double rho = g.node_rho[i];
    double w = g.quad_h[i];
    if (measure == Measure::Hyperbolic) w /= rho * rho * rho;
    double v = f(i);
    acc += v * std::pow(rho, dexp) * w;
  }
  return acc;
}

inline double integrate_weighted(const ChartGrid& g, const std::vector<double>& f, double dexp,
                                 const RegionMask& region, Measure measure = Measure::Hyperbolic) {
  for (int i = 0; i < g.n_nodes(); ++i)
    if (region.member[i] && !std::isfinite(f[i]))
      throw NonFinite("integrand not finite at node " + std::to_string(i));
  return integrate_weighted_fn(g, [&](int i) { return f[i]; }, dexp, region, measure);
}

enum class BoundarySphere { Inner, Outer };

// Boundary quadrature: same angular rule on the sphere r = r0, with the
// gb-induced area element r0^2 sin(theta)/rho(r0)^2.
template <class F>
double boundary_integrate_fn(const ChartGrid& g, BoundarySphere which, F&& f_angular) {
  double r0 = which == BoundarySphere::Inner ? g.r_inner : g.r_outer;
  double rho0 = rho_of_r(r0);
  double acc = 0.0;
  for (int it = 0; it < g.n_theta; ++it)
    for (int ip = 0; ip < g.n_phi; ++ip)
      acc += f_angular(it, ip) * g.wcos[it] * g.wphi;
  return acc * r0 * r0 / (rho0 * rho0);
}

// Boundary values of a grid scalar by 5-point radial extrapolation.
inline double radial_boundary_value(const ChartGrid& g, const std::vector<double>& f, BoundarySphere which,
                                    int it, int ip) {
  int W = 5;
  double r0 = which == BoundarySphere::Inner ? g.r_inner : g.r_outer;
  int f0 = which == BoundarySphere::Inner ? 0 : g.nr_nodes() - W;
  double xs[5], c[15];
  for (int k = 0; k < W; ++k) xs[k] = g.r[f0 + k];
  fornberg_weights(r0, xs, W, 0, c);
  double acc = 0.0;
  for (int k = 0; k < W; ++k) acc += c[k] * f[g.index(f0 + k, it, ip)];
  return acc;
}

inline double boundary_integrate(const ChartGrid& g, const std::vector<double>& f, BoundarySphere which) {
  return boundary_integrate_fn(g, which,
                               [&](int it, int ip) { return radial_boundary_value(g, f, which, it, ip); });
}

}  // namespace ahc
