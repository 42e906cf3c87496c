#pragma once

// Exact quantities of the hyperbolic ball background gb = rho^{-2} delta,
// rho = (1-|x|^2)/2, plus the analytic field catalogue used by the tests
// and probe families.

#include <cmath>

#include "ahc/field.hpp"
#include "ahc/grid.hpp"
#include "ahc/jet.hpp"
#include "ahc/rng.hpp"

namespace ahc {

// Background metric as an analytic field (exact jets).
inline AnalyticFn gb_metric_fn() {
  return [](const Vec3& p, Jet2* out) {
    Jet2 rho = jet_rho(p);
    Jet2 w = inv(rho * rho);
    for (int c = 0; c < 6; ++c) out[c] = (c < 3) ? w : Jet2(0.0);
  };
}

inline AnalyticFn euclidean_metric_fn() {
  return [](const Vec3&, Jet2* out) {
    for (int c = 0; c < 6; ++c) out[c] = (c < 3) ? Jet2(1.0) : Jet2(0.0);
  };
}

// Christoffel symbols of gb, closed form: (dk_i x_j + dk_j x_i - d_ij x_k)/rho.
inline void gb_christoffel(const Vec3& p, double rho, double* G /*18: k*6+sym(ij)*/) {
  double x[3] = {p.x, p.y, p.z};
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        double v = 0.0;
        if (k == i) v += x[j];
        if (k == j) v += x[i];
        if (i == j) v -= x[k];
        G[k * 6 + sym3_index(i, j)] = v / rho;
      }
}

// Static member of ker T-ring: cosh of hyperbolic distance from the origin.
inline AnalyticFn cosh_distance_fn() {
  return [](const Vec3& p, Jet2* out) {
    Jet2 r2 = jet_r2(p);
    out[0] = (1.0 + r2) / (1.0 - r2);
  };
}

// gb-lowered rotation Killing 1-form about axis `ax` (0,1,2).
inline AnalyticFn rotation_form_fn(int ax) {
  return [ax](const Vec3& p, Jet2* out) {
    Jet2 x[3] = {jet_x(p), jet_y(p), jet_z(p)};
    Jet2 rho = jet_rho(p);
    Jet2 w = inv(rho * rho);
    int a = (ax + 1) % 3, b = (ax + 2) % 3;
    out[0] = Jet2(0.0);
    out[1] = Jet2(0.0);
    out[2] = Jet2(0.0);
    out[a] = -x[b] * w;
    out[b] = x[a] * w;
  };
}

// gb-lowered hyperbolic translation generator along axis `ax`:
// V = (1+|x|^2)/2 e_ax - x_ax x  (Moebius generator), lowered with gb.
inline AnalyticFn translation_form_fn(int ax) {
  return [ax](const Vec3& p, Jet2* out) {
    Jet2 x[3] = {jet_x(p), jet_y(p), jet_z(p)};
    Jet2 r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    Jet2 rho = 0.5 * (1.0 - r2);
    Jet2 w = inv(rho * rho);
    Jet2 sigma = 0.5 * (1.0 + r2);
    for (int i = 0; i < 3; ++i) {
      Jet2 v = -x[ax] * x[i];
      if (i == ax) v = v + sigma;
      out[i] = v * w;
    }
  };
}

// Smooth compactly supported radial profile: (1-t^2)^8 on |t|<1 (C^7 at the
// support edge, which keeps both the quadrature and the wide stencils in
// their asymptotic regime).
inline Jet2 bump_profile(const Jet2& t2) {
  if (t2.v >= 1.0) return Jet2(0.0);
  Jet2 u = 1.0 - t2;
  Jet2 u2 = u * u;
  Jet2 u4 = u2 * u2;
  return u4 * u4;
}

// C^7 monotone step from 0 at t<=0 to 1 at t>=1 (normalized integral of
// t^7 (1-t)^7, a degree-15 polynomial).
inline Jet2 smooth_step7(const Jet2& t) {
  if (t.v <= 0.0) return Jet2(0.0);
  if (t.v >= 1.0) return Jet2(1.0);
  // I(t) = sum_k C(7,k) (-1)^k t^{8+k}/(8+k), S = I(t)/I(1)
  static const double binom[8] = {1, 7, 21, 35, 35, 21, 7, 1};
  Jet2 acc(0.0);
  Jet2 t8 = t * t;         // t^2
  t8 = t8 * t8;            // t^4
  t8 = t8 * t8;            // t^8
  Jet2 cur = t8;
  double I1 = 0;
  for (int k = 0; k < 8; ++k) {
    double coef = binom[k] * ((k % 2) ? -1.0 : 1.0) / (8.0 + k);
    acc = acc + coef * cur;
    I1 += coef;
    cur = cur * t;
  }
  return acc / I1;
}

struct BumpSpec {
  Vec3 center;
  double width = 0.2;
  double amplitude = 1.0;
};

inline Jet2 bump_jet(const Vec3& p, const BumpSpec& b) {
  Jet2 dx = jet_x(p) - b.center.x;
  Jet2 dy = jet_y(p) - b.center.y;
  Jet2 dz = jet_z(p) - b.center.z;
  Jet2 t2 = (dx * dx + dy * dy + dz * dz) / (b.width * b.width);
  return b.amplitude * bump_profile(t2);
}

// Superposition of radial bumps, as a scalar analytic field.
inline AnalyticFn bump_superposition_fn(std::vector<BumpSpec> bumps) {
  return [bumps = std::move(bumps)](const Vec3& p, Jet2* out) {
    Jet2 acc(0.0);
    for (const auto& b : bumps) acc = acc + bump_jet(p, b);
    out[0] = acc;
  };
}

// Random bump centers confined to r in [r_lo, r_hi] (Euclidean radius).
inline std::vector<BumpSpec> random_bumps(Rng& rng, int count, double r_lo, double r_hi, double width,
                                          double max_amplitude = 1.0) {
  std::vector<BumpSpec> out;
  out.reserve(count);
  if (2.0 * width > r_hi - r_lo) width = 0.45 * (r_hi - r_lo);  // keep support inside [r_lo, r_hi]
  for (int i = 0; i < count; ++i) {
    double rr = rng.uniform(r_lo + width, r_hi - width);
    double ct = rng.uniform(-1.0, 1.0);
    double st = std::sqrt(1.0 - ct * ct);
    double ph = rng.uniform(0.0, 2.0 * kPi);
    BumpSpec b;
    b.center = Vec3{rr * st * std::cos(ph), rr * st * std::sin(ph), rr * ct};
    b.width = width;
    b.amplitude = rng.uniform(-max_amplitude, max_amplitude);
    out.push_back(b);
  }
  return out;
}

// Radial bump times a low-degree angular harmonic. Products of a few of
// these have low angular polynomial degree, so the spherical quadrature
// integrates them exactly and integral residuals sit at the radial floor.
inline Jet2 angular_factor(int which, const Vec3& p) {
  Jet2 x = jet_x(p), y = jet_y(p), z = jet_z(p);
  Jet2 r2 = x * x + y * y + z * z;
  switch (which % 7) {
    case 0: return Jet2(1.0);
    case 1: return z / sqrt(r2);
    case 2: return x / sqrt(r2);
    case 3: return y / sqrt(r2);
    case 4: return x * y / r2;
    case 5: return (3.0 * z * z - r2) / r2;
    default: return x * z / r2;
  }
}

struct HarmonicBump {
  double center, width, amplitude;
  int harmonic;
};

inline Jet2 harmonic_bump_jet(const Vec3& p, const HarmonicBump& b) {
  Jet2 r = sqrt(jet_r2(p) + 1e-300);
  Jet2 t = (r - b.center) / b.width;
  return b.amplitude * bump_profile(t * t) * angular_factor(b.harmonic, p);
}

inline std::vector<HarmonicBump> random_harmonic_bumps(Rng& rng, int count, double r_lo, double r_hi,
                                                       int max_harmonic = 7) {
  std::vector<HarmonicBump> out;
  for (int i = 0; i < count; ++i) {
    HarmonicBump b;
    b.width = rng.uniform(0.3, 0.48) * (r_hi - r_lo);
    b.center = rng.uniform(r_lo + b.width, r_hi - b.width);
    b.amplitude = rng.uniform(-1.0, 1.0);
    b.harmonic = int(rng.next_u64() % std::uint64_t(max_harmonic));
    out.push_back(b);
  }
  return out;
}

inline AnalyticFn harmonic_field_fn(FieldKind kind, Rng rng, int bumps_per_comp, double r_lo,
                                    double r_hi) {
  int nc = ncomp(kind);
  std::vector<std::vector<HarmonicBump>> comps(nc);
  for (int c = 0; c < nc; ++c) {
    Rng sub = rng.fork(31 * c + 1);
    comps[c] = random_harmonic_bumps(sub, bumps_per_comp, r_lo, r_hi);
  }
  return [comps = std::move(comps), nc](const Vec3& p, Jet2* out) {
    for (int c = 0; c < nc; ++c) {
      Jet2 acc(0.0);
      for (const auto& b : comps[c]) acc = acc + harmonic_bump_jet(p, b);
      out[c] = acc;
    }
  };
}

// Multi-component analytic field from independent bump superpositions.
inline AnalyticFn bump_tensor_fn(FieldKind kind, Rng rng, int bumps_per_comp, double r_lo, double r_hi,
                                 double width) {
  int nc = ncomp(kind);
  std::vector<std::vector<BumpSpec>> comps(nc);
  for (int c = 0; c < nc; ++c) comps[c] = random_bumps(rng, bumps_per_comp, r_lo, r_hi, width);
  return [comps = std::move(comps), nc](const Vec3& p, Jet2* out) {
    for (int c = 0; c < nc; ++c) {
      Jet2 acc(0.0);
      for (const auto& b : comps[c]) acc = acc + bump_jet(p, b);
      out[c] = acc;
    }
  };
}

// Pointwise combination helpers for analytic fields.
inline AnalyticFn scale_fn(AnalyticFn f, double c, int n) {
  return [f = std::move(f), c, n](const Vec3& p, Jet2* out) {
    f(p, out);
    for (int i = 0; i < n; ++i) out[i] = out[i] * c;
  };
}
inline AnalyticFn add_fn(AnalyticFn a, AnalyticFn b, int n) {
  return [a = std::move(a), b = std::move(b), n](const Vec3& p, Jet2* out) {
    Jet2 tmp[kMaxComp];
    a(p, out);
    b(p, tmp);
    for (int i = 0; i < n; ++i) out[i] = out[i] + tmp[i];
  };
}
// Multiply a multi-component field by an analytic scalar.
inline AnalyticFn modulate_fn(AnalyticFn field, AnalyticFn scalar, int n) {
  return [field = std::move(field), scalar = std::move(scalar), n](const Vec3& p, Jet2* out) {
    Jet2 s;
    scalar(p, &s);
    field(p, out);
    for (int i = 0; i < n; ++i) out[i] = out[i] * s;
  };
}

// Smooth radial window: 1 on [a+w, b-w], 0 outside [a, b] (radii), C^7.
inline AnalyticFn radial_window_fn(double a, double b, double w) {
  return [a, b, w](const Vec3& p, Jet2* out) {
    Jet2 r2 = jet_r2(p);
    Jet2 r = sqrt(r2 + 1e-30);
    out[0] = smooth_step7((r - a) / w) * smooth_step7((b - r) / w);
  };
}

// rho^s as an analytic scalar.
inline AnalyticFn rho_power_fn(double s) {
  return [s](const Vec3& p, Jet2* out) { out[0] = pow(jet_rho(p), s); };
}

}  // namespace ahc
