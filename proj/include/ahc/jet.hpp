#pragma once

// Second-order forward jets over R^3: value, gradient, symmetric Hessian.
// Used to carry exact derivatives of analytically defined fields through
// pointwise tensor algebra.

#include <array>
#include <cmath>
#include <cstddef>

namespace ahc {

// Symmetric 3x3 packing: (xx, yy, zz, yz, xz, xy).
inline constexpr int sym3_index(int i, int j) {
  if (i == j) return i;
  return 6 - i - j;  // (1,2)->3, (0,2)->4, (0,1)->5
}

struct Jet2 {
  double v = 0.0;
  std::array<double, 3> g{0.0, 0.0, 0.0};
  std::array<double, 6> h{0.0, 0.0, 0.0, 0.0, 0.0, 0.0};

  Jet2() = default;
  Jet2(double value) : v(value) {}
  static Jet2 constant(double c) { return Jet2(c); }
  // Coordinate jet: x_i with unit gradient in slot i.
  static Jet2 coordinate(double value, int i) {
    Jet2 j(value);
    j.g[i] = 1.0;
    return j;
  }

  Jet2 operator-() const {
    Jet2 r;
    r.v = -v;
    for (int i = 0; i < 3; ++i) r.g[i] = -g[i];
    for (int i = 0; i < 6; ++i) r.h[i] = -h[i];
    return r;
  }
};

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.v = a.v + b.v;
  for (int i = 0; i < 3; ++i) r.g[i] = a.g[i] + b.g[i];
  for (int i = 0; i < 6; ++i) r.h[i] = a.h[i] + b.h[i];
  return r;
}
inline Jet2 operator-(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.v = a.v - b.v;
  for (int i = 0; i < 3; ++i) r.g[i] = a.g[i] - b.g[i];
  for (int i = 0; i < 6; ++i) r.h[i] = a.h[i] - b.h[i];
  return r;
}
inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.v = a.v * b.v;
  for (int i = 0; i < 3; ++i) r.g[i] = a.g[i] * b.v + a.v * b.g[i];
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      int k = sym3_index(i, j);
      r.h[k] = a.h[k] * b.v + a.g[i] * b.g[j] + a.g[j] * b.g[i] + a.v * b.h[k];
    }
  return r;
}

// Composition with a scalar function: f(a), given f(a.v), f'(a.v), f''(a.v).
inline Jet2 compose(const Jet2& a, double f, double fp, double fpp) {
  Jet2 r;
  r.v = f;
  for (int i = 0; i < 3; ++i) r.g[i] = fp * a.g[i];
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      int k = sym3_index(i, j);
      r.h[k] = fp * a.h[k] + fpp * a.g[i] * a.g[j];
    }
  return r;
}

inline Jet2 inv(const Jet2& a) {
  double iv = 1.0 / a.v;
  return compose(a, iv, -iv * iv, 2.0 * iv * iv * iv);
}
inline Jet2 operator/(const Jet2& a, const Jet2& b) { return a * inv(b); }
inline Jet2 operator+(const Jet2& a, double c) { Jet2 r = a; r.v += c; return r; }
inline Jet2 operator+(double c, const Jet2& a) { return a + c; }
inline Jet2 operator-(const Jet2& a, double c) { Jet2 r = a; r.v -= c; return r; }
inline Jet2 operator-(double c, const Jet2& a) { return (-a) + c; }
inline Jet2 operator*(const Jet2& a, double c) {
  Jet2 r;
  r.v = a.v * c;
  for (int i = 0; i < 3; ++i) r.g[i] = a.g[i] * c;
  for (int i = 0; i < 6; ++i) r.h[i] = a.h[i] * c;
  return r;
}
inline Jet2 operator*(double c, const Jet2& a) { return a * c; }
inline Jet2 operator/(const Jet2& a, double c) { return a * (1.0 / c); }
inline Jet2 operator/(double c, const Jet2& a) { return inv(a) * c; }

inline Jet2 sqrt(const Jet2& a) {
  double s = std::sqrt(a.v);
  return compose(a, s, 0.5 / s, -0.25 / (s * a.v));
}
inline Jet2 exp(const Jet2& a) {
  double e = std::exp(a.v);
  return compose(a, e, e, e);
}
inline Jet2 log(const Jet2& a) {
  return compose(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v));
}
inline Jet2 pow(const Jet2& a, double p) {
  double f = std::pow(a.v, p);
  return compose(a, f, p * f / a.v, p * (p - 1.0) * f / (a.v * a.v));
}
inline Jet2 sin(const Jet2& a) { return compose(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v)); }
inline Jet2 cos(const Jet2& a) { return compose(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v)); }
inline Jet2 tanh(const Jet2& a) {
  double t = std::tanh(a.v);
  return compose(a, t, 1.0 - t * t, -2.0 * t * (1.0 - t * t));
}

}  // namespace ahc
