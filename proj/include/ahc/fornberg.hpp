#pragma once

// Finite-difference weights on arbitrary node sets (Fornberg's recursion).
// A 5-point window gives O(h^4)/O(h^3) truncation for first/second
// derivatives regardless of node spacing, which keeps second-order
// convergence intact on the non-uniform Gauss-Legendre grids used here.

#include <array>
#include <cstddef>
#include <vector>

namespace ahc {

// Weights for derivatives of order 0..M at point z from nodes x[0..n-1].
// c has shape (n, M+1): c[i*(M+1)+m] is the weight of node i for the m-th
// derivative.
inline void fornberg_weights(double z, const double* x, int n, int M, double* c) {
  for (int i = 0; i < n * (M + 1); ++i) c[i] = 0.0;
  double c1 = 1.0, c4 = x[0] - z;
  c[0] = 1.0;
  for (int i = 1; i < n; ++i) {
    int mn = i < M ? i : M;
    double c2 = 1.0, c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int m = mn; m >= 1; --m)
          c[(i * (M + 1)) + m] = c1 * (m * c[((i - 1) * (M + 1)) + m - 1] - c5 * c[((i - 1) * (M + 1)) + m]) / c2;
        c[i * (M + 1)] = -c1 * c5 * c[(i - 1) * (M + 1)] / c2;
      }
      for (int m = mn; m >= 1; --m)
        c[(j * (M + 1)) + m] = (c4 * c[(j * (M + 1)) + m] - m * c[(j * (M + 1)) + m - 1]) / c3;
      c[j * (M + 1)] = c4 * c[j * (M + 1)] / c3;
    }
    c1 = c2;
  }
}

// Precomputed stencil along one coordinate axis: for each node position on
// the line, the window offset and weights for the 1st and 2nd derivative.
struct LineStencil {
  int n = 0;           // nodes on the line
  int width = 5;       // window size
  bool periodic = false;
  double period = 0.0;
  std::vector<int> first;   // window start index per node (may wrap if periodic)
  std::vector<double> w1;   // n*width first-derivative weights
  std::vector<double> w2;   // n*width second-derivative weights
  bool one_sided = false;   // any non-centered window used

  static LineStencil build(const std::vector<double>& x, bool periodic, double period) {
    LineStencil s;
    s.n = int(x.size());
    s.periodic = periodic;
    s.period = period;
    int W = s.width;
    if (s.n < W) W = s.n;  // degenerate small lines
    s.width = W;
    s.first.resize(s.n);
    s.w1.assign(size_t(s.n) * W, 0.0);
    s.w2.assign(size_t(s.n) * W, 0.0);
    std::vector<double> xs(W);
    std::vector<double> c(size_t(W) * 3);
    for (int i = 0; i < s.n; ++i) {
      int f;
      if (periodic) {
        f = i - W / 2;
      } else {
        f = i - W / 2;
        if (f < 0) f = 0;
        if (f + W > s.n) f = s.n - W;
        if (f != i - W / 2) s.one_sided = true;
      }
      s.first[i] = f;
      for (int k = 0; k < W; ++k) {
        int idx = f + k;
        double shift = 0.0;
        if (periodic) {
          while (idx < 0) { idx += s.n; shift -= period; }
          while (idx >= s.n) { idx -= s.n; shift += period; }
        }
        xs[k] = x[idx] + shift;
      }
      fornberg_weights(x[i], xs.data(), W, 2, c.data());
      for (int k = 0; k < W; ++k) {
        s.w1[size_t(i) * W + k] = c[size_t(k) * 3 + 1];
        s.w2[size_t(i) * W + k] = c[size_t(k) * 3 + 2];
      }
    }
    return s;
  }

  // Node index of window slot k for line position i.
  int node(int i, int k) const {
    int idx = first[i] + k;
    if (periodic) {
      idx %= n;
      if (idx < 0) idx += n;
    }
    return idx;
  }
};

}  // namespace ahc
