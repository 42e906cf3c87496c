#pragma once

// Convergence studies: run a residual-producing operation across a
// resolution ladder and fit the rate (least-squares slope of log residual
// against log h, h ~ 1/resolution).

#include <cmath>
#include <functional>
#include <vector>

#include "ahc/residual.hpp"

namespace ahc {

inline Residual convergence_study(const std::function<double(int)>& residual_at,
                                  const std::vector<int>& resolutions, double floor = 1e-12) {
  if (resolutions.size() < 2) throw InsufficientData("need at least two resolutions");
  Residual out;
  std::vector<double> res;
  for (int r : resolutions) res.push_back(residual_at(r));
  out.sup = res.back();
  out.l2 = res.back();
  out.resolution = resolutions.back();
  bool saturated = true;
  for (double v : res) saturated = saturated && v <= floor;
  out.saturated = saturated;
  if (!saturated) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = int(res.size());
    for (int i = 0; i < n; ++i) {
      double x = -std::log(double(resolutions[i]));
      double y = std::log(std::max(res[i], 1e-300));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    out.rate = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return out;
}

}  // namespace ahc
