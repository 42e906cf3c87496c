#pragma once

#include <optional>
#include <string>

namespace ahc {

struct Residual {
  double l2 = 0.0;
  double sup = 0.0;
  std::optional<double> rate;  // only set by convergence studies
  bool saturated = false;      // residuals at the rounding floor
  std::string id;
  double delta = 0.0;
  double region_R = 0.0;
  int resolution = 0;
  std::string notes;  // e.g. "pole rings excluded", "one-sided stencils"
};

}  // namespace ahc
