#pragma once

#include <stdexcept>
#include <string>

namespace ahc {

struct Error : std::runtime_error {
  explicit Error(const std::string& m) : std::runtime_error(m) {}
};

#define AHC_ERROR_TYPE(NAME)                                     \
  struct NAME : Error {                                          \
    explicit NAME(const std::string& m) : Error(#NAME ": " + m) {} \
  }

AHC_ERROR_TYPE(InvalidGeometry);
AHC_ERROR_TYPE(DegenerateRegion);
AHC_ERROR_TYPE(NonFinite);
AHC_ERROR_TYPE(SingularMetric);
AHC_ERROR_TYPE(StencilOutOfDomain);
AHC_ERROR_TYPE(UnknownIdentity);
AHC_ERROR_TYPE(InsufficientSmoothness);
AHC_ERROR_TYPE(EmptyFamily);
AHC_ERROR_TYPE(KindMismatch);
AHC_ERROR_TYPE(SolverDivergence);
AHC_ERROR_TYPE(WeightOutOfRange);
AHC_ERROR_TYPE(WindowViolation);
AHC_ERROR_TYPE(SupportViolation);
AHC_ERROR_TYPE(EquivalenceViolation);
AHC_ERROR_TYPE(ParseError);
AHC_ERROR_TYPE(UnknownKey);
AHC_ERROR_TYPE(RangeError);
AHC_ERROR_TYPE(InsufficientData);
AHC_ERROR_TYPE(IoError);

#undef AHC_ERROR_TYPE

}  // namespace ahc
