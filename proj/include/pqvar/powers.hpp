#pragma once

#include <cmath>

namespace pqvar {

/// sign(x) |x|^e with exact pass-through for e == 1 (so q = 2 reactions stay
/// branch-free exact).
inline double spow(double x, double e) {
  if (x == 0.0) return 0.0;
  if (e == 1.0) return x;
  const double m = std::pow(std::abs(x), e);
  return x > 0.0 ? m : -m;
}

/// |x|^e with apow(0, e) = 0 (exponents here are always positive).
inline double apow(double x, double e) {
  if (x == 0.0) return 0.0;
  if (e == 1.0) return std::abs(x);
  if (e == 2.0) return x * x;
  return std::pow(std::abs(x), e);
}

}  // namespace pqvar
