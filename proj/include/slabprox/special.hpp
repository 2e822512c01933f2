#pragma once

#include <cmath>
#include <stdexcept>

namespace slabprox {

// Scaled complementary error function erfcx(x) = exp(x^2) erfc(x).
// Three regimes:
//   [0, 13]   exp(x^2) * erfc(x); both factors stay in normal range and the
//             libm erfc is good to a few ulp here
//   (13, 30]  Laplace continued fraction, evaluated backward
//   (30, inf) asymptotic series 1/(x sqrt(pi)) (1 - 1/(2x^2) + 3/(4x^4) - ...)
inline double erfcx(double x) {
  if (std::isnan(x)) throw std::invalid_argument("erfcx: NaN input");
  constexpr double inv_sqrt_pi = 0.564189583547756286948079451561;
  if (x < 0.0) {
    if (x < -26.5) throw std::overflow_error("erfcx: overflow for large negative input");
    return 2.0 * std::exp(x * x) - erfcx(-x);
  }
  if (x <= 13.0) return std::exp(x * x) * std::erfc(x);
  if (x <= 30.0) {
    // erfcx(x) = inv_sqrt_pi / (x + (1/2)/(x + (2/2)/(x + (3/2)/(x + ...))))
    const int depth = 40;
    double f = 0.0;
    for (int k = depth; k >= 1; --k) f = (0.5 * k) / (x + f);
    return inv_sqrt_pi / (x + f);
  }
  const double ix2 = 1.0 / (x * x);
  const double s =
      1.0 + ix2 * (-0.5 + ix2 * (0.75 + ix2 * (-1.875 + ix2 * 6.5625)));
  return inv_sqrt_pi * s / x;
}

// log of the slab normalizer Z = integral exp(-a|u| - b u^2 / 2) du with
// a = alpha l1 / s2, b = (1-alpha) l2 / s2; for alpha = 1 this is 2 s2 / l1.
// Stable in log space through erfcx (never forms exp(y^2) directly).
inline double log_slab_normalizer(double alpha, double l1, double l2, double s2) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("log_slab_normalizer: alpha outside [0,1]");
  if (!(s2 > 0.0)) throw std::invalid_argument("log_slab_normalizer: sigma2 must be > 0");
  if (alpha == 1.0) {
    if (!(l1 > 0.0)) throw std::invalid_argument("log_slab_normalizer: lambda1 must be > 0");
    return std::log(2.0 * s2 / l1);
  }
  if (!(l2 > 0.0)) throw std::invalid_argument("log_slab_normalizer: lambda2 must be > 0 when alpha < 1");
  const double a = alpha * l1 / s2;
  const double b = (1.0 - alpha) * l2 / s2;
  constexpr double log_two_pi = 1.83787706640934548356065947281;
  return 0.5 * (log_two_pi - std::log(b)) + std::log(erfcx(a / std::sqrt(2.0 * b)));
}

}  // namespace slabprox
