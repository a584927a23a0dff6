#pragma once

#include <cmath>
#include <limits>

namespace bayesrake {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline double logistic(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

// log(1 + e^x) without overflow.
inline double log1p_exp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double normal_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * kLog2Pi - std::log(sd) - 0.5 * z * z;
}

// Half-normal on (0, inf) with scale sd.
inline double half_normal_logpdf(double x, double sd) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(2.0) + normal_logpdf(x, 0.0, sd);
}

// Poisson log-pmf at integer count k with real mean mu >= 0.
inline double poisson_logpmf(double k, double mu) {
  if (mu == 0.0)
    return k == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return k * std::log(mu) - mu - std::lgamma(k + 1.0);
}

// Cauchy(loc, scale) restricted to (0, inf).
inline double half_cauchy_normalizer(double loc, double scale) {
  return 0.5 + std::atan(loc / scale) / M_PI;
}

inline double half_cauchy_logpdf(double x, double loc, double scale) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  const double z = (x - loc) / scale;
  return -std::log(M_PI * scale * half_cauchy_normalizer(loc, scale)) -
         std::log1p(z * z);
}

// d/dx of half_cauchy_logpdf for x > 0.
inline double half_cauchy_dlogpdf(double x, double loc, double scale) {
  const double z = (x - loc) / scale;
  return -2.0 * z / (scale * (1.0 + z * z));
}

}  // namespace bayesrake
