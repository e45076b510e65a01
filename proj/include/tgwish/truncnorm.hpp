#pragma once

#include <cmath>

#include "tgwish/errors.hpp"
#include "tgwish/mathutil.hpp"
#include "tgwish/rng.hpp"

namespace tgwish {

// Normal(mean, sd) restricted to the open interval (lower, upper); either
// bound may be infinite.
struct TruncNormalSpec {
  double mean = 0.0;
  double sd = 1.0;
  double lower = kNegInf;
  double upper = kInf;

  TruncNormalSpec() = default;
  TruncNormalSpec(double m, double s, double lo, double hi)
      : mean(m), sd(s), lower(lo), upper(hi) {
    if (!(sd > 0.0)) throw numeric_error("truncnorm: sd must be positive");
    if (!(lower < upper)) throw numeric_error("truncnorm: empty interval");
  }
};

namespace detail {

// One-sided standard-normal tail draw z >= lo (lo can be very large);
// Robert (1995) translated-exponential rejection.
inline double rtail(double lo, Rng& rng) {
  if (lo <= 0.0) {
    for (;;) {
      const double z = rng.normal();
      if (z >= lo) return z;
    }
  }
  const double alpha = 0.5 * (lo + std::sqrt(lo * lo + 4.0));
  for (;;) {
    const double z = lo + rng.exponential() / alpha;
    const double d = z - alpha;
    if (std::log(rng.uniform()) <= -0.5 * d * d) return z;
  }
}

}  // namespace detail

inline double sample_truncnorm(const TruncNormalSpec& spec, Rng& rng) {
  const double a = (spec.lower - spec.mean) / spec.sd;
  const double b = (spec.upper - spec.mean) / spec.sd;
  double z;
  if (a == kNegInf && b == kInf) {
    z = rng.normal();
  } else if (a == kNegInf) {
    z = -detail::rtail(-b, rng);
  } else if (b == kInf) {
    z = detail::rtail(a, rng);
  } else {
    const double p = normal_prob_interval(a, b);
    if (p > 0.15) {
      do {
        z = rng.normal();
      } while (z <= a || z >= b);
    } else if (std::min(std::fabs(a), std::fabs(b)) < 6.0) {
      // Uniform proposal with the exact normal kernel bound on the interval.
      const double peak = (a <= 0.0 && b >= 0.0) ? 0.0 : (a > 0.0 ? a : b);
      for (;;) {
        z = rng.uniform(a, b);
        if (std::log(rng.uniform()) <= 0.5 * (peak * peak - z * z)) break;
      }
    } else {
      // Both endpoints in one far tail.
      const double sgn = a > 0.0 ? 1.0 : -1.0;
      const double lo = sgn > 0 ? a : -b, hi = sgn > 0 ? b : -a;
      do {
        z = detail::rtail(lo, rng);
      } while (z >= hi);
      z *= sgn;
    }
  }
  double x = spec.mean + spec.sd * z;
  // Guard against landing exactly on a bound after rounding.
  if (x <= spec.lower) x = std::nextafter(spec.lower, kInf);
  if (x >= spec.upper) x = std::nextafter(spec.upper, kNegInf);
  return x;
}

inline double truncnorm_logpdf(double x, const TruncNormalSpec& spec) {
  if (x <= spec.lower || x >= spec.upper) return kNegInf;
  const double a = (spec.lower - spec.mean) / spec.sd;
  const double b = (spec.upper - spec.mean) / spec.sd;
  return normal_logpdf(x, spec.mean, spec.sd) - log_normal_prob_interval(a, b);
}

// log of the interval mass Phi(b) - Phi(a) after standardizing; the MH
// acceptance ratio for a symmetric truncated-normal walk reduces to a ratio
// of these.
inline double truncnorm_log_mass(double mean, double sd, double lower, double upper) {
  return log_normal_prob_interval((lower - mean) / sd, (upper - mean) / sd);
}

}  // namespace tgwish
