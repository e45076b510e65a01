#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace tgwish {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

inline double log_mean_exp(std::span<const double> xs) {
  return log_sum_exp(xs) - std::log(static_cast<double>(xs.size()));
}

inline double normal_logpdf(double x, double mu, double sd) {
  const double z = (x - mu) / sd;
  return -0.5 * z * z - std::log(sd) - 0.918938533204672742;  // log(sqrt(2*pi))
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

// P(a < Z < b) for standard normal, stable in either tail.
inline double normal_prob_interval(double a, double b) {
  if (!(a < b)) return 0.0;
  if (a >= 0.0) return 0.5 * (std::erfc(a * M_SQRT1_2) - std::erfc(b * M_SQRT1_2));
  if (b <= 0.0) return 0.5 * (std::erfc(-b * M_SQRT1_2) - std::erfc(-a * M_SQRT1_2));
  return 0.5 * (std::erf(b * M_SQRT1_2) + std::erf(-a * M_SQRT1_2));
}

// log P(a < Z < b); falls back to a Mills-ratio expansion when the interval
// sits so far out that erfc underflows.
inline double log_normal_prob_interval(double a, double b) {
  const double p = normal_prob_interval(a, b);
  if (p > 0.0) return std::log(p);
  // Both endpoints in the same far tail. Use symmetry to put them in the
  // upper tail, then log Phi-bar(a) + log(1 - Phi-bar(b)/Phi-bar(a)) with
  // Phi-bar(x) ~ phi(x)/x * (1 - 1/x^2 + 3/x^4).
  double lo = a, hi = b;
  if (hi <= 0.0) {
    lo = -b;
    hi = -a;
  }
  auto log_sf = [](double x) {
    const double x2 = x * x;
    return -0.5 * x2 - std::log(x) - 0.918938533204672742 +
           std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
  };
  const double la = log_sf(lo);
  const double lb = hi == kInf ? kNegInf : log_sf(hi);
  return la + std::log1p(-std::exp(std::min(lb - la, -1e-300)));
}

// Regularized lower incomplete gamma P(a, x), series + continued fraction.
inline double gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  if (a <= 0.0) return 1.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a, sum = term, ap = a;
    for (int k = 0; k < 500; ++k) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  // Lentz continued fraction for Q(a, x).
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int k = 1; k < 500; ++k) {
    const double an = -k * (k - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  const double q = std::exp(-x + a * std::log(x) - lg) * h;
  return 1.0 - q;
}

inline double gamma_cdf(double x, double shape, double rate) {
  return gamma_p(shape, x * rate);
}

inline double chi_squared_cdf(double x, double dof) {
  return gamma_p(0.5 * dof, 0.5 * x);
}

// One-sample Kolmogorov-Smirnov statistic against a CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

inline double ks_two_sample(std::vector<double> xs, std::vector<double> ys) {
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < xs.size() && j < ys.size()) {
    if (xs[i] <= ys[j])
      ++i;
    else
      ++j;
    const double fx = static_cast<double>(i) / xs.size();
    const double fy = static_cast<double>(j) / ys.size();
    d = std::max(d, std::fabs(fx - fy));
  }
  return d;
}

inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = p * (static_cast<double>(sorted.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double w = h - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

inline double quantile(std::vector<double> xs, double p) {
  std::sort(xs.begin(), xs.end());
  return quantile_sorted(xs, p);
}

}  // namespace tgwish
