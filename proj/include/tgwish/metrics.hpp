#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "tgwish/errors.hpp"
#include "tgwish/mathutil.hpp"

namespace tgwish {

// Root-averaged mean squared error over areas, replicates, and posterior
// iterations: sqrt( mean_{i,s,b} (theta_is^(b) - theta_is)^2 ).
inline double ramse(const std::vector<Eigen::VectorXd>& truth,
                    const std::vector<Eigen::MatrixXd>& traces) {
  if (truth.size() != traces.size() || truth.empty())
    throw data_error("ramse: replicate counts do not match");
  double sum = 0.0;
  long cells = 0;
  for (std::size_t s = 0; s < truth.size(); ++s) {
    const auto& t = traces[s];
    if (t.cols() != truth[s].size()) throw data_error("ramse: area counts do not match");
    for (long b = 0; b < t.rows(); ++b)
      for (long i = 0; i < t.cols(); ++i) {
        const double d = t(b, i) - truth[s](i);
        sum += d * d;
        ++cells;
      }
  }
  if (cells == 0) throw data_error("ramse: no posterior draws");
  return std::sqrt(sum / static_cast<double>(cells));
}

struct CvMetrics {
  double bias2 = 0.0;
  double var = 0.0;
  double mse() const { return bias2 + var; }
};

// Average predictive squared bias and average predictive variance over the
// held-out cells; MSE is their sum by construction.
inline CvMetrics cv_metrics(const std::vector<double>& observed,
                            const std::vector<double>& pred_mean,
                            const std::vector<double>& pred_var) {
  if (observed.empty()) throw data_error("cv_metrics: empty holdout");
  if (observed.size() != pred_mean.size() || observed.size() != pred_var.size())
    throw data_error("cv_metrics: length mismatch");
  CvMetrics out;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    const double d = pred_mean[k] - observed[k];
    out.bias2 += d * d;
    out.var += pred_var[k];
  }
  out.bias2 /= static_cast<double>(observed.size());
  out.var /= static_cast<double>(observed.size());
  return out;
}

struct EffectiveParams {
  double p_dic = 0.0;
  double p_waic = 0.0;
};

// Effective parameter counts from stored pointwise log-likelihood draws.
// p_DIC =  2 ( log p(Y | posterior-mean theta) - mean_b log p(Y | theta_b) );
// p_WAIC = sum of the pointwise variances.
inline EffectiveParams effective_params(const Eigen::MatrixXd& loglik,
                                        const Eigen::VectorXd& loglik_at_mean) {
  if (loglik.rows() < 1 || loglik.cols() != loglik_at_mean.size())
    throw data_error("effective_params: missing traces");
  const long draws = loglik.rows();
  const long cells = loglik.cols();
  EffectiveParams out;
  double mean_total = 0.0;
  for (long b = 0; b < draws; ++b) mean_total += loglik.row(b).sum();
  mean_total /= static_cast<double>(draws);
  out.p_dic = 2.0 * (loglik_at_mean.sum() - mean_total);
  for (long i = 0; i < cells; ++i) {
    const double m = loglik.col(i).mean();
    double ss = 0.0;
    for (long b = 0; b < draws; ++b) ss += (loglik(b, i) - m) * (loglik(b, i) - m);
    out.p_waic += draws > 1 ? ss / static_cast<double>(draws - 1) : 0.0;
  }
  return out;
}

struct CoverageReport {
  double coverage = 0.0;
  std::optional<double> len_all;
  std::optional<double> len_low;   // cells with y <= 5
  std::optional<double> len_high;  // cells with y >= 20
};

// Central 95% posterior predictive intervals per cell from replicate draws;
// coverage plus mean lengths, stratified by the observed count.
inline CoverageReport coverage_report(const Eigen::MatrixXd& yrep, const Eigen::VectorXd& y) {
  if (yrep.cols() != y.size() || yrep.rows() < 2)
    throw data_error("coverage_report: trace shape mismatch");
  CoverageReport out;
  double len_sum = 0.0, len_low_sum = 0.0, len_high_sum = 0.0;
  long low_n = 0, high_n = 0, covered = 0;
  for (long i = 0; i < y.size(); ++i) {
    std::vector<double> draws(yrep.rows());
    for (long b = 0; b < yrep.rows(); ++b) draws[b] = yrep(b, i);
    std::sort(draws.begin(), draws.end());
    const double lo = quantile_sorted(draws, 0.025);
    const double hi = quantile_sorted(draws, 0.975);
    covered += (y(i) >= lo && y(i) <= hi);
    const double len = hi - lo;
    len_sum += len;
    if (y(i) <= 5.0) {
      len_low_sum += len;
      ++low_n;
    }
    if (y(i) >= 20.0) {
      len_high_sum += len;
      ++high_n;
    }
  }
  out.coverage = static_cast<double>(covered) / static_cast<double>(y.size());
  out.len_all = len_sum / static_cast<double>(y.size());
  if (low_n > 0) out.len_low = len_low_sum / static_cast<double>(low_n);
  if (high_n > 0) out.len_high = len_high_sum / static_cast<double>(high_n);
  return out;
}

}  // namespace tgwish
