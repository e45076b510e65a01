#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tgwish/errors.hpp"
#include "tgwish/mathutil.hpp"

namespace tgwish {

// Thinned posterior draws as named columns, with per-block acceptance rates
// and continuously collected constraint diagnostics. Multi-chain runs merge
// by concatenation, keeping the chain label per draw.
class PosteriorSamples {
 public:
  PosteriorSamples() = default;
  explicit PosteriorSamples(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  const std::vector<std::string>& columns() const { return columns_; }
  long n_draws() const { return static_cast<long>(rows_.size()); }

  void append(const std::vector<double>& row, int chain) {
    if (row.size() != columns_.size()) throw data_error("posterior: row width mismatch");
    rows_.push_back(row);
    chain_.push_back(chain);
  }

  double value(long draw, std::size_t col) const { return rows_[draw][col]; }

  std::vector<double> column(const std::string& name) const {
    const auto it = std::find(columns_.begin(), columns_.end(), name);
    if (it == columns_.end()) throw data_error("posterior: no column '" + name + "'");
    const std::size_t k = static_cast<std::size_t>(it - columns_.begin());
    std::vector<double> out(rows_.size());
    for (std::size_t r = 0; r < rows_.size(); ++r) out[r] = rows_[r][k];
    return out;
  }

  bool has_column(const std::string& name) const {
    return std::find(columns_.begin(), columns_.end(), name) != columns_.end();
  }

  void merge(const PosteriorSamples& other) {
    if (columns_.empty()) columns_ = other.columns_;
    if (other.columns_ != columns_) throw data_error("posterior: merging mismatched columns");
    rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end());
    chain_.insert(chain_.end(), other.chain_.begin(), other.chain_.end());
    for (const auto& [k, v] : other.acceptance) acceptance[k] = v;
    cone_checks += other.cone_checks;
    cone_violations += other.cone_violations;
    pin_checks += other.pin_checks;
    pin_violations += other.pin_violations;
  }

  struct Summary {
    std::string name;
    double mean, sd, q025, q50, q975;
  };

  std::vector<Summary> summary() const {
    std::vector<Summary> out;
    out.reserve(columns_.size());
    for (std::size_t k = 0; k < columns_.size(); ++k) {
      std::vector<double> xs(rows_.size());
      for (std::size_t r = 0; r < rows_.size(); ++r) xs[r] = rows_[r][k];
      double mean = 0.0;
      for (double v : xs) mean += v;
      mean /= std::max<std::size_t>(1, xs.size());
      double ss = 0.0;
      for (double v : xs) ss += (v - mean) * (v - mean);
      const double sd = xs.size() > 1 ? std::sqrt(ss / (xs.size() - 1.0)) : 0.0;
      std::sort(xs.begin(), xs.end());
      out.push_back({columns_[k], mean, sd, quantile_sorted(xs, 0.025),
                     quantile_sorted(xs, 0.5), quantile_sorted(xs, 0.975)});
    }
    return out;
  }

  void write_summary_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw data_error("posterior: cannot write '" + path + "'");
    out << "parameter,mean,sd,q2.5,q50,q97.5\n";
    out.precision(10);
    for (const auto& s : summary())
      out << s.name << ',' << s.mean << ',' << s.sd << ',' << s.q025 << ',' << s.q50 << ','
          << s.q975 << '\n';
  }

  void write_traces_tsv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw data_error("posterior: cannot write '" + path + "'");
    out << "chain";
    for (const auto& c : columns_) out << '\t' << c;
    out << '\n';
    out.precision(10);
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      out << chain_[r];
      for (double v : rows_[r]) out << '\t' << v;
      out << '\n';
    }
  }

  std::map<std::string, double> acceptance;  // per-block acceptance rates

  // Constraint enforcement counters, updated at every thinned draw.
  long cone_checks = 0;
  long cone_violations = 0;
  long pin_checks = 0;
  long pin_violations = 0;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
  std::vector<int> chain_;
};

}  // namespace tgwish
