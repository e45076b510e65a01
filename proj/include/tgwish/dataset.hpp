#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tgwish/csv.hpp"
#include "tgwish/errors.hpp"
#include "tgwish/graph.hpp"

namespace tgwish {

namespace detail {

inline std::map<std::string, int> area_index(const AdjacencyGraph& g) {
  std::map<std::string, int> idx;
  for (int i = 0; i < g.n(); ++i) idx[g.label(i)] = i;
  return idx;
}

}  // namespace detail

// Counts, expected counts, and optional covariates over the areas of a graph.
struct ArealDataset {
  std::shared_ptr<const AdjacencyGraph> graph;
  Eigen::VectorXd y;
  Eigen::VectorXd expected;
  Eigen::MatrixXd covariates;  // n x p, p == 0 when absent

  int n() const { return static_cast<int>(y.size()); }
  int p() const { return static_cast<int>(covariates.cols()); }

  void validate() const {
    if (!graph) throw data_error("dataset: missing graph");
    const int n = graph->n();
    if (y.size() != n || expected.size() != n)
      throw data_error("dataset: lengths do not match the graph order");
    if (covariates.size() > 0 && covariates.rows() != n)
      throw data_error("dataset: covariate rows do not match the graph order");
    for (int i = 0; i < n; ++i) {
      if (y(i) < 0 || y(i) != std::floor(y(i)))
        throw data_error("dataset: counts must be non-negative integers");
      if (!(expected(i) > 0.0))
        throw data_error("dataset: expected counts must be strictly positive");
    }
  }

  // CSV columns: area_id, y, E, then any further columns as covariates.
  // Every graph area must appear exactly once.
  static ArealDataset load(std::shared_ptr<const AdjacencyGraph> graph, const std::string& path) {
    const auto t = read_csv(path);
    const int c_area = t.require_col("area_id");
    const int c_y = t.require_col("y");
    const int c_e = t.require_col("E");
    std::vector<int> cov_cols;
    for (std::size_t k = 0; k < t.columns.size(); ++k)
      if (static_cast<int>(k) != c_area && static_cast<int>(k) != c_y && static_cast<int>(k) != c_e)
        cov_cols.push_back(static_cast<int>(k));
    const auto idx = detail::area_index(*graph);
    const int n = graph->n();
    ArealDataset d;
    d.graph = graph;
    d.y.setConstant(n, -1.0);
    d.expected.setZero(n);
    d.covariates.setZero(n, static_cast<int>(cov_cols.size()));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto it = idx.find(t.rows[r][static_cast<std::size_t>(c_area)]);
      if (it == idx.end())
        throw data_error("dataset: unknown area '" + t.rows[r][static_cast<std::size_t>(c_area)] +
                         "' in '" + path + "'");
      const int i = it->second;
      if (d.y(i) >= 0.0) throw data_error("dataset: duplicate area row in '" + path + "'");
      d.y(i) = t.num(r, c_y);
      d.expected(i) = t.num(r, c_e);
      for (std::size_t k = 0; k < cov_cols.size(); ++k)
        d.covariates(i, static_cast<int>(k)) = t.num(r, cov_cols[k]);
    }
    for (int i = 0; i < n; ++i)
      if (d.y(i) < 0.0) throw data_error("dataset: no row for area '" + graph->label(i) + "'");
    d.validate();
    return d;
  }
};

// Long-format strata table: area_id, stratum, population, optional count.
struct StrataTable {
  std::vector<std::string> strata;                 // stratum labels in first-seen order
  Eigen::MatrixXd population;                      // n x J
  std::optional<Eigen::MatrixXd> counts;           // n x J, present when the file has counts

  static StrataTable load(std::shared_ptr<const AdjacencyGraph> graph, const std::string& path) {
    const auto t = read_csv(path);
    const int c_area = t.require_col("area_id");
    const int c_str = t.require_col("stratum");
    const int c_pop = t.require_col("population");
    const int c_cnt = t.col("count");
    const auto idx = detail::area_index(*graph);
    StrataTable out;
    std::map<std::string, int> jmap;
    std::vector<std::tuple<int, int, double, double>> cells;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto it = idx.find(t.rows[r][static_cast<std::size_t>(c_area)]);
      if (it == idx.end())
        throw data_error("strata: unknown area '" + t.rows[r][static_cast<std::size_t>(c_area)] + "'");
      const auto& sname = t.rows[r][static_cast<std::size_t>(c_str)];
      if (!jmap.count(sname)) {
        jmap[sname] = static_cast<int>(out.strata.size());
        out.strata.push_back(sname);
      }
      cells.emplace_back(it->second, jmap[sname], t.num(r, c_pop),
                         c_cnt >= 0 ? t.num(r, c_cnt) : 0.0);
    }
    const int n = graph->n();
    const int J = static_cast<int>(out.strata.size());
    out.population.setZero(n, J);
    if (c_cnt >= 0) out.counts = Eigen::MatrixXd::Zero(n, J);
    for (const auto& [i, j, pop, cnt] : cells) {
      out.population(i, j) += pop;
      if (out.counts) (*out.counts)(i, j) += cnt;
    }
    return out;
  }
};

struct ExpectedCountsResult {
  Eigen::VectorXd expected;                 // E_i = sum_j q_j P_ij
  std::optional<Eigen::VectorXd> counts;    // y_i = sum_j y_ij (internal mode)
  std::vector<double> rates;                // the q_j actually used
};

// Internal standardization (rates estimated from per-stratum counts) when no
// rates are supplied, external otherwise. Internal rates make
// sum(E) == sum(y) by construction.
inline ExpectedCountsResult expected_counts(
    const StrataTable& strata,
    const std::optional<std::map<std::string, double>>& rates = std::nullopt) {
  const int n = static_cast<int>(strata.population.rows());
  const int J = static_cast<int>(strata.population.cols());
  ExpectedCountsResult out;
  out.rates.resize(J);
  if (rates) {
    for (int j = 0; j < J; ++j) {
      const auto it = rates->find(strata.strata[j]);
      if (it == rates->end())
        throw data_error("expected_counts: no rate for stratum '" + strata.strata[j] + "'");
      out.rates[static_cast<std::size_t>(j)] = it->second;
    }
  } else {
    if (!strata.counts)
      throw data_error("expected_counts: internal standardization needs a count column");
    for (int j = 0; j < J; ++j) {
      const double pop = strata.population.col(j).sum();
      if (!(pop > 0.0))
        throw data_error("expected_counts: stratum '" + strata.strata[j] +
                         "' has zero total population");
      out.rates[static_cast<std::size_t>(j)] = strata.counts->col(j).sum() / pop;
    }
  }
  out.expected.setZero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < J; ++j)
      out.expected(i) += out.rates[static_cast<std::size_t>(j)] * strata.population(i, j);
  if (strata.counts) out.counts = strata.counts->rowwise().sum();
  return out;
}

// Multi-outcome counts with an optional holdout mask. Mask cells are imputed
// during sampling and excluded from the likelihood.
struct MultiDataset {
  std::shared_ptr<const AdjacencyGraph> graph;
  std::vector<std::string> outcomes;
  Eigen::MatrixXd y;         // n x C
  Eigen::MatrixXd expected;  // n x C
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> holdout;

  int n() const { return static_cast<int>(y.rows()); }
  int n_outcomes() const { return static_cast<int>(y.cols()); }

  void validate() const {
    if (!graph) throw data_error("multi dataset: missing graph");
    if (y.rows() != graph->n() || expected.rows() != graph->n() || y.cols() != expected.cols())
      throw data_error("multi dataset: dimension mismatch");
    for (int i = 0; i < y.rows(); ++i)
      for (int c = 0; c < y.cols(); ++c) {
        if (y(i, c) < 0 || y(i, c) != std::floor(y(i, c)))
          throw data_error("multi dataset: counts must be non-negative integers");
        if (!(expected(i, c) > 0.0))
          throw data_error("multi dataset: expected counts must be strictly positive");
      }
  }

  // Long CSV: area_id, outcome, y, E, optional holdout flag (0/1).
  static MultiDataset load(std::shared_ptr<const AdjacencyGraph> graph, const std::string& path) {
    const auto t = read_csv(path);
    const int c_area = t.require_col("area_id");
    const int c_out = t.require_col("outcome");
    const int c_y = t.require_col("y");
    const int c_e = t.require_col("E");
    const int c_h = t.col("holdout");
    const auto idx = detail::area_index(*graph);
    MultiDataset d;
    d.graph = graph;
    std::map<std::string, int> omap;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& oname = t.rows[r][static_cast<std::size_t>(c_out)];
      if (!omap.count(oname)) {
        omap[oname] = static_cast<int>(d.outcomes.size());
        d.outcomes.push_back(oname);
      }
    }
    const int n = graph->n();
    const int C = static_cast<int>(d.outcomes.size());
    d.y.setConstant(n, C, -1.0);
    d.expected.setZero(n, C);
    d.holdout.setConstant(n, C, false);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto it = idx.find(t.rows[r][static_cast<std::size_t>(c_area)]);
      if (it == idx.end())
        throw data_error("multi dataset: unknown area '" +
                         t.rows[r][static_cast<std::size_t>(c_area)] + "'");
      const int i = it->second;
      const int c = omap[t.rows[r][static_cast<std::size_t>(c_out)]];
      if (d.y(i, c) >= 0.0) throw data_error("multi dataset: duplicate (area, outcome) cell");
      d.y(i, c) = t.num(r, c_y);
      d.expected(i, c) = t.num(r, c_e);
      if (c_h >= 0) d.holdout(i, c) = t.num(r, c_h) != 0.0;
    }
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < C; ++c)
        if (d.y(i, c) < 0.0)
          throw data_error("multi dataset: missing cell for area '" + graph->label(i) +
                           "', outcome '" + d.outcomes[static_cast<std::size_t>(c)] + "'");
    d.validate();
    return d;
  }
};

// area_id -> value CSV helpers used by the fixtures (expected counts,
// labels, centroids).
inline Eigen::VectorXd load_area_column(const AdjacencyGraph& g, const std::string& path,
                                        const std::string& column) {
  const auto t = read_csv(path);
  const int c_area = t.require_col("area_id");
  const int c_val = t.require_col(column);
  const auto idx = detail::area_index(g);
  Eigen::VectorXd out = Eigen::VectorXd::Constant(g.n(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto it = idx.find(t.rows[r][static_cast<std::size_t>(c_area)]);
    if (it == idx.end())
      throw data_error("area column: unknown area '" + t.rows[r][static_cast<std::size_t>(c_area)] +
                       "' in '" + path + "'");
    out(it->second) = t.num(r, c_val);
  }
  for (int i = 0; i < g.n(); ++i)
    if (std::isnan(out(i)))
      throw data_error("area column: no value for area '" + g.label(i) + "' in '" + path + "'");
  return out;
}

}  // namespace tgwish
