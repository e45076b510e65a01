#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tgwish/car.hpp"
#include "tgwish/errors.hpp"
#include "tgwish/gwishart.hpp"
#include "tgwish/mathutil.hpp"

namespace tgwish {

struct LogRatioEstimate {
  double value = 0.0;          // estimate of log I(p1) - log I(p2)
  double se = 0.0;             // standard error across chains
  std::vector<double> per_chain;
};

// Monte Carlo estimate of log I(p1) - log I(p2) for two densities differing
// only in the scale matrix: run chains with stationary density p2, average
// exp(Z) with Z = -<K, scale1 - scale2>/2 per state, take logs per chain,
// then average the per-chain estimates. The first 10% of each chain is
// burn-in.
inline LogRatioEstimate estimate_logratio(const TruncGWishartParams& p1,
                                          const TruncGWishartParams& p2, int chains, long iters,
                                          Rng rng, const MhOptions& opt = {}, int jobs = 1) {
  if (p1.structure->graph().hash() != p2.structure->graph().hash())
    throw config_error("estimate_logratio: graphs differ");
  if (p1.delta != p2.delta) throw config_error("estimate_logratio: delta differs");
  if (p1.truncated != p2.truncated) throw config_error("estimate_logratio: truncation differs");
  if (p1.fixed_first != p2.fixed_first)
    throw config_error("estimate_logratio: K_11 restriction differs");
  if (chains < 1 || iters < 10) throw config_error("estimate_logratio: need chains >= 1, iters >= 10");

  const Eigen::MatrixXd dscale = p1.scale - p2.scale;
  const long burn = iters / 10;
  std::vector<double> per_chain(static_cast<std::size_t>(chains), 0.0);

  auto run_chain = [&](int c) {
    Rng chain_rng = rng.stream(static_cast<std::uint64_t>(c));
    CholeskyFactor phi = initial_factor(p2);
    std::vector<double> zs;
    zs.reserve(static_cast<std::size_t>(iters - burn));
    for (long t = 0; t < iters; ++t) {
      mh_step(phi, p2, opt, chain_rng);
      if (t < burn) continue;
      double z = 0.0;
      for (int r = 0; r < phi.n(); ++r) z += detail::row_quadform(phi, dscale, r);
      zs.push_back(-0.5 * z);
    }
    per_chain[static_cast<std::size_t>(c)] = log_mean_exp(zs);
  };

  if (jobs <= 1 || chains == 1) {
    for (int c = 0; c < chains; ++c) run_chain(c);
  } else {
    std::vector<std::thread> pool;
    std::size_t next = 0;
    const int workers = std::min(jobs, chains);
    std::mutex mu;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t c;
          {
            std::lock_guard<std::mutex> lock(mu);
            if (next >= static_cast<std::size_t>(chains)) return;
            c = next++;
          }
          run_chain(static_cast<int>(c));
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  LogRatioEstimate out;
  out.per_chain = per_chain;
  double mean = 0.0;
  for (double v : per_chain) mean += v;
  mean /= static_cast<double>(chains);
  out.value = mean;
  if (chains > 1) {
    double ss = 0.0;
    for (double v : per_chain) ss += (v - mean) * (v - mean);
    out.se = std::sqrt(ss / (chains * (chains - 1.0)));
  }
  return out;
}

// Cached log-ratios of normalizing constants between consecutive rho grid
// values: log_ratios[k] = log I(rho_k) - log I(rho_{k+1}).
struct NormConstTable {
  std::vector<double> grid;
  std::vector<double> log_ratios;
  std::vector<double> std_errors;
  std::uint64_t graph_hash = 0;
  double delta = 3.0;
  bool truncated = true;
  std::optional<double> fixed_first;
  int chains = 0;
  long iters = 0;
  std::uint64_t seed = 0;

  // log I(rho_from) - log I(rho_to) for adjacent grid indices.
  double log_ratio_between(int from, int to) const {
    if (to == from + 1) return log_ratios[static_cast<std::size_t>(from)];
    if (to == from - 1) return -log_ratios[static_cast<std::size_t>(to)];
    throw data_error("norm-const table: only adjacent grid moves are tabulated");
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["grid"] = grid;
    j["log_ratios"] = log_ratios;
    j["std_errors"] = std_errors;
    j["graph_hash"] = graph_hash;
    j["delta"] = delta;
    j["truncated"] = truncated;
    if (fixed_first)
      j["fixed_first"] = *fixed_first;
    else
      j["fixed_first"] = nullptr;
    j["chains"] = chains;
    j["iters"] = iters;
    j["seed"] = seed;
    j["scale_convention"] = "(delta-2)*inverse(Dw-rho*W)";
    return j;
  }

  static NormConstTable from_json(const nlohmann::json& j) {
    NormConstTable t;
    t.grid = j.at("grid").get<std::vector<double>>();
    t.log_ratios = j.at("log_ratios").get<std::vector<double>>();
    if (j.contains("std_errors")) t.std_errors = j["std_errors"].get<std::vector<double>>();
    t.graph_hash = j.at("graph_hash").get<std::uint64_t>();
    t.delta = j.at("delta").get<double>();
    t.truncated = j.at("truncated").get<bool>();
    if (!j.at("fixed_first").is_null()) t.fixed_first = j["fixed_first"].get<double>();
    t.chains = j.at("chains").get<int>();
    t.iters = j.at("iters").get<long>();
    t.seed = j.at("seed").get<std::uint64_t>();
    return t;
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw data_error("norm-const table: cannot write '" + path + "'");
    out << to_json().dump(2) << "\n";
  }

  static NormConstTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("norm-const table: cannot open '" + path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw data_error(std::string("norm-const table: bad JSON: ") + e.what());
    }
    return from_json(j);
  }

  void check_compatible(const AdjacencyGraph& g, double want_delta, bool want_truncated,
                        const std::optional<double>& want_fixed_first) const {
    if (graph_hash != g.hash()) throw data_error("norm-const table: built for a different graph");
    if (delta != want_delta) throw data_error("norm-const table: built for a different delta");
    if (truncated != want_truncated)
      throw data_error("norm-const table: truncation flag does not match the model");
    if (fixed_first != want_fixed_first)
      throw data_error("norm-const table: K_11 restriction does not match the model");
  }
};

// Estimate the consecutive-pair ratios for the prior
// TWis/Wis_G(delta, (delta-2) D(rho)) over the grid. Each pair's chain runs
// at the smaller rho.
inline NormConstTable build_table(std::shared_ptr<const CholStructure> s, double delta,
                                  bool truncated, std::optional<double> fixed_first,
                                  const std::vector<double>& grid, int chains, long iters,
                                  std::uint64_t seed, int jobs = 1) {
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1])) throw config_error("build_table: grid must be strictly increasing");
  NormConstTable t;
  t.grid = grid;
  t.graph_hash = s->graph().hash();
  t.delta = delta;
  t.truncated = truncated;
  t.fixed_first = fixed_first;
  t.chains = chains;
  t.iters = iters;
  t.seed = seed;
  const auto& g = s->graph();
  Rng rng(seed);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const auto low = TruncGWishartParams::prior(
        s, delta, (delta - 2.0) * d_rho_inverse(g, grid[k]), truncated, fixed_first);
    const auto high = TruncGWishartParams::prior(
        s, delta, (delta - 2.0) * d_rho_inverse(g, grid[k + 1]), truncated, fixed_first);
    const auto est =
        estimate_logratio(high, low, chains, iters, rng.stream(k + 1), {}, jobs);
    t.log_ratios.push_back(-est.value);  // log I(rho_k) - log I(rho_{k+1})
    t.std_errors.push_back(est.se);
  }
  return t;
}

}  // namespace tgwish
