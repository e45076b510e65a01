#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tgwish/dataset.hpp"
#include "tgwish/metrics.hpp"
#include "tgwish/model_multivariate.hpp"
#include "tgwish/model_univariate.hpp"
#include "tgwish/simulate.hpp"

namespace tgwish {

// Named model presets for the cross-validation comparison: spatial prior on
// K_R crossed with the outcome prior on K_C.
struct ModelPreset {
  std::string name;
  SpatialPrior spatial;
  OutcomePrior outcome;
};

inline ModelPreset model_preset(const std::string& name) {
  if (name == "ggm") return {name, SpatialPrior::gw, OutcomePrior::gwishart_random};
  if (name == "tggm") return {name, SpatialPrior::tgw, OutcomePrior::gwishart_random};
  if (name == "full") return {name, SpatialPrior::gw, OutcomePrior::wishart};
  if (name == "tfull") return {name, SpatialPrior::tgw, OutcomePrior::wishart};
  if (name == "mcar") return {name, SpatialPrior::car, OutcomePrior::wishart};
  throw config_error("unknown model '" + name + "' (expected ggm, tggm, full, tfull, or mcar)");
}

// Seeded partition of all n x C cells into near-equal folds; every cell
// lands in exactly one fold.
inline std::vector<int> assign_folds(int n_cells, int folds, Rng& rng) {
  std::vector<int> order(static_cast<std::size_t>(n_cells));
  std::iota(order.begin(), order.end(), 0);
  for (int k = n_cells - 1; k > 0; --k) {
    const int j = rng.uniform_int(k + 1);
    std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(j)]);
  }
  std::vector<int> fold(static_cast<std::size_t>(n_cells));
  for (int k = 0; k < n_cells; ++k) fold[static_cast<std::size_t>(order[k])] = k % folds;
  return fold;
}

struct CrossvalConfig {
  MultiDataset data;  // unmasked; fold masks are applied per run
  int folds = 10;
  std::vector<std::string> models{"tggm", "mcar"};
  const NormConstTable* table_truncated = nullptr;
  const NormConstTable* table_untruncated = nullptr;
  MultiPriorConfig base;  // iterations, proposal scales, rho support
  std::uint64_t seed = 1;
};

struct CrossvalRow {
  std::string model;
  double bias2 = 0.0;
  double var = 0.0;
  double mse = 0.0;
};

// K-fold holdout: mask one bin, fit, read the predictive mean/variance of
// every held-out cell off the imputation draws, pool over folds.
inline std::vector<CrossvalRow> run_crossval(const CrossvalConfig& cfg,
                                             std::vector<int>* fold_assignment = nullptr) {
  cfg.data.validate();
  const int n = cfg.data.n();
  const int C = cfg.data.n_outcomes();
  if (cfg.folds < 2) throw config_error("crossval: need at least two folds");
  Rng fold_rng(cfg.seed, 0xF01D);
  const auto fold = assign_folds(n * C, cfg.folds, fold_rng);
  if (fold_assignment) *fold_assignment = fold;

  std::vector<CrossvalRow> out;
  for (const auto& name : cfg.models) {
    const auto preset = model_preset(name);
    const NormConstTable* table = nullptr;
    if (preset.spatial != SpatialPrior::car && cfg.base.rho_support.size() > 1) {
      table = preset.spatial == SpatialPrior::tgw ? cfg.table_truncated : cfg.table_untruncated;
      if (table == nullptr)
        throw config_error("crossval: model '" + name +
                           "' needs the matching normalizing-constant table");
    }
    std::vector<double> obs, pmean, pvar;
    for (int f = 0; f < cfg.folds; ++f) {
      MultiDataset masked = cfg.data;
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < C; ++c) masked.holdout(i, c) = (fold[i + n * c] == f);
      MultiPriorConfig prior = cfg.base;
      prior.flavor = preset.spatial;
      prior.outcome_prior = preset.outcome;
      prior.seed = cfg.seed * 1000003ULL + static_cast<std::uint64_t>(f);
      const auto fit = fit_multivariate(masked, prior, table);
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < C; ++c) {
          if (!masked.holdout(i, c)) continue;
          const long col = i + static_cast<long>(n) * c;
          const double mean = fit.yrep.col(col).mean();
          const double var =
              (fit.yrep.col(col).array() - mean).square().sum() / (fit.yrep.rows() - 1.0);
          obs.push_back(cfg.data.y(i, c));
          pmean.push_back(mean);
          pvar.push_back(var);
        }
    }
    const auto m = cv_metrics(obs, pmean, pvar);
    out.push_back({name, m.bias2, m.var, m.mse()});
  }
  return out;
}

struct SimStudyConfig {
  SimScenario scenario;
  std::vector<SpatialPrior> flavors{SpatialPrior::tgw, SpatialPrior::gw};
  const NormConstTable* table_truncated = nullptr;    // pinned, for tgw
  const NormConstTable* table_untruncated = nullptr;  // pinned, for gw
  UniPriorConfig base;
  std::uint64_t seed = 1;
};

struct SimStudyRow {
  std::string flavor;
  double ramse_value = 0.0;
};

inline const char* spatial_prior_name(SpatialPrior f) {
  switch (f) {
    case SpatialPrior::tgw: return "tgw";
    case SpatialPrior::gw: return "gw";
    case SpatialPrior::car: return "car";
  }
  return "?";
}

// Simulate S replicates, fit each requested flavor on every replicate, and
// score the relative-risk traces against the generating truth.
inline std::vector<SimStudyRow> run_simulation_study(const SimStudyConfig& cfg) {
  Rng sim_rng(cfg.seed, 0x51);
  const auto reps = simulate_counts(cfg.scenario, sim_rng);
  std::vector<SimStudyRow> out;
  for (const auto flavor : cfg.flavors) {
    const NormConstTable* table = nullptr;
    if (flavor != SpatialPrior::car) {
      table = flavor == SpatialPrior::tgw ? cfg.table_truncated : cfg.table_untruncated;
      if (table == nullptr)
        throw config_error(std::string("simulate: flavor '") + spatial_prior_name(flavor) +
                           "' needs the matching normalizing-constant table");
    }
    std::vector<Eigen::VectorXd> truths;
    std::vector<Eigen::MatrixXd> traces;
    for (std::size_t s = 0; s < reps.size(); ++s) {
      ArealDataset d;
      d.graph = cfg.scenario.graph;
      d.y = reps[s].y;
      d.expected = cfg.scenario.expected;
      d.covariates = reps[s].x;  // x enters the fitted mean with an estimated slope
      UniPriorConfig prior = cfg.base;
      prior.flavor = flavor;
      prior.seed = cfg.seed * 7919ULL + static_cast<std::uint64_t>(s);
      const auto fit = fit_univariate(d, prior, table);
      truths.push_back(reps[s].theta);
      traces.push_back(fit.theta);
    }
    out.push_back({spatial_prior_name(flavor), ramse(truths, traces)});
  }
  return out;
}

}  // namespace tgwish
