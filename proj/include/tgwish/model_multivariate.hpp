#pragma once

#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "tgwish/car.hpp"
#include "tgwish/dataset.hpp"
#include "tgwish/errors.hpp"
#include "tgwish/gwishart.hpp"
#include "tgwish/model_univariate.hpp"
#include "tgwish/norm_const.hpp"
#include "tgwish/posterior.hpp"
#include "tgwish/rng.hpp"

namespace tgwish {

// Matrix-normal log density of an n x C matrix with row precision K_R and
// column precision K_C, mean column intercepts M: computed through the trace
// identity, never forming the Kronecker product.
inline double matnorm_loglik(const Eigen::MatrixXd& U, const Eigen::VectorXd& M,
                             const Eigen::MatrixXd& K_R, const Eigen::MatrixXd& K_C) {
  const int n = static_cast<int>(U.rows());
  const int C = static_cast<int>(U.cols());
  if (M.size() != C || K_R.rows() != n || K_C.rows() != C)
    throw data_error("matnorm_loglik: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt_r(K_R), llt_c(K_C);
  if (llt_r.info() != Eigen::Success || llt_c.info() != Eigen::Success)
    throw numeric_error("matnorm_loglik: precision not positive definite");
  const double logdet_r =
      2.0 * Eigen::MatrixXd(llt_r.matrixL()).diagonal().array().log().sum();
  const double logdet_c =
      2.0 * Eigen::MatrixXd(llt_c.matrixL()).diagonal().array().log().sum();
  const Eigen::MatrixXd R = U - Eigen::VectorXd::Ones(n) * M.transpose();
  const double quad = (K_R * R * K_C).cwiseProduct(R).sum();
  return 0.5 * C * logdet_r + 0.5 * n * logdet_c - 0.5 * quad -
         0.5 * n * C * std::log(2.0 * M_PI);
}

enum class OutcomePrior { wishart, gwishart_fixed, gwishart_random };

inline OutcomePrior outcome_prior_from_string(const std::string& s) {
  if (s == "wishart") return OutcomePrior::wishart;
  if (s == "gwishart") return OutcomePrior::gwishart_fixed;
  if (s == "gwishart-random") return OutcomePrior::gwishart_random;
  throw config_error("unknown outcome prior '" + s +
                     "' (expected wishart, gwishart, or gwishart-random)");
}

struct MultiPriorConfig {
  SpatialPrior flavor = SpatialPrior::tgw;  // prior on K_R
  OutcomePrior outcome_prior = OutcomePrior::wishart;
  double delta_R = 3.0;
  double delta_C = 3.0;
  double sigma2_M = 100.0;
  double sigma_m = 2.0;
  double s_u = 0.1;
  double s_shift = 0.2;
  std::vector<double> rho_support = rho_grid();  // single value = fixed rho
  std::optional<AdjacencyGraph> gc_graph;        // fixed outcome graph (gwishart mode)
  long iterations = 10000;
  long burnin = -1;
  int thin = 10;
  int chains = 1;
  int jobs = 1;
  std::uint64_t seed = 1;
  bool disable_likelihood = false;
  std::optional<double> kr_fixed_first;  // off by default in the multivariate model
  // Edge-move machinery for the random outcome graph.
  double gc_birth_sd = 1.0;
  int gc_ratio_chains = 2;
  long gc_ratio_iters = 20000;

  long effective_burnin() const { return burnin >= 0 ? burnin : iterations / 2; }
};

// Lazily estimated log I(G + e) - log I(G) for the pinned, untruncated
// outcome-precision prior, keyed by the smaller graph and the toggled edge.
// Bridge construction: run a chain on the smaller graph, draw the would-be
// free element from a normal centered at its completion value, and average
// the density ratio. Estimates are seeded from the key so the cache contents
// do not depend on encounter order.
class GcRatioCache {
 public:
  GcRatioCache(double delta, Eigen::MatrixXd scale, int chains, long iters, std::uint64_t seed,
               double bridge_sd)
      : delta_(delta),
        scale_(std::move(scale)),
        chains_(chains),
        iters_(iters),
        seed_(seed),
        bridge_sd_(bridge_sd) {}

  // log I(larger) - log I(smaller), where larger = smaller + edge.
  double log_ratio(const AdjacencyGraph& smaller, int l, int m) {
    const std::string key = graph_key(smaller) + "+" + std::to_string(l) + "," + std::to_string(m);
    {
      std::lock_guard<std::mutex> lock(mu_);
      const auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    const double value = estimate(smaller, l, m, key);
    std::lock_guard<std::mutex> lock(mu_);
    cache_.emplace(key, value);
    return value;
  }

  std::size_t size() const { return cache_.size(); }

 private:
  static std::string graph_key(const AdjacencyGraph& g) {
    std::string k = std::to_string(g.n()) + ":";
    for (auto [i, j] : g.edges()) k += std::to_string(i) + "-" + std::to_string(j) + ";";
    return k;
  }

  double estimate(const AdjacencyGraph& smaller, int l, int m, const std::string& key) const {
    std::vector<std::pair<int, int>> edges = smaller.edges();
    edges.emplace_back(l, m);
    const AdjacencyGraph larger(smaller.n(), edges);
    auto s_small = std::make_shared<CholStructure>(smaller);
    auto s_large = std::make_shared<CholStructure>(larger);
    auto p_small = TruncGWishartParams::prior(s_small, delta_, scale_, false, 1.0);

    std::uint64_t key_hash = 1469598103934665603ULL;
    for (char ch : key) {
      key_hash ^= static_cast<unsigned char>(ch);
      key_hash *= 1099511628211ULL;
    }
    std::vector<double> per_chain(static_cast<std::size_t>(chains_));
    for (int c = 0; c < chains_; ++c) {
      Rng rng(seed_ ^ key_hash, static_cast<std::uint64_t>(c) + 1);
      CholeskyFactor phi = initial_factor(p_small);
      const long burn = iters_ / 10;
      std::vector<double> logw;
      logw.reserve(static_cast<std::size_t>(iters_ - burn));
      for (long t = 0; t < iters_; ++t) {
        mh_step(phi, p_small, {}, rng);
        if (t < burn) continue;
        // Bridge draw for the would-be free element.
        const double c0 = phi(l, m);  // completion value under the smaller graph
        const double x = c0 + bridge_sd_ * rng.normal();
        CholeskyFactor cand(s_large, phi.phi());
        cand.set(l, m, x);
        const int f = s_large->free_index(l, m);
        cand.complete_dependents(f);
        double dtrace = 0.0;
        for (int r : s_large->touched_rows(f))
          dtrace += detail::row_quadform(cand, scale_, r) - detail::row_quadform(phi, scale_, r);
        logw.push_back(std::log(phi(l, l)) - 0.5 * dtrace -
                       normal_logpdf(x, c0, bridge_sd_));
      }
      per_chain[static_cast<std::size_t>(c)] = log_mean_exp(logw);
    }
    double mean = 0.0;
    for (double v : per_chain) mean += v;
    return mean / static_cast<double>(chains_);
  }

  double delta_;
  Eigen::MatrixXd scale_;
  int chains_;
  long iters_;
  std::uint64_t seed_;
  double bridge_sd_;
  mutable std::mutex mu_;
  std::map<std::string, double> cache_;
};

// Outcome-precision state: the current graph, its structure, and the factor.
struct GcState {
  std::shared_ptr<const CholStructure> structure;
  CholeskyFactor phi;

  explicit GcState(std::shared_ptr<const CholStructure> s)
      : structure(s), phi(CholeskyFactor::identity(s)) {}
  GcState(std::shared_ptr<const CholStructure> s, CholeskyFactor f)
      : structure(std::move(s)), phi(std::move(f)) {}
};

// One birth/death edge toggle on the outcome graph with the within-move
// element proposal. d_post is the scale matrix of the current full
// conditional of K_C; the normalizing-constant ratio uses the prior scale
// held by the cache. Returns whether the move was accepted.
inline bool gc_edge_move(GcState& st, double delta_post, const Eigen::MatrixXd& d_post,
                         GcRatioCache& cache, double birth_sd, Rng& rng) {
  (void)delta_post;  // diagonals are untouched, so the power terms cancel
  const auto& g = st.structure->graph();
  const int C = g.n();
  if (C < 2) return false;
  // uniform unordered pair
  int l = rng.uniform_int(C), m = rng.uniform_int(C - 1);
  if (m >= l) ++m;
  if (l > m) std::swap(l, m);
  const bool birth = !g.has_edge(l, m);

  std::vector<std::pair<int, int>> edges = g.edges();
  if (birth) {
    edges.emplace_back(l, m);
  } else {
    edges.erase(std::find(edges.begin(), edges.end(), std::make_pair(l, m)));
  }
  auto s_new = std::make_shared<CholStructure>(AdjacencyGraph(C, edges, g.labels()));
  CholeskyFactor cand(s_new, st.phi.phi());

  // Completion value of (l, m) given the rows above; identical before and
  // after the toggle.
  double sum = 0.0;
  for (int d = 0; d < l; ++d) sum += st.phi(d, l) * st.phi(d, m);
  const double c0 = -sum / st.phi(l, l);

  double log_r;
  if (birth) {
    const int f = s_new->free_index(l, m);
    const double x = c0 + birth_sd * rng.normal();
    cand.set(l, m, x);
    cand.complete_dependents(f);
    const double log_i = cache.log_ratio(g, l, m);  // log I(new) - log I(old)
    double dtrace = 0.0;
    for (int r : s_new->touched_rows(f))
      dtrace += detail::row_quadform(cand, d_post, r) - detail::row_quadform(st.phi, d_post, r);
    log_r = std::log(st.phi(l, l)) - 0.5 * dtrace - log_i - normal_logpdf(x, c0, birth_sd);
  } else {
    // The rows that change are those depending on (l, m) in the current
    // (larger) structure, where it is still free.
    const int f_old = st.structure->free_index(l, m);
    const double x_old = st.phi(l, m);
    cand.set(l, m, c0);
    cand.complete_all();
    const double log_i =
        cache.log_ratio(s_new->graph(), l, m);  // log I(current) - log I(shrunk)
    double dtrace = 0.0;
    for (int r : st.structure->touched_rows(f_old))
      dtrace += detail::row_quadform(cand, d_post, r) - detail::row_quadform(st.phi, d_post, r);
    log_r = -std::log(st.phi(l, l)) - 0.5 * dtrace + log_i + normal_logpdf(x_old, c0, birth_sd);
  }

  if (std::log(rng.uniform()) < log_r) {
    st.structure = std::move(s_new);
    st.phi = std::move(cand);
    return true;
  }
  return false;
}

struct MultiFitResult {
  PosteriorSamples samples;
  Eigen::MatrixXd theta;             // draws x (n*C), cell (i, c) at column i + n*c
  Eigen::MatrixXd pointwise_loglik;  // NaN at held-out cells
  Eigen::MatrixXd yrep;              // posterior predictive / imputation draws
  Eigen::MatrixXd edge_freq;         // C x C posterior edge frequencies (random G_C)
  long edge_draws = 0;
  OutcomePrior outcome_prior = OutcomePrior::wishart;
  std::vector<std::string> outcomes;
  double wall_seconds = 0.0;
};

// Posterior edge-inclusion frequencies of the outcome graph.
inline Eigen::MatrixXd edge_inclusion_probs(const MultiFitResult& fit) {
  if (fit.outcome_prior != OutcomePrior::gwishart_random)
    throw data_error("edge_inclusion_probs: outcome graph was fixed in this run");
  if (fit.edge_draws == 0) throw data_error("edge_inclusion_probs: no stored draws");
  return fit.edge_freq / static_cast<double>(fit.edge_draws);
}

// Separable matrix-normal disease-mapping fit. Per iteration: single-site
// updates of U, Gibbs on the outcome intercepts, Phi sweeps on the spatial
// and outcome precisions, a rho move, optional outcome-graph edge toggles,
// and imputation of held-out counts.
inline MultiFitResult fit_multivariate(const MultiDataset& data, const MultiPriorConfig& prior,
                                       const NormConstTable* table) {
  data.validate();
  const auto& g = *data.graph;
  if (!g.connected()) throw data_error("fit_multivariate: spatial graph must be connected");
  const int n = g.n();
  const int C = data.n_outcomes();
  const auto& support = prior.rho_support;
  if (support.empty()) throw config_error("fit_multivariate: empty rho support");
  const bool rho_fixed = support.size() == 1;
  const bool uses_phi_r = prior.flavor != SpatialPrior::car;

  if (uses_phi_r && !rho_fixed) {
    if (table == nullptr)
      throw config_error(
          "fit_multivariate: the tgw/gw flavors need a normalizing-constant table; run the "
          "normconst command first");
    table->check_compatible(g, prior.delta_R, prior.flavor == SpatialPrior::tgw,
                            prior.kr_fixed_first);
    if (table->grid != support)
      throw config_error("fit_multivariate: table grid does not match the rho support");
  }

  auto structure_r = std::make_shared<CholStructure>(g);
  std::vector<Eigen::MatrixXd> d_rho, car_prec;
  std::vector<double> car_logdet;
  for (double r : support) d_rho.push_back(d_rho_inverse(g, r));
  if (!uses_phi_r) {
    for (double r : support) {
      car_prec.push_back(car_matrix(g, r));
      car_logdet.push_back(
          2.0 * Eigen::MatrixXd(car_prec.back().llt().matrixL()).diagonal().array().log().sum());
    }
  }

  // Outcome graph start: complete for the Wishart prior, complete (or the
  // supplied structure) for the G-Wishart priors.
  std::vector<std::pair<int, int>> all_pairs;
  for (int a = 0; a < C; ++a)
    for (int b = a + 1; b < C; ++b) all_pairs.emplace_back(a, b);
  const AdjacencyGraph gc_complete(C, all_pairs, data.outcomes);

  std::vector<std::string> cols;
  for (int c = 0; c < C; ++c) cols.push_back("M_" + data.outcomes[static_cast<std::size_t>(c)]);
  cols.push_back("rho");
  if (uses_phi_r) {
    for (int i = 0; i < n; ++i)
      cols.push_back("KR_" + std::to_string(i + 1) + "_" + std::to_string(i + 1));
    for (auto [i, j] : g.edges())
      cols.push_back("KR_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
  }
  for (int a = 0; a < C; ++a)
    for (int b = a; b < C; ++b)
      cols.push_back("KC_" + std::to_string(a + 1) + "_" + std::to_string(b + 1));
  if (prior.outcome_prior == OutcomePrior::gwishart_random)
    for (auto [a, b] : all_pairs)
      cols.push_back("GC_" + std::to_string(a + 1) + "_" + std::to_string(b + 1));

  const long iters = prior.iterations;
  const long burn = prior.effective_burnin();
  const int thin = std::max(1, prior.thin);
  const long kept_per_chain = (iters - burn + thin - 1) / thin;

  std::vector<PosteriorSamples> chain_samples(prior.chains, PosteriorSamples(cols));
  std::vector<Eigen::MatrixXd> chain_theta(prior.chains), chain_loglik(prior.chains),
      chain_yrep(prior.chains), chain_edges(prior.chains);
  std::vector<long> chain_edge_draws(prior.chains, 0);

  GcRatioCache gc_cache(prior.delta_C,
                        (prior.delta_C - 2.0) * Eigen::MatrixXd::Identity(C, C),
                        prior.gc_ratio_chains, prior.gc_ratio_iters, prior.seed ^ 0x9E,
                        prior.gc_birth_sd);

  const auto t0 = std::chrono::steady_clock::now();

  auto run_chain = [&](int chain) {
    Rng rng(prior.seed, static_cast<std::uint64_t>(chain) + 101);
    // State
    Eigen::MatrixXd U(n, C);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < C; ++c)
        U(i, c) = data.holdout(i, c)
                      ? 0.0
                      : std::log((data.y(i, c) + 0.5) / data.expected(i, c));
    Eigen::VectorXd M = U.colwise().mean();
    int rho_idx = rho_fixed ? 0 : static_cast<int>(support.size()) / 2;

    std::optional<CholeskyFactor> phi_r;
    Eigen::MatrixXd K_R;
    if (uses_phi_r) {
      auto p0 = TruncGWishartParams::prior(
          structure_r, prior.delta_R,
          (prior.delta_R - 2.0) * d_rho[static_cast<std::size_t>(rho_idx)],
          prior.flavor == SpatialPrior::tgw, prior.kr_fixed_first);
      phi_r = initial_factor(p0);
      K_R = phi_r->precision();
    } else {
      K_R = car_prec[static_cast<std::size_t>(rho_idx)];
    }
    const double kr11_pin = uses_phi_r && prior.kr_fixed_first ? K_R(0, 0) : 0.0;

    auto gc_structure = std::make_shared<CholStructure>(
        prior.outcome_prior == OutcomePrior::gwishart_fixed && prior.gc_graph
            ? *prior.gc_graph
            : gc_complete);
    if (gc_structure->n() != C)
      throw config_error("fit_multivariate: outcome graph order does not match the data");
    GcState gc(gc_structure,
               initial_factor(TruncGWishartParams::prior(
                   gc_structure, prior.delta_C,
                   (prior.delta_C - 2.0) * Eigen::MatrixXd::Identity(C, C), false, 1.0)));
    Eigen::MatrixXd K_C = gc.phi.precision();
    const double kc11_pin = K_C(0, 0);

    Eigen::MatrixXd R = U - Eigen::VectorXd::Ones(n) * M.transpose();
    Eigen::MatrixXd G = K_R * R * K_C;  // gradient cache for single-site moves

    MhSweepStats phi_r_stats, phi_c_stats;
    long u_prop = 0, u_acc = 0, rho_prop = 0, rho_acc = 0, gc_prop = 0, gc_acc = 0;
    long shift_prop = 0, shift_acc = 0;

    chain_theta[chain].resize(kept_per_chain, n * C);
    chain_loglik[chain].resize(kept_per_chain, n * C);
    chain_yrep[chain].resize(kept_per_chain, n * C);
    chain_edges[chain] = Eigen::MatrixXd::Zero(C, C);
    auto& samples = chain_samples[chain];
    long kept = 0;

    for (long t = 0; t < iters; ++t) {
      // (1) single-site random walk on U
      for (int c = 0; c < C; ++c) {
        for (int i = 0; i < n; ++i) {
          const double d = prior.s_u * rng.normal();
          double log_r = -(d * G(i, c) + 0.5 * d * d * K_R(i, i) * K_C(c, c));
          if (!prior.disable_likelihood && !data.holdout(i, c)) {
            const double e = U(i, c);
            log_r += data.y(i, c) * d - data.expected(i, c) * (std::exp(e + d) - std::exp(e));
          }
          ++u_prop;
          if (std::log(rng.uniform()) < log_r) {
            U(i, c) += d;
            R(i, c) += d;
            G.noalias() += d * K_R.col(i) * K_C.row(c);
            ++u_acc;
          }
        }
      }
      // (2) M Gibbs: precision s K_C + I/sigma2_M, mean prop. to K_C U' K_R 1
      {
        const Eigen::VectorXd kr_ones = K_R * Eigen::VectorXd::Ones(n);
        const double s = kr_ones.sum();
        const Eigen::MatrixXd P =
            s * K_C + Eigen::MatrixXd::Identity(C, C) / prior.sigma2_M;
        const Eigen::VectorXd rhs = K_C * (U.transpose() * kr_ones);
        Eigen::LLT<Eigen::MatrixXd> llt(P);
        Eigen::VectorXd z(C);
        for (int c = 0; c < C; ++c) z(c) = rng.normal();
        M = llt.solve(rhs) +
            llt.matrixU().solve(z);  // mean + chol-precision draw
        R = U - Eigen::VectorXd::Ones(n) * M.transpose();
        G = K_R * R * K_C;
      }
      // (2b) per-outcome joint translation of (M_c, U column c)
      for (int c = 0; c < C; ++c) {
        const double d = prior.s_shift * rng.normal();
        double log_r = (M(c) * M(c) - (M(c) + d) * (M(c) + d)) / (2.0 * prior.sigma2_M);
        if (!prior.disable_likelihood) {
          for (int i = 0; i < n; ++i) {
            if (data.holdout(i, c)) continue;
            const double e = U(i, c);
            log_r += data.y(i, c) * d - data.expected(i, c) * (std::exp(e + d) - std::exp(e));
          }
        }
        ++shift_prop;
        if (std::log(rng.uniform()) < log_r) {
          M(c) += d;
          U.col(c).array() += d;  // R and G unchanged
          ++shift_acc;
        }
      }
      // (3) spatial precision sweep
      if (uses_phi_r) {
        const Eigen::MatrixXd cond_scale =
            (prior.delta_R - 2.0) * d_rho[static_cast<std::size_t>(rho_idx)] +
            R * K_C * R.transpose();
        auto cond = TruncGWishartParams::conditional(structure_r, prior.delta_R + C, cond_scale,
                                                     prior.flavor == SpatialPrior::tgw,
                                                     prior.kr_fixed_first);
        phi_r_stats += mh_step(*phi_r, cond, {.sigma_m = prior.sigma_m}, rng);
        K_R = phi_r->precision();
        G = K_R * R * K_C;
      }
      // (4) outcome precision sweep (pinned first element)
      {
        const Eigen::MatrixXd cond_scale =
            (prior.delta_C - 2.0) * Eigen::MatrixXd::Identity(C, C) +
            R.transpose() * K_R * R;
        auto cond = TruncGWishartParams::conditional(gc.structure, prior.delta_C + n, cond_scale,
                                                     false, 1.0);
        phi_c_stats += mh_step(gc.phi, cond, {.sigma_m = prior.sigma_m}, rng);
        K_C = gc.phi.precision();
        G = K_R * R * K_C;
      }
      // (5) rho move
      if (!rho_fixed) {
        ++rho_prop;
        if (uses_phi_r) {
          const auto [to, logq] = rho_propose(rho_idx, static_cast<int>(support.size()), rng);
          const double log_rr =
              rho_log_accept(K_R, prior.delta_R, rho_idx, to, d_rho, *table, logq);
          if (std::log(rng.uniform()) < log_rr) {
            rho_idx = to;
            ++rho_acc;
          }
        } else {
          const Eigen::MatrixXd S_R = R * K_C * R.transpose();
          std::vector<double> logw(support.size());
          for (std::size_t k = 0; k < support.size(); ++k)
            logw[k] = 0.5 * C * car_logdet[k] - 0.5 * car_prec[k].cwiseProduct(S_R).sum();
          const double norm = log_sum_exp(logw);
          const double draw = rng.uniform();
          double cum = 0.0;
          int pick = static_cast<int>(support.size()) - 1;
          for (std::size_t k = 0; k < support.size(); ++k) {
            cum += std::exp(logw[k] - norm);
            if (draw <= cum) {
              pick = static_cast<int>(k);
              break;
            }
          }
          if (pick != rho_idx) ++rho_acc;
          rho_idx = pick;
          K_R = car_prec[static_cast<std::size_t>(rho_idx)];
          G = K_R * R * K_C;
        }
      }
      // (6) outcome-graph edge toggle
      if (prior.outcome_prior == OutcomePrior::gwishart_random && C >= 2) {
        const Eigen::MatrixXd cond_scale =
            prior.disable_likelihood
                ? (prior.delta_C - 2.0) * Eigen::MatrixXd::Identity(C, C)
                : Eigen::MatrixXd((prior.delta_C - 2.0) * Eigen::MatrixXd::Identity(C, C) +
                                  R.transpose() * K_R * R);
        ++gc_prop;
        if (gc_edge_move(gc, prior.delta_C + (prior.disable_likelihood ? 0 : n), cond_scale,
                         gc_cache, prior.gc_birth_sd, rng)) {
          ++gc_acc;
          K_C = gc.phi.precision();
          G = K_R * R * K_C;
        }
      }
      // (7) impute held-out counts (recorded through yrep below)

      if (t >= burn && (t - burn) % thin == 0) {
        std::vector<double> row;
        row.reserve(cols.size());
        for (int c = 0; c < C; ++c) row.push_back(M(c));
        row.push_back(support[static_cast<std::size_t>(rho_idx)]);
        if (uses_phi_r) {
          for (int i = 0; i < n; ++i) row.push_back(K_R(i, i));
          for (auto [i, j] : g.edges()) row.push_back(K_R(i, j));
          ++samples.cone_checks;
          const bool ok = prior.flavor == SpatialPrior::tgw ? in_restricted_cone(K_R, g)
                                                            : in_cone(K_R, g);
          if (!ok) ++samples.cone_violations;
          if (prior.kr_fixed_first) {
            ++samples.pin_checks;
            const double v = K_R(0, 0);
            if (std::memcmp(&v, &kr11_pin, sizeof(double)) != 0) ++samples.pin_violations;
          }
        }
        for (int a = 0; a < C; ++a)
          for (int b = a; b < C; ++b) row.push_back(K_C(a, b));
        ++samples.cone_checks;
        if (!in_cone(K_C, gc.structure->graph())) ++samples.cone_violations;
        ++samples.pin_checks;
        {
          const double v = K_C(0, 0);
          if (std::memcmp(&v, &kc11_pin, sizeof(double)) != 0) ++samples.pin_violations;
        }
        if (prior.outcome_prior == OutcomePrior::gwishart_random) {
          for (auto [a, b] : all_pairs) {
            const bool present = gc.structure->graph().has_edge(a, b);
            row.push_back(present ? 1.0 : 0.0);
            if (present) {
              chain_edges[chain](a, b) += 1.0;
              chain_edges[chain](b, a) += 1.0;
            }
          }
          ++chain_edge_draws[chain];
        }
        for (int c = 0; c < C; ++c) {
          for (int i = 0; i < n; ++i) {
            const double theta = std::exp(U(i, c));
            const double mu = data.expected(i, c) * theta;
            const long col = i + static_cast<long>(n) * c;
            chain_theta[chain](kept, col) = theta;
            chain_yrep[chain](kept, col) = static_cast<double>(rng.poisson(mu));
            chain_loglik[chain](kept, col) =
                data.holdout(i, c)
                    ? std::numeric_limits<double>::quiet_NaN()
                    : data.y(i, c) * std::log(mu) - mu - std::lgamma(data.y(i, c) + 1.0);
          }
        }
        samples.append(row, chain);
        ++kept;
      }
    }
    chain_theta[chain].conservativeResize(kept, n * C);
    chain_loglik[chain].conservativeResize(kept, n * C);
    chain_yrep[chain].conservativeResize(kept, n * C);
    samples.acceptance["u"] = u_prop ? double(u_acc) / u_prop : 0.0;
    samples.acceptance["shift"] = shift_prop ? double(shift_acc) / shift_prop : 0.0;
    if (!rho_fixed) samples.acceptance["rho"] = rho_prop ? double(rho_acc) / rho_prop : 0.0;
    if (uses_phi_r) samples.acceptance["phi_r"] = phi_r_stats.acceptance_rate();
    samples.acceptance["phi_c"] = phi_c_stats.acceptance_rate();
    if (gc_prop) samples.acceptance["gc"] = double(gc_acc) / gc_prop;
  };

  if (prior.jobs <= 1 || prior.chains == 1) {
    for (int c = 0; c < prior.chains; ++c) run_chain(c);
  } else {
    std::vector<std::thread> pool;
    for (int c = 0; c < prior.chains; ++c) pool.emplace_back(run_chain, c);
    for (auto& th : pool) th.join();
  }

  MultiFitResult out;
  out.outcome_prior = prior.outcome_prior;
  out.outcomes = data.outcomes;
  out.edge_freq = Eigen::MatrixXd::Zero(C, C);
  long total = 0;
  for (int c = 0; c < prior.chains; ++c) total += chain_theta[c].rows();
  out.theta.resize(total, n * C);
  out.pointwise_loglik.resize(total, n * C);
  out.yrep.resize(total, n * C);
  long at = 0;
  for (int c = 0; c < prior.chains; ++c) {
    out.samples.merge(chain_samples[c]);
    const long m = chain_theta[c].rows();
    out.theta.middleRows(at, m) = chain_theta[c];
    out.pointwise_loglik.middleRows(at, m) = chain_loglik[c];
    out.yrep.middleRows(at, m) = chain_yrep[c];
    out.edge_freq += chain_edges[c];
    out.edge_draws += chain_edge_draws[c];
    at += m;
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace tgwish
