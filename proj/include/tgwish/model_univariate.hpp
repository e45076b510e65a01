#pragma once

#include <chrono>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "tgwish/car.hpp"
#include "tgwish/dataset.hpp"
#include "tgwish/errors.hpp"
#include "tgwish/gwishart.hpp"
#include "tgwish/norm_const.hpp"
#include "tgwish/posterior.hpp"
#include "tgwish/rng.hpp"

namespace tgwish {

enum class SpatialPrior { tgw, gw, car };

inline SpatialPrior spatial_prior_from_string(const std::string& s) {
  if (s == "tgw") return SpatialPrior::tgw;
  if (s == "gw") return SpatialPrior::gw;
  if (s == "car") return SpatialPrior::car;
  throw config_error("unknown model flavor '" + s + "' (expected tgw, gw, or car)");
}

struct UniPriorConfig {
  SpatialPrior flavor = SpatialPrior::tgw;
  double sigma2_alpha = 1.0;
  double sigma2_beta = 100.0;  // sigma_beta = 10
  double a = 0.5;
  double b = 0.0015;  // Gam(a, b), rate parameterization
  double delta = 3.0;
  double sigma_m = 2.0;  // Phi proposal sd
  double s_u = 0.1;      // u proposal sd
  double s_beta = 0.1;   // beta proposal sd
  double s_shift = 0.2;  // joint (alpha, u) translation sd
  double s_scale = 0.3;  // log-scale sd of the (u - alpha 1, tau2) swap
  long iterations = 10000;
  long burnin = -1;  // negative: half the run
  int thin = 10;
  int chains = 1;
  int jobs = 1;
  std::uint64_t seed = 1;
  bool disable_likelihood = false;   // test hook: sample the prior
  std::optional<double> fix_tau2;    // test hook: freeze the random-effect scale

  long effective_burnin() const { return burnin >= 0 ? burnin : iterations / 2; }
};

struct UniFitResult {
  PosteriorSamples samples;
  Eigen::MatrixXd theta;             // draws x n
  Eigen::MatrixXd pointwise_loglik;  // draws x n
  Eigen::MatrixXd yrep;              // draws x n
  double wall_seconds = 0.0;
};

// Adjacent-value proposal on the rho grid. Returns the proposed index and
// the log proposal correction log q(from|to) - log q(to|from); interior
// moves are symmetric, boundary moves pick the single neighbor with
// probability one.
inline std::pair<int, double> rho_propose(int idx, int grid_size, Rng& rng) {
  int to;
  if (idx == 0)
    to = 1;
  else if (idx == grid_size - 1)
    to = grid_size - 2;
  else
    to = rng.uniform() < 0.5 ? idx - 1 : idx + 1;
  auto logq = [grid_size](int from, int target) {
    (void)target;
    return (from == 0 || from == grid_size - 1) ? 0.0 : std::log(0.5);
  };
  return {to, logq(to, idx) - logq(idx, to)};
}

// log acceptance ratio of the adjacent-grid rho move:
// -(delta-2)/2 tr[K (D(rho') - D(rho))] + log I(rho) - log I(rho') + log
// proposal correction.
inline double rho_log_accept(const Eigen::MatrixXd& K, double delta, int from, int to,
                             const std::vector<Eigen::MatrixXd>& d_rho,
                             const NormConstTable& table, double log_q_correction) {
  const double trace_term =
      -0.5 * (delta - 2.0) *
      (K.cwiseProduct(d_rho[static_cast<std::size_t>(to)] -
                      d_rho[static_cast<std::size_t>(from)]))
          .sum();
  return trace_term + table.log_ratio_between(from, to) + log_q_correction;
}

namespace detail {

struct UniChain {
  // Per-chain state
  Eigen::VectorXd u;
  double alpha = 0.0;
  Eigen::VectorXd beta;
  double tau2 = 1.0;
  int rho_idx = 0;
  std::optional<CholeskyFactor> phi;  // absent for the CAR flavor
  Eigen::MatrixXd K;
  Eigen::VectorXd K_ones;  // K 1
  Eigen::VectorXd v;       // K (u - alpha 1)
  // accept counters
  long u_prop = 0, u_acc = 0;
  long beta_prop = 0, beta_acc = 0;
  long shift_prop = 0, shift_acc = 0;
  long scale_prop = 0, scale_acc = 0;
  long rho_prop = 0, rho_acc = 0;
  MhSweepStats phi_stats;

  void refresh_precision_products() {
    K_ones = K.rowwise().sum();
    v = K * (u - Eigen::VectorXd::Constant(u.size(), alpha));
  }
};

}  // namespace detail

// Full univariate fit: Poisson counts, Gaussian spatial effects with a
// truncated G-Wishart / G-Wishart / proper-CAR precision prior, discrete
// rho. Chains run independently on separate seeds and are concatenated.
inline UniFitResult fit_univariate(const ArealDataset& data, const UniPriorConfig& prior,
                                   const NormConstTable* table) {
  data.validate();
  const auto& g = *data.graph;
  if (!g.connected()) throw data_error("fit_univariate: graph must be connected");
  const int n = g.n();
  const int p = data.p();
  const auto& grid = rho_grid();
  const double w1 = static_cast<double>(g.degree(0));

  const bool uses_phi = prior.flavor != SpatialPrior::car;
  if (uses_phi) {
    if (table == nullptr)
      throw config_error(
          "fit_univariate: the tgw/gw flavors need a normalizing-constant table; run the "
          "normconst command first");
    table->check_compatible(g, prior.delta, prior.flavor == SpatialPrior::tgw, w1);
    if (table->grid != grid) throw config_error("fit_univariate: table grid mismatch");
  }

  // Shared read-only pieces.
  auto structure = std::make_shared<CholStructure>(g);
  std::vector<Eigen::MatrixXd> d_rho;      // D(rho_k)
  std::vector<Eigen::MatrixXd> car_prec;   // D_w - rho_k W (car flavor)
  std::vector<double> car_logdet;
  d_rho.reserve(grid.size());
  for (double r : grid) d_rho.push_back(d_rho_inverse(g, r));
  if (!uses_phi) {
    for (double r : grid) {
      car_prec.push_back(car_matrix(g, r));
      car_logdet.push_back(
          2.0 * Eigen::MatrixXd(car_prec.back().llt().matrixL()).diagonal().array().log().sum());
    }
  }

  std::vector<std::string> cols{"alpha", "tau2", "rho"};
  for (int k = 0; k < p; ++k) cols.push_back("beta_" + std::to_string(k + 1));
  for (int i = 0; i < n; ++i) cols.push_back("theta_" + g.label(i));
  for (int i = 0; i < n; ++i) cols.push_back("u_" + g.label(i));
  if (uses_phi) {
    for (int i = 0; i < n; ++i) cols.push_back("K_" + std::to_string(i + 1) + "_" + std::to_string(i + 1));
    for (auto [i, j] : g.edges())
      cols.push_back("K_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
  }

  const long iters = prior.iterations;
  const long burn = prior.effective_burnin();
  const int thin = std::max(1, prior.thin);
  const long kept_per_chain = (iters - burn + thin - 1) / thin;

  std::vector<PosteriorSamples> chain_samples(prior.chains, PosteriorSamples(cols));
  std::vector<Eigen::MatrixXd> chain_theta(prior.chains), chain_loglik(prior.chains),
      chain_yrep(prior.chains);

  const auto t0 = std::chrono::steady_clock::now();

  auto run_chain = [&](int c) {
    Rng rng(prior.seed, static_cast<std::uint64_t>(c) + 1);
    detail::UniChain st;
    st.u.resize(n);
    for (int i = 0; i < n; ++i) st.u(i) = std::log((data.y(i) + 0.5) / data.expected(i));
    st.alpha = st.u.mean();
    st.beta = Eigen::VectorXd::Zero(p);
    st.tau2 = prior.fix_tau2.value_or(1.0);
    st.rho_idx = 16;  // rho = 0.80
    if (uses_phi) {
      auto p0 = TruncGWishartParams::prior(
          structure, prior.delta,
          (prior.delta - 2.0) * d_rho[static_cast<std::size_t>(st.rho_idx)],
          prior.flavor == SpatialPrior::tgw, w1);
      st.phi = initial_factor(p0);
      st.K = st.phi->precision();
    } else {
      st.K = car_prec[static_cast<std::size_t>(st.rho_idx)];
    }
    st.refresh_precision_products();
    const double k11_pin = uses_phi ? st.K(0, 0) : 0.0;

    chain_theta[c].resize(kept_per_chain, n);
    chain_loglik[c].resize(kept_per_chain, n);
    chain_yrep[c].resize(kept_per_chain, n);
    auto& samples = chain_samples[c];
    long kept = 0;

    Eigen::VectorXd eta(n), ones = Eigen::VectorXd::Ones(n);
    auto linpred = [&](int i) { return (p > 0 ? data.covariates.row(i).dot(st.beta) : 0.0) + st.u(i); };

    for (long t = 0; t < iters; ++t) {
      // (i) single-site random walk on u
      for (int i = 0; i < n; ++i) {
        const double d = prior.s_u * rng.normal();
        double log_r = -st.tau2 * (d * st.v(i) + 0.5 * d * d * st.K(i, i));
        if (!prior.disable_likelihood) {
          const double e = linpred(i);
          log_r += data.y(i) * d - data.expected(i) * (std::exp(e + d) - std::exp(e));
        }
        ++st.u_prop;
        if (std::log(rng.uniform()) < log_r) {
          st.u(i) += d;
          st.v += d * st.K.col(i);
          ++st.u_acc;
        }
      }
      // (ii) alpha Gibbs
      {
        const double prec = 1.0 / prior.sigma2_alpha + st.tau2 * st.K_ones.sum();
        const double mean = st.tau2 * st.K_ones.dot(st.u) / prec;
        const double alpha_new = mean + rng.normal() / std::sqrt(prec);
        st.v -= (alpha_new - st.alpha) * st.K_ones;
        st.alpha = alpha_new;
      }
      // (ii-b) joint translation of (alpha, u): u - alpha 1 is invariant, so
      // only the alpha prior and the likelihood enter. Decouples alpha from
      // the slow single-site walk on the mean level.
      {
        const double d = prior.s_shift * rng.normal();
        double log_r =
            (st.alpha * st.alpha - (st.alpha + d) * (st.alpha + d)) / (2.0 * prior.sigma2_alpha);
        if (!prior.disable_likelihood) {
          for (int i = 0; i < n; ++i) {
            const double e = linpred(i);
            log_r += data.y(i) * d - data.expected(i) * (std::exp(e + d) - std::exp(e));
          }
        }
        ++st.shift_prop;
        if (std::log(rng.uniform()) < log_r) {
          st.alpha += d;
          st.u.array() += d;  // v unchanged
          ++st.shift_acc;
        }
      }
      // (iii) tau2 Gibbs
      if (!prior.fix_tau2) {
        const Eigen::VectorXd centered = st.u - st.alpha * ones;
        const double quad = centered.dot(st.v);
        st.tau2 = rng.gamma(prior.a + 0.5 * n, prior.b + 0.5 * quad);
      }
      // (iii-b) scale swap (u - alpha 1, tau2) -> (c (u - alpha 1), tau2/c^2):
      // the Gaussian prior term is invariant; acceptance carries the tau2
      // prior, the Jacobian, and the likelihood.
      if (!prior.fix_tau2) {
        const double z = prior.s_scale * rng.normal();
        const double c = std::exp(z);
        double log_r = -2.0 * prior.a * z - prior.b * st.tau2 * (std::exp(-2.0 * z) - 1.0);
        if (!prior.disable_likelihood) {
          for (int i = 0; i < n; ++i) {
            const double e_old = linpred(i);
            const double e_new = e_old + (c - 1.0) * (st.u(i) - st.alpha);
            log_r += data.y(i) * (e_new - e_old) -
                     data.expected(i) * (std::exp(e_new) - std::exp(e_old));
          }
        }
        ++st.scale_prop;
        if (std::log(rng.uniform()) < log_r) {
          st.u = st.alpha * ones + c * (st.u - st.alpha * ones);
          st.tau2 /= c * c;
          st.v *= c;
          ++st.scale_acc;
        }
      }
      // (iv) beta random walk
      if (p > 0) {
        Eigen::VectorXd prop = st.beta;
        for (int k = 0; k < p; ++k) prop(k) += prior.s_beta * rng.normal();
        double log_r = (st.beta.squaredNorm() - prop.squaredNorm()) / (2.0 * prior.sigma2_beta);
        if (!prior.disable_likelihood) {
          for (int i = 0; i < n; ++i) {
            const double e_old = data.covariates.row(i).dot(st.beta) + st.u(i);
            const double e_new = data.covariates.row(i).dot(prop) + st.u(i);
            log_r += data.y(i) * (e_new - e_old) -
                     data.expected(i) * (std::exp(e_new) - std::exp(e_old));
          }
        }
        ++st.beta_prop;
        if (std::log(rng.uniform()) < log_r) {
          st.beta = prop;
          ++st.beta_acc;
        }
      }
      // (v) Phi sweep against the full conditional
      if (uses_phi) {
        const Eigen::VectorXd centered = st.u - st.alpha * ones;
        const Eigen::MatrixXd cond_scale =
            (prior.delta - 2.0) * d_rho[static_cast<std::size_t>(st.rho_idx)] +
            st.tau2 * (centered * centered.transpose());
        auto cond = TruncGWishartParams::conditional(structure, prior.delta + 1.0, cond_scale,
                                                     prior.flavor == SpatialPrior::tgw, w1);
        st.phi_stats += mh_step(*st.phi, cond, {.sigma_m = prior.sigma_m}, rng);
        st.K = st.phi->precision();
        st.refresh_precision_products();
      }
      // (vi) rho move
      {
        ++st.rho_prop;
        if (uses_phi) {
          const auto [to, logq] = rho_propose(st.rho_idx, static_cast<int>(grid.size()), rng);
          const double log_r = rho_log_accept(st.K, prior.delta, st.rho_idx, to, d_rho, *table, logq);
          if (std::log(rng.uniform()) < log_r) {
            st.rho_idx = to;
            ++st.rho_acc;
          }
        } else {
          // proper CAR: the conditional over the grid is available in closed
          // form through the determinants.
          const Eigen::VectorXd centered = st.u - st.alpha * ones;
          std::vector<double> logw(grid.size());
          for (std::size_t k = 0; k < grid.size(); ++k)
            logw[k] = 0.5 * car_logdet[k] -
                      0.5 * st.tau2 * centered.dot(car_prec[k] * centered);
          const double norm = log_sum_exp(logw);
          const double draw = rng.uniform();
          double cum = 0.0;
          int pick = static_cast<int>(grid.size()) - 1;
          for (std::size_t k = 0; k < grid.size(); ++k) {
            cum += std::exp(logw[k] - norm);
            if (draw <= cum) {
              pick = static_cast<int>(k);
              break;
            }
          }
          if (pick != st.rho_idx) ++st.rho_acc;
          st.rho_idx = pick;
          st.K = car_prec[static_cast<std::size_t>(st.rho_idx)];
          st.refresh_precision_products();
        }
      }

      if (t >= burn && (t - burn) % thin == 0) {
        std::vector<double> row;
        row.reserve(cols.size());
        row.push_back(st.alpha);
        row.push_back(st.tau2);
        row.push_back(grid[static_cast<std::size_t>(st.rho_idx)]);
        for (int k = 0; k < p; ++k) row.push_back(st.beta(k));
        for (int i = 0; i < n; ++i) {
          const double theta = std::exp(linpred(i));
          chain_theta[c](kept, i) = theta;
          const double mu = data.expected(i) * theta;
          chain_loglik[c](kept, i) = data.y(i) * std::log(mu) - mu - std::lgamma(data.y(i) + 1.0);
          chain_yrep[c](kept, i) = static_cast<double>(rng.poisson(mu));
          row.push_back(theta);
        }
        for (int i = 0; i < n; ++i) row.push_back(st.u(i));
        if (uses_phi) {
          for (int i = 0; i < n; ++i) row.push_back(st.K(i, i));
          for (auto [i, j] : g.edges()) row.push_back(st.K(i, j));
          // constraint enforcement, checked continuously
          ++samples.cone_checks;
          const bool ok = prior.flavor == SpatialPrior::tgw ? in_restricted_cone(st.K, g)
                                                            : in_cone(st.K, g);
          if (!ok) ++samples.cone_violations;
          ++samples.pin_checks;
          const double k11 = st.K(0, 0);
          if (std::memcmp(&k11, &k11_pin, sizeof(double)) != 0) ++samples.pin_violations;
        }
        samples.append(row, c);
        ++kept;
      }
    }
    chain_theta[c].conservativeResize(kept, n);
    chain_loglik[c].conservativeResize(kept, n);
    chain_yrep[c].conservativeResize(kept, n);
    samples.acceptance["u"] = st.u_prop ? double(st.u_acc) / st.u_prop : 0.0;
    if (p > 0) samples.acceptance["beta"] = st.beta_prop ? double(st.beta_acc) / st.beta_prop : 0.0;
    samples.acceptance["rho"] = st.rho_prop ? double(st.rho_acc) / st.rho_prop : 0.0;
    samples.acceptance["shift"] = st.shift_prop ? double(st.shift_acc) / st.shift_prop : 0.0;
    if (st.scale_prop)
      samples.acceptance["scale"] = double(st.scale_acc) / st.scale_prop;
    if (uses_phi) samples.acceptance["phi"] = st.phi_stats.acceptance_rate();
  };

  if (prior.jobs <= 1 || prior.chains == 1) {
    for (int c = 0; c < prior.chains; ++c) run_chain(c);
  } else {
    std::vector<std::thread> pool;
    for (int c = 0; c < prior.chains; ++c) pool.emplace_back(run_chain, c);
    for (auto& th : pool) th.join();
  }

  UniFitResult out;
  long total = 0;
  for (int c = 0; c < prior.chains; ++c) total += chain_theta[c].rows();
  out.theta.resize(total, n);
  out.pointwise_loglik.resize(total, n);
  out.yrep.resize(total, n);
  long at = 0;
  for (int c = 0; c < prior.chains; ++c) {
    out.samples.merge(chain_samples[c]);
    const long m = chain_theta[c].rows();
    out.theta.middleRows(at, m) = chain_theta[c];
    out.pointwise_loglik.middleRows(at, m) = chain_loglik[c];
    out.yrep.middleRows(at, m) = chain_yrep[c];
    at += m;
  }
  // average acceptance across chains
  for (auto& [k, v] : out.samples.acceptance) {
    double sum = 0.0;
    int cnt = 0;
    for (int c = 0; c < prior.chains; ++c) {
      const auto it = chain_samples[c].acceptance.find(k);
      if (it != chain_samples[c].acceptance.end()) {
        sum += it->second;
        ++cnt;
      }
    }
    if (cnt > 0) v = sum / cnt;
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace tgwish
