#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tgwish/chol_space.hpp"
#include "tgwish/errors.hpp"
#include "tgwish/graph.hpp"
#include "tgwish/mathutil.hpp"
#include "tgwish/rng.hpp"
#include "tgwish/truncnorm.hpp"

namespace tgwish {

// Parameters of the (possibly truncated) G-Wishart density
//   |K|^{(delta-2)/2} exp(-<K, scale>/2) on cone+(G) (intersected with S0
// when truncated). fixed_first pins K_11 to the given value; the first
// diagonal element of Phi is then excluded from sampling sweeps.
struct TruncGWishartParams {
  std::shared_ptr<const CholStructure> structure;
  double delta = 3.0;
  Eigen::MatrixXd scale;
  bool truncated = true;
  std::optional<double> fixed_first;

  const AdjacencyGraph& graph() const { return structure->graph(); }

  // Validated constructor for use as a prior: requires delta > 2 and
  // scale^{-1} in cone+(G); for the truncated family the edge entries of the
  // inverse must also be nonpositive (closure of S0 — the grid includes
  // rho = 0, where they are exactly zero).
  static TruncGWishartParams prior(std::shared_ptr<const CholStructure> s, double delta,
                                   Eigen::MatrixXd scale, bool truncated,
                                   std::optional<double> fixed_first = std::nullopt) {
    if (!(delta > 2.0)) throw config_error("g-wishart prior: delta must exceed 2");
    if (scale.rows() != s->n() || scale.cols() != s->n())
      throw config_error("g-wishart prior: scale dimension mismatch");
    if (!is_symmetric(scale)) throw config_error("g-wishart prior: scale must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(scale);
    if (llt.info() != Eigen::Success)
      throw config_error("g-wishart prior: scale must be positive definite");
    const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(s->n(), s->n()));
    const auto& g = s->graph();
    if (!in_cone(inv, g, 1e-8))
      throw config_error("g-wishart prior: inverse scale not in cone+(G)");
    if (truncated)
      for (auto [i, j] : g.edges())
        if (inv(i, j) > 1e-8)
          throw config_error("g-wishart prior: inverse scale has a positive edge entry");
    TruncGWishartParams p;
    p.structure = std::move(s);
    p.delta = delta;
    p.scale = std::move(scale);
    p.truncated = truncated;
    p.fixed_first = fixed_first;
    return p;
  }

  // Unvalidated variant for full-conditional targets, where the data part of
  // the scale matrix need not live in the cone itself.
  static TruncGWishartParams conditional(std::shared_ptr<const CholStructure> s, double delta,
                                         Eigen::MatrixXd scale, bool truncated,
                                         std::optional<double> fixed_first = std::nullopt) {
    TruncGWishartParams p;
    p.structure = std::move(s);
    p.delta = delta;
    p.scale = std::move(scale);
    p.truncated = truncated;
    p.fixed_first = fixed_first;
    return p;
  }
};

// ((delta-2)/2) log|K| - <K, scale>/2, or -inf outside the supported cone.
inline double log_unnorm_density(const Eigen::MatrixXd& K, const TruncGWishartParams& p) {
  const auto& g = p.graph();
  if (!is_symmetric(K)) return kNegInf;
  if (p.truncated ? !in_restricted_cone(K, g) : !in_cone(K, g)) return kNegInf;
  if (p.fixed_first &&
      std::fabs(K(0, 0) - *p.fixed_first) > 1e-9 * std::max(1.0, std::fabs(*p.fixed_first)))
    return kNegInf;
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  const double logdet = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  return 0.5 * (p.delta - 2.0) * logdet - 0.5 * (K.cwiseProduct(p.scale)).sum();
}

// Feasible starting factor: the mode (delta-2) * scale^{-1}, nudged strictly
// inside S0 for the truncated family (the mode can sit on the boundary, e.g.
// at rho = 0), and with the first row rescaled when K_11 is pinned.
inline CholeskyFactor initial_factor(const TruncGWishartParams& p) {
  const int n = p.structure->n();
  const auto& g = p.structure->graph();
  Eigen::LLT<Eigen::MatrixXd> llt(p.scale);
  if (llt.info() != Eigen::Success)
    throw numeric_error("initial_factor: scale not positive definite");
  Eigen::MatrixXd mode = (p.delta - 2.0) * llt.solve(Eigen::MatrixXd::Identity(n, n));
  if (p.truncated) {
    // I + D_w - W lies strictly inside the restricted cone for any graph.
    Eigen::MatrixXd bump = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) bump(i, i) += g.degree(i);
    for (auto [i, j] : g.edges()) bump(i, j) = bump(j, i) = -1.0;
    mode += (0.01 * mode.trace() / bump.trace()) * bump;
  }
  CholeskyFactor phi = CholeskyFactor::from_precision(p.structure, mode);
  if (p.fixed_first) {
    if (!(*p.fixed_first > 0.0)) throw config_error("initial_factor: fixed K_11 must be positive");
    phi.set(0, 0, std::sqrt(*p.fixed_first));
  }
  phi.complete_all();
  if (p.truncated && !in_restricted_cone(phi.precision(), g))
    throw numeric_error("initial_factor: could not build a feasible truncated start");
  return phi;
}

struct MhOptions {
  double sigma_m = 2.0;      // proposal sd for Phi updates
  bool zero_perturbation = false;  // test hook: propose the current value
};

struct MhSweepStats {
  long proposals = 0;
  long accepts = 0;
  long degenerate = 0;  // skipped elements (empty/degenerate support)

  MhSweepStats& operator+=(const MhSweepStats& o) {
    proposals += o.proposals;
    accepts += o.accepts;
    degenerate += o.degenerate;
    return *this;
  }
  double acceptance_rate() const {
    return proposals > 0 ? static_cast<double>(accepts) / static_cast<double>(proposals) : 0.0;
  }
};

namespace detail {

inline double row_quadform(const CholeskyFactor& phi, const Eigen::MatrixXd& d, int r) {
  return phi.phi().row(r) * d * phi.phi().row(r).transpose();
}

}  // namespace detail

// One full Metropolis-Hastings sweep over the free elements of Phi in
// lexicographic order: compute the conditional support, propose from a
// truncated normal centered at the current value, re-complete the dependent
// non-free entries, and accept with the ratio
//   (Phi'_ii / Phi_ii)^{delta + nu_i - 1} exp(-<K' - K, scale>/2)
//   * TNorm(old; new, ...) / TNorm(new; old, ...).
inline MhSweepStats mh_step(CholeskyFactor& phi, const TruncGWishartParams& p,
                            const MhOptions& opt, Rng& rng) {
  const auto& s = phi.structure();
  if (s.graph().hash() != p.graph().hash())
    throw data_error("mh_step: factor and parameters use different graphs");
  MhSweepStats stats;
  const std::size_t n_free = s.free_elements().size();
  for (std::size_t f = 0; f < n_free; ++f) {
    const auto [i, j] = s.free_elements()[f];
    if (p.fixed_first && i == 0 && j == 0) continue;
    const bool diagonal = (i == j);
    SupportInterval support;
    if (p.truncated) {
      try {
        support = diagonal ? diag_support(phi, i) : offdiag_support(phi, i, j);
      } catch (const numeric_error&) {
        ++stats.degenerate;
        continue;
      }
      if (support.width() < 1e-12) {
        ++stats.degenerate;
        continue;
      }
    } else {
      support = diagonal ? SupportInterval{0.0, kInf} : SupportInterval{kNegInf, kInf};
    }
    const double current = phi(i, j);
    ++stats.proposals;
    const double proposal =
        opt.zero_perturbation
            ? current
            : sample_truncnorm({current, opt.sigma_m, support.lower, support.upper}, rng);

    const auto& rows = s.touched_rows(static_cast<int>(f));
    std::vector<double> old_quad(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
      old_quad[r] = detail::row_quadform(phi, p.scale, rows[r]);

    // Stash entries that the move can change.
    std::vector<std::pair<MatrixElement, double>> saved;
    saved.reserve(1 + s.dependent_nonfree(static_cast<int>(f)).size());
    saved.push_back({{i, j}, current});
    for (int k : s.dependent_nonfree(static_cast<int>(f))) {
      const auto& e = s.nonfree_elements()[k];
      saved.push_back({e, phi(e.i, e.j)});
    }

    phi.set(i, j, proposal);
    phi.complete_dependents(static_cast<int>(f));

    double trace_delta = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r)
      trace_delta += detail::row_quadform(phi, p.scale, rows[r]) - old_quad[r];

    double log_r = -0.5 * trace_delta;
    if (diagonal) log_r += (p.delta + s.nu(i) - 1.0) * std::log(proposal / current);
    log_r += truncnorm_log_mass(current, opt.sigma_m, support.lower, support.upper) -
             truncnorm_log_mass(proposal, opt.sigma_m, support.lower, support.upper);

    if (std::log(rng.uniform()) < log_r) {
      ++stats.accepts;
    } else {
      for (const auto& [e, v] : saved) phi.set(e.i, e.j, v);
    }
  }
  return stats;
}

}  // namespace tgwish
