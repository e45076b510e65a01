#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "tgwish/errors.hpp"
#include "tgwish/graph.hpp"
#include "tgwish/mathutil.hpp"

namespace tgwish {

inline constexpr double kNonEdgeTol = 1e-10;

struct SupportInterval {
  double lower = kNegInf;
  double upper = kInf;
  double width() const { return upper - lower; }
  bool contains(double x) const { return x > lower && x < upper; }
};

struct MatrixElement {
  int i = 0, j = 0;
  friend bool operator==(const MatrixElement&, const MatrixElement&) = default;
};

// Free/non-free bookkeeping for the Cholesky square root of a
// graph-constrained precision matrix, plus per-element dependency sets used
// by the support solver and the incremental sampler updates. Immutable once
// built; share one instance across chains on the same graph.
class CholStructure {
 public:
  explicit CholStructure(AdjacencyGraph g) : g_(std::move(g)), n_(g_.n()) {
    const int n = n_;
    free_idx_.assign(static_cast<std::size_t>(n) * n, -1);
    nonfree_idx_.assign(static_cast<std::size_t>(n) * n, -1);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        if (i == j || g_.has_edge(i, j)) {
          free_idx_[flat(i, j)] = static_cast<int>(free_.size());
          free_.push_back({i, j});
        } else {
          nonfree_idx_[flat(i, j)] = static_cast<int>(nonfree_.size());
          nonfree_.push_back({i, j});
        }
      }
    }
    nu_ = g_.nu_counts();
    build_dependencies();
  }

  const AdjacencyGraph& graph() const { return g_; }
  int n() const { return n_; }
  const std::vector<MatrixElement>& free_elements() const { return free_; }
  const std::vector<MatrixElement>& nonfree_elements() const { return nonfree_; }
  int nu(int i) const { return nu_[i]; }
  bool is_free(int i, int j) const { return free_idx_[flat(i, j)] >= 0; }
  int free_index(int i, int j) const { return free_idx_[flat(i, j)]; }

  // Non-free entries whose completion transitively involves free element f,
  // in lexicographic (= valid completion) order.
  const std::vector<int>& dependent_nonfree(int f) const { return dep_nonfree_[f]; }
  // Edges other than f itself whose constraint K_ij < 0 depends on f through
  // completed entries. For a diagonal element this excludes its forward
  // edges, which enter the support computation directly.
  const std::vector<MatrixElement>& dependent_edges(int f) const { return dep_edges_[f]; }
  // Rows containing entries that change when free element f moves.
  const std::vector<int>& touched_rows(int f) const { return touched_rows_[f]; }

 private:
  std::size_t flat(int i, int j) const { return static_cast<std::size_t>(i) * n_ + j; }

  using Deps = std::vector<std::uint64_t>;  // bitset over free-element indices
  static void set_bit(Deps& d, int b) { d[b >> 6] |= (1ULL << (b & 63)); }
  static bool test_bit(const Deps& d, int b) { return (d[b >> 6] >> (b & 63)) & 1ULL; }
  static void merge(Deps& d, const Deps& o) {
    for (std::size_t w = 0; w < d.size(); ++w) d[w] |= o[w];
  }

  void build_dependencies() {
    const int n = n_;
    const int nf = static_cast<int>(free_.size());
    const std::size_t words = (static_cast<std::size_t>(nf) + 63) / 64;
    // Structural dependence of every upper-triangular entry on the free set.
    std::vector<Deps> dep(static_cast<std::size_t>(n) * n, Deps(words, 0));
    std::vector<char> nz(static_cast<std::size_t>(n) * n, 0);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const int f = free_idx_[flat(i, j)];
        if (f >= 0) {
          set_bit(dep[flat(i, j)], f);
          nz[flat(i, j)] = 1;  // free values are generic
          continue;
        }
        auto& d = dep[flat(i, j)];
        for (int r = 0; r < i; ++r) {
          if (!nz[flat(r, i)] || !nz[flat(r, j)]) continue;
          nz[flat(i, j)] = 1;
          merge(d, dep[flat(r, i)]);
          merge(d, dep[flat(r, j)]);
        }
        // The completion divides by the diagonal of its own row.
        if (nz[flat(i, j)]) set_bit(d, free_idx_[flat(i, i)]);
      }
    }
    dep_nonfree_.assign(nf, {});
    dep_edges_.assign(nf, {});
    touched_rows_.assign(nf, {});
    for (int f = 0; f < nf; ++f) {
      for (int k = 0; k < static_cast<int>(nonfree_.size()); ++k) {
        const auto [i, j] = nonfree_[k];
        if (test_bit(dep[flat(i, j)], f)) dep_nonfree_[f].push_back(k);
      }
      std::vector<int> rows{free_[f].i};
      for (int k : dep_nonfree_[f]) rows.push_back(nonfree_[k].i);
      std::sort(rows.begin(), rows.end());
      rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
      touched_rows_[f] = std::move(rows);
    }
    // Constraint dependence: K_ij for an edge (i,j) sums products of column
    // entries above row i; only transitive (completed-entry) paths count.
    for (auto [i, j] : g_.edges()) {
      Deps d(words, 0);
      for (int r = 0; r < i; ++r) {
        if (!nz[flat(r, i)] || !nz[flat(r, j)]) continue;
        merge(d, dep[flat(r, i)]);
        merge(d, dep[flat(r, j)]);
      }
      for (int f = 0; f < nf; ++f) {
        if (free_[f].i == i && free_[f].j == j) continue;
        if (test_bit(d, f)) dep_edges_[f].push_back({i, j});
      }
    }
  }

  AdjacencyGraph g_;
  int n_ = 0;
  std::vector<MatrixElement> free_, nonfree_;
  std::vector<int> free_idx_, nonfree_idx_;
  std::vector<int> nu_;
  std::vector<std::vector<int>> dep_nonfree_;
  std::vector<std::vector<MatrixElement>> dep_edges_;
  std::vector<std::vector<int>> touched_rows_;
};

// Upper-triangular Phi with positive diagonal; K = Phi' * Phi. Mutable chain
// state: confine one instance to one chain at a time.
class CholeskyFactor {
 public:
  CholeskyFactor(std::shared_ptr<const CholStructure> s, Eigen::MatrixXd phi)
      : s_(std::move(s)), phi_(std::move(phi)) {
    if (phi_.rows() != s_->n() || phi_.cols() != s_->n())
      throw data_error("cholesky factor: dimension mismatch with graph");
    phi_.triangularView<Eigen::StrictlyLower>().setZero();
  }

  static CholeskyFactor identity(std::shared_ptr<const CholStructure> s) {
    const int n = s->n();
    return CholeskyFactor(std::move(s), Eigen::MatrixXd::Identity(n, n));
  }

  // Upper Cholesky factor of a matrix already in cone+(G).
  static CholeskyFactor from_precision(std::shared_ptr<const CholStructure> s,
                                       const Eigen::MatrixXd& K) {
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success)
      throw numeric_error("cholesky factor: matrix not positive definite");
    Eigen::MatrixXd phi = llt.matrixU();
    return CholeskyFactor(std::move(s), std::move(phi));
  }

  const CholStructure& structure() const { return *s_; }
  std::shared_ptr<const CholStructure> structure_ptr() const { return s_; }
  int n() const { return s_->n(); }
  const Eigen::MatrixXd& phi() const { return phi_; }
  double operator()(int i, int j) const { return phi_(i, j); }
  void set(int i, int j, double v) { phi_(i, j) = v; }

  Eigen::MatrixXd precision() const { return phi_.transpose() * phi_; }
  double log_det_precision() const { return 2.0 * phi_.diagonal().array().log().sum(); }

  // K_ij for one (i,j) without forming K.
  double precision_entry(int i, int j) const {
    const int m = std::min(i, j);
    double s = 0.0;
    for (int d = 0; d <= m; ++d) s += phi_(d, i) * phi_(d, j);
    return s;
  }

  void complete_all() {
    for (const auto& [i, j] : s_->nonfree_elements()) complete_entry(i, j);
  }

  // Re-complete only the entries downstream of free element f.
  void complete_dependents(int f) {
    for (int k : s_->dependent_nonfree(f)) {
      const auto& [i, j] = s_->nonfree_elements()[k];
      complete_entry(i, j);
    }
  }

  // Largest |Phi_ij - completion formula| over non-free entries.
  double completion_residual() const {
    double r = 0.0;
    for (const auto& [i, j] : s_->nonfree_elements()) {
      double sum = 0.0;
      for (int d = 0; d < i; ++d) sum += phi_(d, i) * phi_(d, j);
      r = std::max(r, std::fabs(phi_(i, j) + sum / phi_(i, i)));
    }
    return r;
  }

 private:
  void complete_entry(int i, int j) {
    if (!(phi_(i, i) > 0.0))
      throw numeric_error("completion: nonpositive diagonal at row " + std::to_string(i));
    double sum = 0.0;
    for (int d = 0; d < i; ++d) sum += phi_(d, i) * phi_(d, j);
    phi_(i, j) = -sum / phi_(i, i);
  }

  std::shared_ptr<const CholStructure> s_;
  Eigen::MatrixXd phi_;
};

// Fills the non-free entries so that K = Phi' * Phi vanishes off the graph;
// free entries are untouched.
inline CholeskyFactor complete_nonfree(CholeskyFactor phi) {
  phi.complete_all();
  return phi;
}

inline bool is_symmetric(const Eigen::MatrixXd& K, double tol = 1e-8) {
  return (K - K.transpose()).cwiseAbs().maxCoeff() <= tol;
}

// cone+(G): symmetric positive definite with zeros at non-edges.
inline bool in_cone(const Eigen::MatrixXd& K, const AdjacencyGraph& g,
                    double tol = kNonEdgeTol) {
  if (K.rows() != g.n() || K.cols() != g.n())
    throw data_error("in_cone: matrix dimension does not match graph");
  if (!is_symmetric(K)) return false;
  for (int i = 0; i < g.n(); ++i)
    for (int j = i + 1; j < g.n(); ++j)
      if (!g.has_edge(i, j) && std::fabs(K(i, j)) > tol) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  return llt.info() == Eigen::Success;
}

// cone+(G) intersected with S0 (strictly negative entries on edges).
inline bool in_restricted_cone(const Eigen::MatrixXd& K, const AdjacencyGraph& g,
                               double tol = kNonEdgeTol) {
  if (K.rows() != g.n() || K.cols() != g.n())
    throw data_error("in_restricted_cone: matrix dimension does not match graph");
  for (auto [i, j] : g.edges())
    if (!(K(i, j) < 0.0)) return false;
  return in_cone(K, g, tol);
}

namespace detail {

// Dense polynomial in one variable, low degree.
struct Poly {
  std::vector<double> c;  // c[k] x^k
  static Poly constant(double v) { return Poly{{v}}; }
  int degree() const { return static_cast<int>(c.size()) - 1; }
  double eval(double x) const {
    double r = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) r = r * x + c[k];
    return r;
  }
};

inline void add_product(Poly& acc, const Poly& a, const Poly& b, double scale) {
  const std::size_t deg = a.c.size() + b.c.size() - 1;
  if (acc.c.size() < deg) acc.c.resize(deg, 0.0);
  for (std::size_t p = 0; p < a.c.size(); ++p)
    for (std::size_t q = 0; q < b.c.size(); ++q) acc.c[p + q] += scale * a.c[p] * b.c[q];
}

inline void scale_poly(Poly& p, double s) {
  for (double& v : p.c) v *= s;
}

// Real roots; linear and quadratic cases in closed form (terms whose
// coefficient is below 1e-14 of the largest are treated as absent), higher
// degrees via the companion matrix with a short Newton polish.
inline std::vector<double> real_roots(const Poly& p) {
  double maxabs = 0.0;
  for (double v : p.c) maxabs = std::max(maxabs, std::fabs(v));
  if (maxabs == 0.0) return {};
  std::vector<double> c = p.c;
  while (c.size() > 1 && std::fabs(c.back()) <= 1e-14 * maxabs) c.pop_back();
  const int deg = static_cast<int>(c.size()) - 1;
  std::vector<double> roots;
  if (deg <= 0) return roots;
  if (deg == 1) {
    roots.push_back(-c[0] / c[1]);
    return roots;
  }
  if (deg == 2) {
    const double a = c[2], b = c[1], d = b * b - 4.0 * a * c[0];
    if (d < 0.0) return roots;
    const double sq = std::sqrt(d);
    const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
    roots.push_back(q / a);
    roots.push_back(q != 0.0 ? c[0] / q : 0.0);
    return roots;
  }
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
  for (int k = 0; k < deg; ++k) comp(k, deg - 1) = -c[k] / c[deg];
  for (int k = 1; k < deg; ++k) comp(k, k - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  for (int k = 0; k < deg; ++k) {
    const auto z = es.eigenvalues()[k];
    if (std::fabs(z.imag()) <= 1e-7 * (1.0 + std::fabs(z.real()))) {
      double r = z.real();
      for (int it = 0; it < 2; ++it) {
        double f = 0.0, df = 0.0;
        for (std::size_t m = c.size(); m-- > 0;) {
          df = df * r + f;
          f = f * r + c[m];
        }
        if (std::fabs(df) > 1e-300) r -= f / df;
      }
      roots.push_back(r);
    }
  }
  return roots;
}

// Component of {v : all polys < 0} containing v0, inside (hard_lo, hard_hi).
// Sign changes only happen at real roots, so walking segment midpoints
// outward from v0 finds the endpoints.
inline SupportInterval component_interval(const std::vector<Poly>& polys, double v0,
                                          double hard_lo, double hard_hi) {
  auto feasible = [&polys](double v) {
    for (const auto& h : polys)
      if (!(h.eval(v) < 0.0)) return false;
    return true;
  };
  std::vector<double> crossings;
  for (const auto& h : polys)
    for (double r : real_roots(h))
      if (std::isfinite(r)) crossings.push_back(r);
  std::sort(crossings.begin(), crossings.end());
  crossings.erase(std::unique(crossings.begin(), crossings.end(),
                              [](double a, double b) {
                                return std::fabs(a - b) <= 1e-13 * std::max(1.0, std::fabs(a));
                              }),
                  crossings.end());
  SupportInterval out{hard_lo, hard_hi};
  {
    std::vector<double> above;
    for (double r : crossings)
      if (r > v0 && r < hard_hi) above.push_back(r);
    for (std::size_t k = 0; k < above.size(); ++k) {
      double next;
      if (k + 1 < above.size())
        next = above[k + 1];
      else if (std::isfinite(hard_hi))
        next = hard_hi;
      else
        next = above[k] + std::max(1.0, std::fabs(above[k]));
      if (!feasible(0.5 * (above[k] + next))) {
        out.upper = above[k];
        break;
      }
    }
  }
  {
    std::vector<double> below;
    for (double r : crossings)
      if (r < v0 && r > hard_lo) below.push_back(r);
    std::sort(below.begin(), below.end(), std::greater<>());
    for (std::size_t k = 0; k < below.size(); ++k) {
      double next;
      if (k + 1 < below.size())
        next = below[k + 1];
      else if (std::isfinite(hard_lo))
        next = hard_lo;
      else
        next = below[k] - std::max(1.0, std::fabs(below[k]));
      if (!feasible(0.5 * (below[k] + next))) {
        out.lower = below[k];
        break;
      }
    }
  }
  return out;
}

}  // namespace detail

// Upper cap for off-diagonal free element (i0, j0):
// x < -(1/Phi_i0i0) sum_{d<i0} Phi_di0 Phi_dj0.
inline double offdiag_cap(const CholeskyFactor& phi, int i0, int j0) {
  double sum = 0.0;
  for (int d = 0; d < i0; ++d) sum += phi(d, i0) * phi(d, j0);
  return -sum / phi(i0, i0);
}

struct SupportOptions {
  int max_poly_degree = 64;
  bool force_bisection = false;
};

namespace detail {

// Polynomial representation of every entry that moves with free element f,
// in the given variable. "var" is the off-diagonal value itself, or t =
// 1/Phi_i0i0 for a diagonal element (the completion of row i0 is linear in
// t, so every constraint stays polynomial).
struct EntryPolys {
  std::vector<Poly> polys;
  std::vector<int> id;  // flat(i,j) -> index into polys, -1 when constant
  int n = 0;
  bool overflow = false;

  const Poly* poly_of(int i, int j) const {
    const int p = id[static_cast<std::size_t>(i) * n + j];
    return p >= 0 ? &polys[p] : nullptr;
  }
};

inline EntryPolys build_entry_polys(const CholeskyFactor& phi, int f, bool diag_in_t,
                                    int max_degree) {
  const auto& s = phi.structure();
  const int n = s.n();
  const auto [i0, j0] = s.free_elements()[f];
  EntryPolys out;
  out.n = n;
  out.id.assign(static_cast<std::size_t>(n) * n, -1);
  auto flat = [n](int i, int j) { return static_cast<std::size_t>(i) * n + j; };
  if (!diag_in_t) {
    out.id[flat(i0, j0)] = 0;
    out.polys.push_back(Poly{{0.0, 1.0}});
  }
  for (int k : s.dependent_nonfree(f)) {
    const auto& [i, j] = s.nonfree_elements()[k];
    Poly p = Poly::constant(0.0);
    if (diag_in_t && i == i0) {
      // Phi_i0j = -(sum_{d<i0} Phi_di0 Phi_dj) * t; rows above i0 are fixed.
      double sum = 0.0;
      for (int d = 0; d < i0; ++d) sum += phi(d, i0) * phi(d, j);
      p = Poly{{0.0, -sum}};
    } else {
      double const_part = 0.0;
      for (int d = 0; d < i; ++d) {
        const int pa = out.id[flat(d, i)], pb = out.id[flat(d, j)];
        const double va = phi(d, i), vb = phi(d, j);
        if (pa < 0 && pb < 0)
          const_part += va * vb;
        else if (pa >= 0 && pb >= 0)
          add_product(p, out.polys[pa], out.polys[pb], 1.0);
        else if (pa >= 0)
          add_product(p, out.polys[pa], Poly::constant(vb), 1.0);
        else
          add_product(p, Poly::constant(va), out.polys[pb], 1.0);
      }
      if (p.c.empty()) p.c.push_back(0.0);
      p.c[0] += const_part;
      scale_poly(p, -1.0 / phi(i, i));
    }
    if (p.degree() > max_degree) {
      out.overflow = true;
      return out;
    }
    out.id[flat(i, j)] = static_cast<int>(out.polys.size());
    out.polys.push_back(std::move(p));
  }
  return out;
}

// K_ij as a polynomial in the moving variable, from the entry polynomials.
inline Poly constraint_poly(const CholeskyFactor& phi, const EntryPolys& ep, int i, int j) {
  const int n = ep.n;
  auto flat = [n](int a, int b) { return static_cast<std::size_t>(a) * n + b; };
  Poly h = Poly::constant(0.0);
  double const_part = 0.0;
  for (int d = 0; d <= i; ++d) {
    const int pa = ep.id[flat(d, i)], pb = ep.id[flat(d, j)];
    const double va = phi(d, i), vb = phi(d, j);
    if (pa < 0 && pb < 0)
      const_part += va * vb;
    else if (pa >= 0 && pb >= 0)
      add_product(h, ep.polys[pa], ep.polys[pb], 1.0);
    else if (pa >= 0)
      add_product(h, ep.polys[pa], Poly::constant(vb), 1.0);
    else
      add_product(h, Poly::constant(va), ep.polys[pb], 1.0);
  }
  if (h.c.empty()) h.c.push_back(0.0);
  h.c[0] += const_part;
  return h;
}

// Exact-completion feasibility probe used by the bisection fallbacks.
inline bool probe_feasible(CholeskyFactor& scratch, int f, int i, int j, double value,
                           bool check_forward_row) {
  scratch.set(i, j, value);
  scratch.complete_dependents(f);
  const auto& s = scratch.structure();
  if (check_forward_row) {
    for (int k : s.graph().neighbors(i))
      if (k > i && !(scratch.precision_entry(i, k) < 0.0)) return false;
  }
  for (const auto& [a, b] : s.dependent_edges(f))
    if (!(scratch.precision_entry(a, b) < 0.0)) return false;
  return true;
}

inline SupportInterval offdiag_support_bisection(const CholeskyFactor& phi, int f, int i0,
                                                 int j0, double cap) {
  CholeskyFactor scratch = phi;
  const double x0 = phi(i0, j0);
  if (!probe_feasible(scratch, f, i0, j0, x0, false))
    throw numeric_error("offdiag_support: current configuration infeasible");
  SupportInterval out;
  {
    double lo = x0, hi = cap;
    while (hi - lo > 1e-12 * std::max(1.0, std::fabs(hi))) {
      const double mid = 0.5 * (lo + hi);
      if (probe_feasible(scratch, f, i0, j0, mid, false))
        lo = mid;
      else
        hi = mid;
    }
    out.upper = 0.5 * (lo + hi);
  }
  {
    double step = std::max(1.0, std::fabs(x0));
    double good = x0, probe = x0 - step;
    bool unbounded = true;
    while (std::fabs(probe) < 1e14) {
      if (!probe_feasible(scratch, f, i0, j0, probe, false)) {
        unbounded = false;
        break;
      }
      good = probe;
      step *= 2.0;
      probe = x0 - step;
    }
    if (unbounded) {
      out.lower = kNegInf;
    } else {
      double bad = probe;
      while (good - bad > 1e-12 * std::max(1.0, std::fabs(bad))) {
        const double mid = 0.5 * (good + bad);
        if (probe_feasible(scratch, f, i0, j0, mid, false))
          good = mid;
        else
          bad = mid;
      }
      out.lower = 0.5 * (good + bad);
    }
  }
  return out;
}

inline SupportInterval diag_support_bisection(const CholeskyFactor& phi, int f, int i0) {
  CholeskyFactor scratch = phi;
  const double x0 = phi(i0, i0);
  if (!probe_feasible(scratch, f, i0, i0, x0, true))
    throw numeric_error("diag_support: current configuration infeasible");
  SupportInterval out{0.0, kInf};
  {  // upper: expand then bisect
    double step = std::max(1.0, x0);
    double good = x0, probe = x0 + step;
    bool unbounded = true;
    while (probe < 1e14) {
      if (!probe_feasible(scratch, f, i0, i0, probe, true)) {
        unbounded = false;
        break;
      }
      good = probe;
      step *= 2.0;
      probe = x0 + step;
    }
    if (!unbounded) {
      double bad = probe;
      while (bad - good > 1e-12 * std::max(1.0, good)) {
        const double mid = 0.5 * (good + bad);
        if (probe_feasible(scratch, f, i0, i0, mid, true))
          good = mid;
        else
          bad = mid;
      }
      out.upper = 0.5 * (good + bad);
    }
  }
  {  // lower: halve toward zero then bisect
    double good = x0, probe = 0.5 * x0;
    bool reaches_zero = true;
    while (probe > 1e-14) {
      if (!probe_feasible(scratch, f, i0, i0, probe, true)) {
        reaches_zero = false;
        break;
      }
      good = probe;
      probe *= 0.5;
    }
    if (reaches_zero) {
      out.lower = 0.0;
    } else {
      double bad = probe;
      while (good - bad > 1e-12 * std::max(1.0, std::fabs(good))) {
        const double mid = 0.5 * (good + bad);
        if (probe_feasible(scratch, f, i0, i0, mid, true))
          good = mid;
        else
          bad = mid;
      }
      out.lower = 0.5 * (good + bad);
    }
  }
  return out;
}

}  // namespace detail

// Conditional support of the free off-diagonal element (i0, j0) given every
// other free element: the intersection of the dependent edge constraints'
// solution sets with the cap above. Constraints are exact polynomials in the
// moving element, obtained by propagating the completion formulas; the
// interval endpoints are the nearest constraint roots around the current
// value. Falls back to bisection on the exact completion when the polynomial
// route degenerates.
inline SupportInterval offdiag_support(const CholeskyFactor& phi, int i0, int j0,
                                       const SupportOptions& opt = {}) {
  const auto& s = phi.structure();
  if (i0 >= j0) throw data_error("offdiag_support: need i0 < j0");
  const int f = s.free_index(i0, j0);
  if (f < 0) throw data_error("offdiag_support: element is not a free off-diagonal");
  const double cap = offdiag_cap(phi, i0, j0);
  const double x0 = phi(i0, j0);
  if (!(x0 < cap)) throw numeric_error("offdiag_support: current configuration infeasible");

  const auto& edges = s.dependent_edges(f);
  if (edges.empty()) return {kNegInf, cap};
  if (opt.force_bisection) return detail::offdiag_support_bisection(phi, f, i0, j0, cap);

  const auto ep = detail::build_entry_polys(phi, f, false, opt.max_poly_degree);
  if (ep.overflow) return detail::offdiag_support_bisection(phi, f, i0, j0, cap);
  std::vector<detail::Poly> constraints;
  constraints.reserve(edges.size());
  for (const auto& [i, j] : edges) {
    detail::Poly h = detail::constraint_poly(phi, ep, i, j);
    if (h.degree() > opt.max_poly_degree)
      return detail::offdiag_support_bisection(phi, f, i0, j0, cap);
    if (!(h.eval(x0) < 0.0))
      throw numeric_error("offdiag_support: current configuration infeasible");
    constraints.push_back(std::move(h));
  }
  return detail::component_interval(constraints, x0, kNegInf, cap);
}

// Conditional support of a free diagonal element. The forward-edge bounds
// give x > -(sum_{d<i0} Phi_di0 Phi_dk) / Phi_i0k; constraints on edges
// further down can bind too because the completed row scales like 1/x, so
// the solver works in t = 1/x, where every constraint is again polynomial.
// Returns (0, inf) whenever nothing binds, in particular for the first and
// last index.
inline SupportInterval diag_support(const CholeskyFactor& phi, int i0,
                                    const SupportOptions& opt = {}) {
  const auto& s = phi.structure();
  const int f = s.free_index(i0, i0);
  const auto& g = s.graph();
  const double x0 = phi(i0, i0);
  if (!(x0 > 0.0)) throw numeric_error("diag_support: current configuration infeasible");
  if (opt.force_bisection) return detail::diag_support_bisection(phi, f, i0);

  std::vector<detail::Poly> constraints;
  // Forward edges, multiplied by t > 0: Phi_i0k + S_k t < 0.
  for (int k : g.neighbors(i0)) {
    if (k <= i0) continue;
    double sum = 0.0;
    for (int d = 0; d < i0; ++d) sum += phi(d, i0) * phi(d, k);
    constraints.push_back(detail::Poly{{phi(i0, k), sum}});
  }
  const auto& edges = s.dependent_edges(f);
  if (constraints.empty() && edges.empty()) return {0.0, kInf};

  const auto ep = detail::build_entry_polys(phi, f, true, opt.max_poly_degree);
  if (ep.overflow) return detail::diag_support_bisection(phi, f, i0);
  for (const auto& [i, j] : edges) {
    detail::Poly h = detail::constraint_poly(phi, ep, i, j);
    if (h.degree() > opt.max_poly_degree) return detail::diag_support_bisection(phi, f, i0);
    constraints.push_back(std::move(h));
  }
  const double t0 = 1.0 / x0;
  for (const auto& h : constraints)
    if (!(h.eval(t0) < 0.0)) throw numeric_error("diag_support: current configuration infeasible");
  const auto t_iv = detail::component_interval(constraints, t0, 0.0, kInf);
  SupportInterval out;
  out.lower = std::isfinite(t_iv.upper) ? 1.0 / t_iv.upper : 0.0;
  out.upper = t_iv.lower > 0.0 ? 1.0 / t_iv.lower : kInf;
  return out;
}

}  // namespace tgwish
