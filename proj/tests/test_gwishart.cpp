#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <memory>

#include "tgwish/car.hpp"
#include "tgwish/gwishart.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace tgwish;

namespace {
std::shared_ptr<const CholStructure> structure_of(const AdjacencyGraph& g) {
  return std::make_shared<CholStructure>(g);
}
}  // namespace

TEST_CASE("log unnormalized density examples") {
  SECTION("identity, delta 3, complete graph on 3") {
    auto s = structure_of(testsupport::complete_graph(3));
    auto p = TruncGWishartParams::conditional(s, 3.0, Eigen::MatrixXd::Identity(3, 3), false);
    CHECK_THAT(log_unnorm_density(Eigen::MatrixXd::Identity(3, 3), p),
               Catch::Matchers::WithinAbs(-1.5, 1e-12));
  }
  SECTION("identity fails the truncated support when edges exist") {
    auto s = structure_of(testsupport::complete_graph(2));
    auto p = TruncGWishartParams::conditional(s, 3.0, Eigen::MatrixXd::Identity(2, 2), true);
    CHECK(log_unnorm_density(Eigen::MatrixXd::Identity(2, 2), p) == kNegInf);
  }
  SECTION("2I with delta 4") {
    auto s = structure_of(testsupport::complete_graph(2));
    auto p = TruncGWishartParams::conditional(s, 4.0, Eigen::MatrixXd::Identity(2, 2), false);
    CHECK_THAT(log_unnorm_density(2.0 * Eigen::MatrixXd::Identity(2, 2), p),
               Catch::Matchers::WithinAbs(std::log(4.0) - 2.0, 1e-12));
  }
  SECTION("zero-pattern violation is out of support") {
    auto s = structure_of(testsupport::path_graph(3));
    auto p = TruncGWishartParams::conditional(s, 3.0, Eigen::MatrixXd::Identity(3, 3), false);
    Eigen::MatrixXd K = Eigen::MatrixXd::Identity(3, 3);
    K(0, 2) = K(2, 0) = 0.4;
    CHECK(log_unnorm_density(K, p) == kNegInf);
  }
}

TEST_CASE("prior params validation") {
  auto s = structure_of(testsupport::complete_graph(2));
  CHECK_THROWS_AS(
      TruncGWishartParams::prior(s, 2.0, Eigen::MatrixXd::Identity(2, 2), false),
      config_error);
  // Identity scale sits on the boundary of S0 (zero edge entries): accepted,
  // matching the rho = 0 end of the grid.
  CHECK_NOTHROW(TruncGWishartParams::prior(s, 3.0, Eigen::MatrixXd::Identity(2, 2), true));
  // A positive edge entry in the inverse is rejected for the truncated family.
  Eigen::MatrixXd bad_inv{{2.0, 1.0}, {1.0, 2.0}};
  CHECK_THROWS_AS(TruncGWishartParams::prior(s, 3.0, bad_inv.inverse(), true), config_error);
  CHECK_NOTHROW(TruncGWishartParams::prior(s, 3.0, bad_inv.inverse(), false));
  // D^{-1} = [[2,-1],[-1,2]] is in the restricted cone.
  Eigen::MatrixXd dinv{{2.0, -1.0}, {-1.0, 2.0}};
  const Eigen::MatrixXd d = dinv.inverse();
  CHECK_NOTHROW(TruncGWishartParams::prior(s, 3.0, d, true));
}

TEST_CASE("initial factor is feasible and honors the pin") {
  const auto& wa = testsupport::wa_graph();
  auto s = structure_of(wa);
  const double w1 = static_cast<double>(wa.degree(0));
  auto p = TruncGWishartParams::prior(s, 3.0, tgwish::car_matrix(wa, 0.9).inverse(), true, w1);
  const auto phi = initial_factor(p);
  const auto K = phi.precision();
  CHECK(in_restricted_cone(K, wa));
  CHECK_THAT(K(0, 0), Catch::Matchers::WithinAbs(w1, 1e-12));
  CHECK(phi.completion_residual() < 1e-10);
}

TEST_CASE("zero-width perturbation is always accepted") {
  auto s = structure_of(testsupport::complete_graph(2));
  Eigen::MatrixXd dinv{{2.0, -1.0}, {-1.0, 2.0}};
  auto p = TruncGWishartParams::prior(s, 3.0, dinv.inverse(), true);
  auto phi = initial_factor(p);
  Rng rng(1);
  MhOptions opt;
  opt.zero_perturbation = true;
  for (int t = 0; t < 50; ++t) {
    const auto stats = mh_step(phi, p, opt, rng);
    CHECK(stats.accepts == stats.proposals);
    CHECK(stats.proposals == 3);
  }
}

TEST_CASE("truncated chain stays in the restricted cone") {
  auto s = structure_of(testsupport::complete_graph(2));
  auto p = TruncGWishartParams::conditional(s, 3.0, Eigen::MatrixXd::Identity(2, 2), true);
  Eigen::MatrixXd k0{{2.0, -1.0}, {-1.0, 2.0}};
  CholeskyFactor phi = CholeskyFactor::from_precision(s, k0);
  Rng rng(42);
  long negative = 0, total = 0;
  for (int t = 0; t < 4000; ++t) {
    mh_step(phi, p, {}, rng);
    const auto K = phi.precision();
    REQUIRE(in_restricted_cone(K, s->graph()));
    negative += (K(0, 1) < 0.0);
    ++total;
  }
  CHECK(negative == total);
}

TEST_CASE("sampler marginals match the rejection oracle on the 2-node graph") {
  auto s = structure_of(testsupport::complete_graph(2));
  auto p = TruncGWishartParams::conditional(s, 3.0, Eigen::MatrixXd::Identity(2, 2), true);
  Eigen::MatrixXd k0{{2.0, -1.0}, {-1.0, 2.0}};
  CholeskyFactor phi = CholeskyFactor::from_precision(s, k0);
  Rng rng(2718);
  const int sweeps = 40000;
  std::vector<double> k12;
  std::vector<double> k11;
  k12.reserve(sweeps);
  for (int t = 0; t < sweeps; ++t) {
    mh_step(phi, p, {}, rng);
    const auto K = phi.precision();
    k12.push_back(K(0, 1));
    k11.push_back(K(0, 0));
  }
  // Rejection oracle: dense draws filtered to the restricted cone.
  Rng orng(999);
  std::vector<double> o12, o11;
  while (static_cast<int>(o12.size()) < sweeps) {
    const auto K = testsupport::wishart_draw(3.0, Eigen::MatrixXd::Identity(2, 2), orng);
    if (K(0, 1) < 0.0) {
      o12.push_back(K(0, 1));
      o11.push_back(K(0, 0));
    }
  }
  CHECK(ks_two_sample(k12, o12) < 0.035);
  CHECK(ks_two_sample(k11, o11) < 0.035);
}

TEST_CASE("fixed K_11 is bit-identical over the whole run") {
  const auto g = testsupport::complete_graph(3);
  auto s = structure_of(g);
  Eigen::MatrixXd dinv = tgwish::car_matrix(g, 0.9);
  auto p = TruncGWishartParams::prior(s, 3.0, dinv.inverse(), true, 2.0);
  auto phi = initial_factor(p);
  Rng rng(7);
  const double k11 = phi.precision()(0, 0);
  CHECK_THAT(k11, Catch::Matchers::WithinULP(2.0, 2));
  for (int t = 0; t < 2000; ++t) {
    mh_step(phi, p, {}, rng);
    const double now = phi.precision()(0, 0);
    REQUIRE(std::memcmp(&now, &k11, sizeof(double)) == 0);
  }
}

TEST_CASE("mode concentration at large delta") {
  // delta = 50, D = I, truncated 2-node: diagonal entries peak near
  // (delta-2) = 48, the edge entry piles up against the boundary at zero.
  auto s = structure_of(testsupport::complete_graph(2));
  auto p = TruncGWishartParams::conditional(s, 50.0, Eigen::MatrixXd::Identity(2, 2), true);
  Eigen::MatrixXd k0{{48.0, -1.0}, {-1.0, 48.0}};
  CholeskyFactor phi = CholeskyFactor::from_precision(s, k0);
  Rng rng(5150);
  std::vector<double> d1, d2, off;
  for (int t = 0; t < 30000; ++t) {
    mh_step(phi, p, {.sigma_m = 1.0}, rng);
    const auto K = phi.precision();
    d1.push_back(K(0, 0));
    d2.push_back(K(1, 1));
    off.push_back(K(0, 1));
  }
  auto kde_peak = [](const std::vector<double>& xs) {
    // Histogram mode with ~80 bins.
    const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
    const int bins = 80;
    std::vector<int> counts(bins, 0);
    for (double x : xs) {
      int b = static_cast<int>((x - *mn) / (*mx - *mn + 1e-12) * bins);
      counts[std::clamp(b, 0, bins - 1)]++;
    }
    const int best = static_cast<int>(std::max_element(counts.begin(), counts.end()) -
                                      counts.begin());
    return *mn + (*mx - *mn) * (best + 0.5) / bins;
  };
  CHECK_THAT(kde_peak(d1), Catch::Matchers::WithinAbs(48.0, 4.8));
  CHECK_THAT(kde_peak(d2), Catch::Matchers::WithinAbs(48.0, 4.8));
  CHECK(std::fabs(kde_peak(off)) < 4.8);
}

TEST_CASE("untruncated sweep covers both signs on edges") {
  auto s = structure_of(testsupport::complete_graph(2));
  auto p = TruncGWishartParams::prior(s, 3.0, Eigen::MatrixXd::Identity(2, 2), false);
  auto phi = initial_factor(p);
  Rng rng(8);
  long pos = 0, neg = 0;
  for (int t = 0; t < 5000; ++t) {
    mh_step(phi, p, {}, rng);
    (phi.precision()(0, 1) > 0 ? pos : neg)++;
  }
  CHECK(pos > 200);
  CHECK(neg > 200);
}
