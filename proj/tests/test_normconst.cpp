#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <memory>

#include "tgwish/norm_const.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace tgwish;

namespace {
std::shared_ptr<const CholStructure> structure_of(const AdjacencyGraph& g) {
  return std::make_shared<CholStructure>(g);
}
}  // namespace

TEST_CASE("identical parameters give a zero log-ratio") {
  auto g = testsupport::complete_graph(2);
  auto s = structure_of(g);
  auto p = TruncGWishartParams::prior(s, 3.0, d_rho_inverse(g, 0.5), false);
  Rng rng(4);
  const auto est = estimate_logratio(p, p, 2, 400, rng);
  CHECK(est.value == 0.0);
}

TEST_CASE("two-node closed-form ratio") {
  auto g = testsupport::complete_graph(2);
  auto s = structure_of(g);
  const double delta = 3.0;
  const Eigen::MatrixXd d1 = d_rho_inverse(g, 0.8);
  const Eigen::MatrixXd d2 = d_rho_inverse(g, 0.5);
  auto p1 = TruncGWishartParams::prior(s, delta, d1, false);
  auto p2 = TruncGWishartParams::prior(s, delta, d2, false);
  Rng rng(123);
  const auto est = estimate_logratio(p1, p2, 4, 20000, rng);
  const double truth = testsupport::log_wishart_integral(delta, d1) -
                       testsupport::log_wishart_integral(delta, d2);
  CHECK_THAT(est.value, Catch::Matchers::WithinAbs(truth, 0.03));
}

TEST_CASE("three-node path closed-form ratio") {
  auto g = testsupport::path_graph(3);
  auto s = structure_of(g);
  const double delta = 3.0;
  const Eigen::MatrixXd d1 = d_rho_inverse(g, 0.9);
  const Eigen::MatrixXd d2 = d_rho_inverse(g, 0.8);
  auto p1 = TruncGWishartParams::prior(s, delta, d1, false);
  auto p2 = TruncGWishartParams::prior(s, delta, d2, false);
  Rng rng(321);
  const auto est = estimate_logratio(p1, p2, 4, 20000, rng);
  const std::vector<std::vector<int>> cliques{{0, 1}, {1, 2}};
  const std::vector<std::vector<int>> seps{{1}};
  const double truth = testsupport::log_I_decomposable(cliques, seps, delta, d1) -
                       testsupport::log_I_decomposable(cliques, seps, delta, d2);
  CHECK_THAT(est.value, Catch::Matchers::WithinAbs(truth, 0.03));
}

TEST_CASE("antisymmetry within Monte Carlo error") {
  auto g = testsupport::complete_graph(2);
  auto s = structure_of(g);
  auto p1 = TruncGWishartParams::prior(s, 3.0, d_rho_inverse(g, 0.7), false);
  auto p2 = TruncGWishartParams::prior(s, 3.0, d_rho_inverse(g, 0.6), false);
  Rng rng(55);
  const auto fwd = estimate_logratio(p1, p2, 6, 8000, rng);
  const auto rev = estimate_logratio(p2, p1, 6, 8000, rng.stream(91));
  const double se = std::sqrt(fwd.se * fwd.se + rev.se * rev.se);
  CHECK(std::fabs(fwd.value + rev.value) < std::max(2.0 * se, 0.02));
}

TEST_CASE("mismatched parameters are rejected") {
  auto g = testsupport::complete_graph(2);
  auto s = structure_of(g);
  auto p1 = TruncGWishartParams::prior(s, 3.0, d_rho_inverse(g, 0.7), false);
  auto p2 = TruncGWishartParams::prior(s, 4.0, d_rho_inverse(g, 0.6), false);
  Rng rng(9);
  CHECK_THROWS_AS(estimate_logratio(p1, p2, 2, 100, rng), config_error);
  auto s3 = structure_of(testsupport::path_graph(3));
  auto p3 = TruncGWishartParams::prior(s3, 3.0, d_rho_inverse(testsupport::path_graph(3), 0.6), false);
  CHECK_THROWS_AS(estimate_logratio(p1, p3, 2, 100, rng), config_error);
}

TEST_CASE("table construction") {
  auto g = testsupport::random_graph(5, 0.4, *[] {
    static Rng r(66);
    return &r;
  }());
  auto s = structure_of(g);
  SECTION("length-1 grid gives an empty table") {
    const auto t = build_table(s, 3.0, true, std::nullopt, {0.5}, 1, 100, 1);
    CHECK(t.log_ratios.empty());
  }
  SECTION("two-point grid: one finite entry, reproducible under the seed") {
    const auto t1 = build_table(s, 3.0, true, std::nullopt, {0.0, 0.05}, 2, 500, 99);
    const auto t2 = build_table(s, 3.0, true, std::nullopt, {0.0, 0.05}, 2, 500, 99);
    REQUIRE(t1.log_ratios.size() == 1);
    CHECK(std::isfinite(t1.log_ratios[0]));
    CHECK(t1.log_ratios[0] == t2.log_ratios[0]);
  }
  SECTION("full 31-value grid gives 30 entries") {
    const auto t = build_table(s, 3.0, true, std::nullopt, rho_grid(), 1, 60, 5);
    CHECK(t.log_ratios.size() == 30);
    CHECK(t.grid.size() == 31);
  }
}

TEST_CASE("table json round trip and compatibility checks") {
  auto g = testsupport::path_graph(3);
  auto s = structure_of(g);
  auto t = build_table(s, 3.0, true, 2.0, {0.5, 0.55, 0.6}, 1, 200, 11);
  const std::string path = "tmp_table_test.json";
  t.save(path);
  const auto back = NormConstTable::load(path);
  CHECK(back.log_ratios == t.log_ratios);
  CHECK(back.grid == t.grid);
  CHECK(back.fixed_first == t.fixed_first);
  CHECK(back.graph_hash == g.hash());
  CHECK_NOTHROW(back.check_compatible(g, 3.0, true, 2.0));
  CHECK_THROWS_AS(back.check_compatible(g, 3.0, false, 2.0), data_error);
  CHECK_THROWS_AS(back.check_compatible(g, 4.0, true, 2.0), data_error);
  CHECK_THROWS_AS(back.check_compatible(testsupport::complete_graph(3), 3.0, true, 2.0),
                  data_error);
  CHECK(back.log_ratio_between(0, 1) == t.log_ratios[0]);
  CHECK(back.log_ratio_between(1, 0) == -t.log_ratios[0]);
  CHECK_THROWS_AS(back.log_ratio_between(0, 2), data_error);
  std::remove(path.c_str());
}

TEST_CASE("truncated ratio matches a truncated rejection oracle on 2 nodes") {
  // Direct Monte Carlo of both truncated integrals via importance from the
  // untruncated Wishart: I2 = I1 * P(K_12 < 0 under the Wishart).
  auto g = testsupport::complete_graph(2);
  auto s = structure_of(g);
  const double delta = 3.0;
  const Eigen::MatrixXd d1 = d_rho_inverse(g, 0.8);
  const Eigen::MatrixXd d2 = d_rho_inverse(g, 0.3);
  auto p1 = TruncGWishartParams::prior(s, delta, d1, true);
  auto p2 = TruncGWishartParams::prior(s, delta, d2, true);
  Rng rng(2020);
  const auto est = estimate_logratio(p1, p2, 4, 30000, rng);

  auto log_trunc_integral = [&](const Eigen::MatrixXd& d) {
    Rng orng(31);
    long hits = 0;
    const long total = 200000;
    for (long i = 0; i < total; ++i)
      if (testsupport::wishart_draw(delta, d, orng)(0, 1) < 0.0) ++hits;
    return testsupport::log_wishart_integral(delta, d) +
           std::log(static_cast<double>(hits) / total);
  };
  const double truth = log_trunc_integral(d1) - log_trunc_integral(d2);
  CHECK_THAT(est.value, Catch::Matchers::WithinAbs(truth, 0.05));
}
