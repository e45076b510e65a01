#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "tgwish/metrics.hpp"
#include "tgwish/rng.hpp"

using namespace tgwish;

TEST_CASE("ramse basics") {
  SECTION("exact traces give zero") {
    Eigen::VectorXd truth(3);
    truth << 1.0, 2.0, 0.5;
    Eigen::MatrixXd trace(4, 3);
    trace << truth.transpose().replicate(4, 1);
    CHECK(ramse({truth}, {trace}) == 0.0);
  }
  SECTION("constant offset of one gives one") {
    Eigen::VectorXd truth = Eigen::VectorXd::Zero(5);
    Eigen::MatrixXd trace = Eigen::MatrixXd::Ones(7, 5);
    CHECK_THAT(ramse({truth}, {trace}), Catch::Matchers::WithinAbs(1.0, 1e-14));
  }
  SECTION("two-area two-iteration toy") {
    Eigen::VectorXd truth = Eigen::VectorXd::Zero(2);
    Eigen::MatrixXd trace(2, 2);
    trace << 1.0, 0.0, 0.0, 0.0;  // squared errors 1,0,0,0
    CHECK_THAT(ramse({truth}, {trace}), Catch::Matchers::WithinAbs(0.5, 1e-14));
  }
  SECTION("permutation invariance") {
    Rng rng(3);
    Eigen::VectorXd truth(4);
    Eigen::MatrixXd trace(10, 4);
    for (int i = 0; i < 4; ++i) truth(i) = rng.normal();
    for (int b = 0; b < 10; ++b)
      for (int i = 0; i < 4; ++i) trace(b, i) = rng.normal();
    const double base = ramse({truth}, {trace});
    // permute areas
    std::vector<int> perm{2, 0, 3, 1};
    Eigen::VectorXd truth_p(4);
    Eigen::MatrixXd trace_p(10, 4);
    for (int i = 0; i < 4; ++i) {
      truth_p(i) = truth(perm[i]);
      trace_p.col(i) = trace.col(perm[i]);
    }
    CHECK_THAT(ramse({truth_p}, {trace_p}), Catch::Matchers::WithinAbs(base, 1e-14));
    // swap replicate order
    CHECK_THAT(ramse({truth, truth_p}, {trace, trace_p}),
               Catch::Matchers::WithinAbs(ramse({truth_p, truth}, {trace_p, trace}), 1e-14));
  }
}

TEST_CASE("cross-validation metrics") {
  SECTION("perfect point predictions") {
    const auto m = cv_metrics({1.0, 2.0}, {1.0, 2.0}, {0.0, 0.0});
    CHECK(m.bias2 == 0.0);
    CHECK(m.var == 0.0);
    CHECK(m.mse() == 0.0);
  }
  SECTION("constant bias 2, variance 3") {
    const auto m = cv_metrics({1.0, 5.0, 9.0}, {3.0, 7.0, 11.0}, {3.0, 3.0, 3.0});
    CHECK_THAT(m.bias2, Catch::Matchers::WithinAbs(4.0, 1e-14));
    CHECK_THAT(m.var, Catch::Matchers::WithinAbs(3.0, 1e-14));
    CHECK_THAT(m.mse(), Catch::Matchers::WithinAbs(7.0, 1e-14));
  }
  SECTION("decomposition holds exactly for random inputs") {
    Rng rng(17);
    std::vector<double> obs, mean, var;
    for (int k = 0; k < 50; ++k) {
      obs.push_back(rng.normal() * 5.0);
      mean.push_back(rng.normal() * 5.0);
      var.push_back(std::fabs(rng.normal()));
    }
    const auto m = cv_metrics(obs, mean, var);
    CHECK_THAT(m.mse(), Catch::Matchers::WithinAbs(m.bias2 + m.var, 1e-12));
  }
  SECTION("empty holdout is an error") {
    CHECK_THROWS_AS(cv_metrics({}, {}, {}), data_error);
  }
}

TEST_CASE("effective parameter counts") {
  SECTION("degenerate posterior gives zero") {
    Eigen::MatrixXd loglik(5, 3);
    loglik << Eigen::RowVector3d(-1.0, -2.0, -0.5).replicate(5, 1);
    const Eigen::VectorXd at_mean = loglik.row(0);
    const auto ep = effective_params(loglik, at_mean);
    CHECK_THAT(ep.p_dic, Catch::Matchers::WithinAbs(0.0, 1e-12));
    CHECK_THAT(ep.p_waic, Catch::Matchers::WithinAbs(0.0, 1e-12));
  }
  SECTION("two-draw toy with hand-computed values") {
    Eigen::MatrixXd loglik(2, 2);
    loglik << -1.0, -2.0,  //
        -3.0, -4.0;
    Eigen::VectorXd at_mean(2);
    at_mean << -1.5, -2.5;
    const auto ep = effective_params(loglik, at_mean);
    // mean total = (-3 + -7)/2 = -5; p_dic = 2((-4) - (-5)) = 2
    CHECK_THAT(ep.p_dic, Catch::Matchers::WithinAbs(2.0, 1e-12));
    // per-cell sample variances (n-1): 2 and 2 => p_waic = 4
    CHECK_THAT(ep.p_waic, Catch::Matchers::WithinAbs(4.0, 1e-12));
  }
}

TEST_CASE("coverage report") {
  SECTION("very wide predictive intervals cover everything") {
    Eigen::MatrixXd yrep(4, 2);
    yrep << -1000, -1000, 1000, 1000, -900, -900, 900, 900;
    Eigen::VectorXd y(2);
    y << 3.0, 21.0;
    const auto rep = coverage_report(yrep, y);
    CHECK(rep.coverage == 1.0);
    REQUIRE(rep.len_low);
    REQUIRE(rep.len_high);
  }
  SECTION("point predictions away from the data cover nothing") {
    Eigen::MatrixXd yrep = Eigen::MatrixXd::Constant(5, 3, 100.0);
    Eigen::VectorXd y(3);
    y << 1.0, 2.0, 3.0;
    const auto rep = coverage_report(yrep, y);
    CHECK(rep.coverage == 0.0);
    CHECK(*rep.len_all == 0.0);
  }
  SECTION("an absent stratum is reported absent, not zero") {
    Eigen::MatrixXd yrep(3, 2);
    yrep << 9.0, 10.0, 10.0, 11.0, 11.0, 12.0;
    Eigen::VectorXd y(2);
    y << 10.0, 11.0;  // no y <= 5, no y >= 20
    const auto rep = coverage_report(yrep, y);
    CHECK_FALSE(rep.len_low.has_value());
    CHECK_FALSE(rep.len_high.has_value());
    CHECK(rep.len_all.has_value());
  }
}
