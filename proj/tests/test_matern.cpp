#include <catch2/catch_amalgamated.hpp>

#include "tgwish/matern.hpp"
#include "tgwish/simulate.hpp"
#include "support/fixtures.hpp"

using namespace tgwish;

TEST_CASE("matern correlation shape") {
  CHECK(matern25(0.0, 2.0) == 1.0);
  // monotone decreasing over sorted distances
  double prev = 1.0;
  for (double d = 0.1; d < 20.0; d += 0.1) {
    const double c = matern25(d, 2.0);
    CHECK(c < prev);
    CHECK(c > 0.0);
    prev = c;
  }
}

TEST_CASE("range calibration hits the target median correlation") {
  const auto& wa = testsupport::wa_graph();
  const auto dist = load_centroid_distances(wa, testsupport::data_path("wa_centroids.csv"));
  const double range = calibrate_matern_range(dist, 0.5);
  std::vector<double> cs;
  for (int i = 0; i < wa.n(); ++i)
    for (int j = i + 1; j < wa.n(); ++j) cs.push_back(matern25(dist(i, j), range));
  const double med = quantile(cs, 0.5);
  CHECK(med > 0.49);
  CHECK(med < 0.51);
}

TEST_CASE("field draws have roughly unit variance and the right correlation decay") {
  const auto& wa = testsupport::wa_graph();
  const auto dist = load_centroid_distances(wa, testsupport::data_path("wa_centroids.csv"));
  const double range = calibrate_matern_range(dist, 0.5);
  Rng rng(8);
  const int reps = 4000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(wa.n(), wa.n());
  for (int r = 0; r < reps; ++r) {
    const auto f = matern_field(dist, range, rng);
    acc += f * f.transpose();
  }
  acc /= reps;
  const auto target = matern_correlation(dist, range);
  // Monte Carlo agreement of the sample covariance with the target.
  CHECK((acc - target).cwiseAbs().maxCoeff() < 0.12);
}

TEST_CASE("simulated counts") {
  const auto& wa = testsupport::wa_graph();
  auto g = std::make_shared<AdjacencyGraph>(wa);
  SimScenario sc;
  sc.graph = g;
  sc.expected = load_area_column(wa, testsupport::data_path("wa_expected_lung.csv"), "expected");
  sc.labels = load_area_column(wa, testsupport::data_path("wa_labels.csv"), "label");
  sc.distances = load_centroid_distances(wa, testsupport::data_path("wa_centroids.csv"));
  sc.replicates = 3;

  SECTION("fields off and M = 0 give unit risks and mean E") {
    SimScenario flat = sc;
    flat.m_shift = 0.0;
    flat.field_scale = 0.0;
    flat.replicates = 400;
    Rng rng(5);
    const auto reps = simulate_counts(flat, rng);
    for (const auto& r : reps)
      for (int i = 0; i < wa.n(); ++i) CHECK(r.theta(i) == 1.0);
    // sample mean of y/E near 1
    double acc = 0.0;
    long cnt = 0;
    for (const auto& r : reps)
      for (int i = 0; i < wa.n(); ++i) {
        acc += r.y(i) / flat.expected(i);
        ++cnt;
      }
    CHECK_THAT(acc / cnt, Catch::Matchers::WithinAbs(1.0, 0.01));
  }
  SECTION("labels all zero remove the discontinuity component") {
    SimScenario s2 = sc;
    s2.labels = Eigen::VectorXd::Zero(wa.n());
    s2.m_shift = 1.5;
    s2.replicates = 1;
    Rng rng(9);
    const auto reps = simulate_counts(s2, rng);
    for (int i = 0; i < wa.n(); ++i)
      CHECK_THAT(std::log(reps[0].theta(i)),
                 Catch::Matchers::WithinAbs(0.1 * reps[0].x(i) + reps[0].u(i), 1e-12));
  }
  SECTION("fixed seed reproduces bit-identical replicates") {
    Rng a(123), b(123);
    const auto ra = simulate_counts(sc, a);
    const auto rb = simulate_counts(sc, b);
    REQUIRE(ra.size() == rb.size());
    for (std::size_t s = 0; s < ra.size(); ++s) {
      CHECK(ra[s].theta == rb[s].theta);
      CHECK(ra[s].y == rb[s].y);
    }
  }
  SECTION("marginal means match the generative formula") {
    SimScenario s3 = sc;
    s3.replicates = 2000;
    s3.m_shift = 0.5;
    Rng rng(31);
    const auto reps = simulate_counts(s3, rng);
    // E[y_i / E_i | theta] = theta_i; compare the replicate means.
    double mean_ratio = 0.0, mean_theta = 0.0;
    for (const auto& r : reps) {
      mean_ratio += (r.y.array() / s3.expected.array()).mean();
      mean_theta += r.theta.mean();
    }
    CHECK_THAT(mean_ratio / s3.replicates,
               Catch::Matchers::WithinAbs(mean_theta / s3.replicates, 0.05));
  }
  SECTION("scenario validation") {
    SimScenario bad = sc;
    bad.labels(0) = 2.0;
    Rng rng(1);
    CHECK_THROWS_AS(simulate_counts(bad, rng), data_error);
    bad = sc;
    bad.smoothness = 1.5;
    CHECK_THROWS_AS(simulate_counts(bad, rng), config_error);
  }
}
