#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "tgwish/csv.hpp"
#include "tgwish/dataset.hpp"
#include "tgwish/errors.hpp"
#include "tgwish/graph.hpp"
#include "tgwish/mathutil.hpp"
#include "tgwish/rng.hpp"

namespace tgwish {

// Matern correlation at smoothness 5/2:
// (1 + sqrt(5) d/l + 5 d^2 / (3 l^2)) exp(-sqrt(5) d/l).
inline double matern25(double distance, double range) {
  if (!(range > 0.0)) throw numeric_error("matern25: range must be positive");
  const double s = std::sqrt(5.0) * distance / range;
  return (1.0 + s + s * s / 3.0) * std::exp(-s);
}

inline Eigen::MatrixXd matern_correlation(const Eigen::MatrixXd& dist, double range) {
  const int n = static_cast<int>(dist.rows());
  Eigen::MatrixXd c(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) c(i, j) = matern25(dist(i, j), range);
  return c;
}

// Range such that the median off-diagonal correlation hits the target;
// monotone in the range, solved by bisection.
inline double calibrate_matern_range(const Eigen::MatrixXd& dist, double target = 0.5) {
  const int n = static_cast<int>(dist.rows());
  if (n < 2) throw data_error("calibrate_matern_range: need at least two sites");
  std::vector<double> ds;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) ds.push_back(dist(i, j));
  auto median_corr = [&ds](double range) {
    std::vector<double> cs;
    cs.reserve(ds.size());
    for (double d : ds) cs.push_back(matern25(d, range));
    return quantile(std::move(cs), 0.5);
  };
  double lo = 1e-6, hi = 1.0;
  while (median_corr(hi) < target && hi < 1e9) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (median_corr(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// One mean-zero unit-variance draw with Matern(5/2) correlation.
inline Eigen::VectorXd matern_field(const Eigen::MatrixXd& dist, double range, Rng& rng) {
  const int n = static_cast<int>(dist.rows());
  Eigen::MatrixXd c = matern_correlation(dist, range);
  c.diagonal().array() += 1e-10;  // jitter for the factorization
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success)
    throw numeric_error("matern_field: correlation matrix not positive definite");
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = rng.normal();
  return Eigen::MatrixXd(llt.matrixL()) * z;
}

// Great-circle distances (km) between (lat, lon) degree coordinates.
inline Eigen::MatrixXd haversine_distances(const Eigen::VectorXd& lat,
                                           const Eigen::VectorXd& lon) {
  const int n = static_cast<int>(lat.size());
  const double rad = M_PI / 180.0;
  const double earth_radius_km = 6371.0;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dlat = 0.5 * (lat(j) - lat(i)) * rad;
      const double dlon = 0.5 * (lon(j) - lon(i)) * rad;
      const double h = std::sin(dlat) * std::sin(dlat) +
                       std::cos(lat(i) * rad) * std::cos(lat(j) * rad) * std::sin(dlon) *
                           std::sin(dlon);
      d(i, j) = d(j, i) = 2.0 * earth_radius_km * std::asin(std::min(1.0, std::sqrt(h)));
    }
  }
  return d;
}

// Pairwise centroid distances from an area_id,lat,lon file.
inline Eigen::MatrixXd load_centroid_distances(const AdjacencyGraph& g, const std::string& path) {
  const Eigen::VectorXd lat = load_area_column(g, path, "lat");
  const Eigen::VectorXd lon = load_area_column(g, path, "lon");
  return haversine_distances(lat, lon);
}

}  // namespace tgwish
