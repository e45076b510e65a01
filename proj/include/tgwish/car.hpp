#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tgwish/errors.hpp"
#include "tgwish/graph.hpp"
#include "tgwish/mathutil.hpp"
#include "tgwish/rng.hpp"

namespace tgwish {

// Discrete prior support for the spatial autocorrelation parameter:
// 0 to 0.80 by 0.05, 0.82 to 0.90 by 0.02, 0.91 to 0.99 by 0.01.
inline const std::vector<double>& rho_grid() {
  static const std::vector<double> grid = [] {
    std::vector<double> g;
    for (int k = 0; k <= 16; ++k) g.push_back(std::round(5.0 * k) / 100.0);
    for (int k = 41; k <= 45; ++k) g.push_back(std::round(2.0 * k) / 100.0);
    for (int k = 91; k <= 99; ++k) g.push_back(k / 100.0);
    return g;
  }();
  return grid;
}

// D_w - rho * W.
inline Eigen::MatrixXd car_matrix(const AdjacencyGraph& g, double rho) {
  Eigen::MatrixXd m = -rho * g.adjacency_matrix();
  for (int i = 0; i < g.n(); ++i) m(i, i) = static_cast<double>(g.degree(i));
  return m;
}

inline Eigen::MatrixXd icar_matrix(const AdjacencyGraph& g) { return car_matrix(g, 1.0); }

// D(rho) = (D_w - rho W)^{-1}, solved through Cholesky.
inline Eigen::MatrixXd d_rho_inverse(const AdjacencyGraph& g, double rho) {
  const Eigen::MatrixXd m = car_matrix(g, rho);
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw numeric_error("d_rho_inverse: D_w - rho*W is singular (rho=" + std::to_string(rho) + ")");
  return llt.solve(Eigen::MatrixXd::Identity(g.n(), g.n()));
}

enum class CarFlavor { icar, proper, independent };

struct CarPrecision {
  double rho = 0.0;
  CarFlavor flavor = CarFlavor::proper;
  Eigen::MatrixXd matrix;

  static CarPrecision build(const AdjacencyGraph& g, CarFlavor flavor, double rho = 0.0) {
    CarPrecision out;
    out.flavor = flavor;
    switch (flavor) {
      case CarFlavor::icar:
        out.rho = 1.0;
        out.matrix = icar_matrix(g);
        break;
      case CarFlavor::proper:
        out.rho = rho;
        out.matrix = car_matrix(g, rho);
        break;
      case CarFlavor::independent:
        out.rho = 0.0;
        out.matrix = Eigen::MatrixXd::Identity(g.n(), g.n());
        break;
    }
    return out;
  }
};

// Monte Carlo 95% interval of exp(mean(u)) under
//   u | alpha, tau2 ~ N(alpha 1, (tau2 K)^{-1}),  K = D_w - rho_ref W,
//   alpha ~ N(0, sigma2_alpha),  tau2 ~ Gam(a, b)  (rate parameterization).
inline std::pair<double, double> calibrate_hyperpriors(const AdjacencyGraph& g, double rho_ref,
                                                       double sigma2_alpha, double a, double b,
                                                       long draws, Rng& rng) {
  const Eigen::MatrixXd K = car_matrix(g, rho_ref);
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success)
    throw numeric_error("calibrate_hyperpriors: reference precision not positive definite");
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(g.n());
  const double quad = ones.dot(llt.solve(ones));  // 1' K^{-1} 1
  const double n = static_cast<double>(g.n());
  std::vector<double> ubar(static_cast<std::size_t>(draws));
  for (long s = 0; s < draws; ++s) {
    const double alpha = std::sqrt(sigma2_alpha) * rng.normal();
    const double tau2 = rng.gamma(a, b);
    const double sd = std::sqrt(quad / (n * n * tau2));
    ubar[static_cast<std::size_t>(s)] = alpha + sd * rng.normal();
  }
  std::sort(ubar.begin(), ubar.end());
  return {std::exp(quantile_sorted(ubar, 0.025)), std::exp(quantile_sorted(ubar, 0.975))};
}

}  // namespace tgwish
