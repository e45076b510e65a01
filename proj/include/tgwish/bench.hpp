#pragma once

#include <chrono>
#include <cmath>
#include <memory>
#include <vector>

#include "tgwish/car.hpp"
#include "tgwish/graph.hpp"
#include "tgwish/gwishart.hpp"
#include "tgwish/rng.hpp"

namespace tgwish {

// G(n, M) with M = round(density * n(n-1)/2), drawn as a random prefix of
// the shuffled pair list.
inline AdjacencyGraph random_gnm_graph(int n, double density, Rng& rng) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  const int m = static_cast<int>(std::lround(density * static_cast<double>(pairs.size())));
  for (int k = 0; k < m; ++k) {
    const int pick = k + rng.uniform_int(static_cast<int>(pairs.size()) - k);
    std::swap(pairs[static_cast<std::size_t>(k)], pairs[static_cast<std::size_t>(pick)]);
  }
  pairs.resize(static_cast<std::size_t>(m));
  return AdjacencyGraph(n, pairs);
}

struct BenchCell {
  int n = 0;
  double density = 0.0;
  int graphs = 0;
  long iters = 0;
  double mean_seconds = 0.0;
  double sd_seconds = 0.0;
  std::uint64_t graph_checksum = 0;  // deterministic under the seed
};

// Mean time to `iters` truncated sweeps over `n_graphs` random graphs of the
// given size and density, each bandwidth-reduced first.
inline BenchCell bench_cell(int n, double density, int n_graphs, long iters, Rng rng) {
  BenchCell cell;
  cell.n = n;
  cell.density = density;
  cell.graphs = n_graphs;
  cell.iters = iters;
  std::vector<double> secs;
  secs.reserve(static_cast<std::size_t>(n_graphs));
  std::uint64_t checksum = 1469598103934665603ULL;
  for (int r = 0; r < n_graphs; ++r) {
    Rng graph_rng = rng.stream(static_cast<std::uint64_t>(r));
    const AdjacencyGraph raw = random_gnm_graph(n, density, graph_rng);
    const AdjacencyGraph g = permuted(raw, rcm_order(raw));
    checksum ^= g.hash();
    checksum *= 1099511628211ULL;
    auto s = std::make_shared<CholStructure>(g);
    // Strictly feasible base precision for any graph: I + D_w - W.
    Eigen::MatrixXd base = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) base(i, i) += g.degree(i);
    for (auto [i, j] : g.edges()) base(i, j) = base(j, i) = -1.0;
    auto params = TruncGWishartParams::prior(
        s, 3.0, base.llt().solve(Eigen::MatrixXd::Identity(n, n)), true);
    CholeskyFactor phi = initial_factor(params);
    const auto t0 = std::chrono::steady_clock::now();
    for (long t = 0; t < iters; ++t) mh_step(phi, params, {}, graph_rng);
    secs.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  double mean = 0.0;
  for (double v : secs) mean += v;
  mean /= static_cast<double>(n_graphs);
  double ss = 0.0;
  for (double v : secs) ss += (v - mean) * (v - mean);
  cell.mean_seconds = mean;
  cell.sd_seconds = n_graphs > 1 ? std::sqrt(ss / (n_graphs - 1.0)) : 0.0;
  cell.graph_checksum = checksum;
  return cell;
}

}  // namespace tgwish
