#pragma once

#include <cmath>
#include <string>

#include "tgwish/graph.hpp"
#include "tgwish/rng.hpp"

namespace testsupport {

inline std::string data_path(const std::string& name) {
  return std::string(TGWISH_DATA_DIR) + "/" + name;
}

inline const tgwish::AdjacencyGraph& wa_graph() {
  static const tgwish::AdjacencyGraph g =
      tgwish::AdjacencyGraph::from_edge_list_file(data_path("wa_counties.adj"));
  return g;
}

inline tgwish::AdjacencyGraph path_graph(int n) {
  std::vector<std::pair<int, int>> es;
  for (int i = 0; i + 1 < n; ++i) es.emplace_back(i, i + 1);
  return tgwish::AdjacencyGraph(n, es);
}

inline tgwish::AdjacencyGraph complete_graph(int n) {
  std::vector<std::pair<int, int>> es;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) es.emplace_back(i, j);
  return tgwish::AdjacencyGraph(n, es);
}

inline tgwish::AdjacencyGraph cycle_graph(int n) {
  std::vector<std::pair<int, int>> es;
  for (int i = 0; i + 1 < n; ++i) es.emplace_back(i, i + 1);
  es.emplace_back(0, n - 1);
  return tgwish::AdjacencyGraph(n, es);
}

inline tgwish::AdjacencyGraph random_graph(int n, double density, tgwish::Rng& rng) {
  std::vector<std::pair<int, int>> all;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) all.emplace_back(i, j);
  // Fisher-Yates prefix of the desired size.
  const int m = static_cast<int>(std::lround(density * all.size()));
  for (int k = 0; k < m; ++k) {
    const int pick = k + rng.uniform_int(static_cast<int>(all.size()) - k);
    std::swap(all[k], all[pick]);
  }
  all.resize(m);
  return tgwish::AdjacencyGraph(n, all);
}

}  // namespace testsupport
