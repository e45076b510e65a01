#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "tgwish/errors.hpp"

namespace tgwish {

// Undirected adjacency graph over areal units. Vertices are 0..n-1
// internally; construction from files sorts labels so the internal indexing
// is reproducible regardless of file ordering.
class AdjacencyGraph {
 public:
  AdjacencyGraph(int n, std::vector<std::pair<int, int>> edges,
                 std::vector<std::string> labels = {})
      : n_(n), labels_(std::move(labels)) {
    if (n < 0) throw data_error("graph: negative vertex count");
    if (!labels_.empty() && static_cast<int>(labels_.size()) != n)
      throw data_error("graph: label count does not match vertex count");
    std::set<std::pair<int, int>> uniq;
    for (auto [i, j] : edges) {
      if (i == j) throw data_error("graph: self-loop on vertex " + std::to_string(i));
      if (i < 0 || j < 0 || i >= n || j >= n)
        throw data_error("graph: edge endpoint out of range");
      uniq.insert({std::min(i, j), std::max(i, j)});
    }
    edges_.assign(uniq.begin(), uniq.end());
    adj_.assign(n_, {});
    for (auto [i, j] : edges_) {
      adj_[i].push_back(j);
      adj_[j].push_back(i);
    }
    for (auto& nb : adj_) std::sort(nb.begin(), nb.end());
    edge_weights_.assign(edges_.size(), 1.0);  // binary W; non-binary is a stored hook only
  }

  int n() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int i) const { return adj_[i]; }
  int degree(int i) const { return static_cast<int>(adj_[i].size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::string label(int i) const {
    return labels_.empty() ? std::to_string(i) : labels_[i];
  }
  const std::vector<double>& edge_weights() const { return edge_weights_; }

  bool has_edge(int i, int j) const {
    if (i == j) return false;
    const auto& nb = adj_[i];
    return std::binary_search(nb.begin(), nb.end(), j);
  }

  std::optional<int> index_of(const std::string& name) const {
    for (int i = 0; i < n_; ++i)
      if (label(i) == name) return i;
    return std::nullopt;
  }

  // omega_i+ per vertex (binary weights, so the degree).
  std::vector<int> neighbor_counts() const {
    std::vector<int> out(n_);
    for (int i = 0; i < n_; ++i) out[i] = degree(i);
    return out;
  }

  // nu_i(G) = #{ j : (i,j) in E, j > i }.
  std::vector<int> nu_counts() const {
    std::vector<int> out(n_, 0);
    for (auto [i, j] : edges_) ++out[i];
    return out;
  }

  double edge_density() const {
    if (n_ < 2) throw data_error("edge_density: need at least 2 vertices");
    return static_cast<double>(edge_count()) / (0.5 * n_ * (n_ - 1.0));
  }

  Eigen::MatrixXd adjacency_matrix() const {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n_, n_);
    for (auto [i, j] : edges_) w(i, j) = w(j, i) = 1.0;
    return w;
  }

  std::vector<int> component_ids() const {
    std::vector<int> comp(n_, -1);
    int c = 0;
    for (int s = 0; s < n_; ++s) {
      if (comp[s] >= 0) continue;
      std::vector<int> stack{s};
      comp[s] = c;
      while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w : adj_[v])
          if (comp[w] < 0) {
            comp[w] = c;
            stack.push_back(w);
          }
      }
      ++c;
    }
    return comp;
  }

  bool connected() const {
    if (n_ == 0) return true;
    const auto comp = component_ids();
    return *std::max_element(comp.begin(), comp.end()) == 0;
  }

  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
      h ^= v;
      h *= 1099511628211ULL;
    };
    mix(static_cast<std::uint64_t>(n_));
    for (auto [i, j] : edges_) {
      mix(static_cast<std::uint64_t>(i));
      mix(static_cast<std::uint64_t>(j));
    }
    return h;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["nodes"] = nlohmann::json::array();
    for (int i = 0; i < n_; ++i) j["nodes"].push_back(label(i));
    j["edges"] = nlohmann::json::array();
    for (auto [a, b] : edges_) j["edges"].push_back({label(a), label(b)});
    return j;
  }

  static AdjacencyGraph from_edge_list_file(const std::string& path);
  static AdjacencyGraph from_json(const nlohmann::json& j);
  static AdjacencyGraph from_json_file(const std::string& path);
  static AdjacencyGraph from_file(const std::string& path);

  // Induced subgraph on the given vertices (kept in sorted-label order).
  AdjacencyGraph induced(const std::vector<int>& keep) const {
    std::vector<int> remap(n_, -1);
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < keep.size(); ++k) {
      remap[keep[k]] = static_cast<int>(k);
      labels.push_back(label(keep[k]));
    }
    std::vector<std::pair<int, int>> es;
    for (auto [i, j] : edges_)
      if (remap[i] >= 0 && remap[j] >= 0) es.emplace_back(remap[i], remap[j]);
    return AdjacencyGraph(static_cast<int>(keep.size()), std::move(es), std::move(labels));
  }

 private:
  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;  // (i, j) with i < j, lexicographic
  std::vector<std::vector<int>> adj_;
  std::vector<std::string> labels_;
  std::vector<double> edge_weights_;
};

// Permutation of 0..n-1: perm[new_position] = old_index.
struct VertexOrdering {
  std::vector<int> perm;
  std::vector<int> inverse;  // inverse[old_index] = new_position

  static VertexOrdering identity(int n) {
    VertexOrdering o;
    o.perm.resize(n);
    std::iota(o.perm.begin(), o.perm.end(), 0);
    o.inverse = o.perm;
    return o;
  }

  static VertexOrdering from_perm(std::vector<int> p) {
    VertexOrdering o;
    o.inverse.assign(p.size(), -1);
    for (std::size_t k = 0; k < p.size(); ++k) o.inverse[p[k]] = static_cast<int>(k);
    o.perm = std::move(p);
    for (int v : o.inverse)
      if (v < 0) throw data_error("ordering: not a permutation");
    return o;
  }
};

inline AdjacencyGraph permuted(const AdjacencyGraph& g, const VertexOrdering& o) {
  std::vector<std::pair<int, int>> es;
  es.reserve(g.edge_count());
  for (auto [i, j] : g.edges()) es.emplace_back(o.inverse[i], o.inverse[j]);
  std::vector<std::string> labels(g.n());
  for (int k = 0; k < g.n(); ++k) labels[k] = g.label(o.perm[k]);
  return AdjacencyGraph(g.n(), std::move(es), std::move(labels));
}

inline int bandwidth(const AdjacencyGraph& g, const VertexOrdering& o) {
  int b = 0;
  for (auto [i, j] : g.edges()) b = std::max(b, std::abs(o.inverse[i] - o.inverse[j]));
  return b;
}

inline int bandwidth(const AdjacencyGraph& g) {
  int b = 0;
  for (auto [i, j] : g.edges()) b = std::max(b, j - i);
  return b;
}

// Reverse Cuthill-McKee. Deterministic: each component starts from its
// minimum-degree vertex (smallest index on ties) and neighbors are visited
// by ascending (degree, index). Falls back to the identity ordering if the
// input ordering already has smaller bandwidth.
inline VertexOrdering rcm_order(const AdjacencyGraph& g) {
  const int n = g.n();
  std::vector<int> order;
  order.reserve(n);
  std::vector<char> visited(n, 0);

  std::vector<int> by_degree(n);
  std::iota(by_degree.begin(), by_degree.end(), 0);
  std::stable_sort(by_degree.begin(), by_degree.end(),
                   [&g](int a, int b) { return g.degree(a) < g.degree(b); });

  for (int seed : by_degree) {
    if (visited[seed]) continue;
    std::vector<int> queue{seed};
    visited[seed] = 1;
    std::size_t head = 0;
    while (head < queue.size()) {
      const int v = queue[head++];
      order.push_back(v);
      std::vector<int> nb;
      for (int w : g.neighbors(v))
        if (!visited[w]) nb.push_back(w);
      std::sort(nb.begin(), nb.end(), [&g](int a, int b) {
        const int da = g.degree(a), db = g.degree(b);
        return da != db ? da < db : a < b;
      });
      for (int w : nb) {
        visited[w] = 1;
        queue.push_back(w);
      }
    }
  }
  std::reverse(order.begin(), order.end());
  auto rcm = VertexOrdering::from_perm(std::move(order));
  if (bandwidth(g, rcm) > bandwidth(g)) return VertexOrdering::identity(n);
  return rcm;
}

namespace detail {

inline bool all_numeric(const std::vector<std::string>& labels) {
  for (const auto& s : labels) {
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return false;
  }
  return true;
}

inline void sort_labels(std::vector<std::string>& labels) {
  if (all_numeric(labels)) {
    std::sort(labels.begin(), labels.end(), [](const std::string& a, const std::string& b) {
      return std::stoll(a) < std::stoll(b);
    });
  } else {
    std::sort(labels.begin(), labels.end());
  }
}

inline AdjacencyGraph build_from_named(std::vector<std::string> names,
                                       const std::vector<std::pair<std::string, std::string>>& edges,
                                       bool closed_vertex_set) {
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  sort_labels(names);
  std::map<std::string, int> lookup;
  for (std::size_t k = 0; k < names.size(); ++k) lookup[names[k]] = static_cast<int>(k);
  auto index = [&lookup, closed_vertex_set](const std::string& s) {
    const auto it = lookup.find(s);
    if (it == lookup.end()) {
      if (closed_vertex_set) throw data_error("graph: edge references unknown node '" + s + "'");
      throw data_error("graph: internal label lookup failure for '" + s + "'");
    }
    return it->second;
  };
  std::vector<std::pair<int, int>> es;
  es.reserve(edges.size());
  for (const auto& [a, b] : edges) es.emplace_back(index(a), index(b));
  const int n = static_cast<int>(names.size());
  return AdjacencyGraph(n, std::move(es), std::move(names));
}

}  // namespace detail

// Plain-text format: one edge per line as two whitespace-separated labels; a
// line with a single label declares an isolated vertex; '#' starts a comment.
inline AdjacencyGraph AdjacencyGraph::from_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("graph: cannot open '" + path + "'");
  std::vector<std::string> names;
  std::vector<std::pair<std::string, std::string>> edges;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string a, b, extra;
    if (!(ls >> a)) continue;
    if (ls >> b) {
      if (ls >> extra) throw data_error("graph: malformed line in '" + path + "': " + line);
      if (a == b) throw data_error("graph: self-loop '" + a + "' in '" + path + "'");
      names.push_back(a);
      names.push_back(b);
      edges.emplace_back(a, b);
    } else {
      names.push_back(a);
    }
  }
  return detail::build_from_named(std::move(names), edges, false);
}

inline AdjacencyGraph AdjacencyGraph::from_json(const nlohmann::json& j) {
  if (!j.contains("nodes") || !j.contains("edges"))
    throw data_error("graph: JSON needs 'nodes' and 'edges' arrays");
  auto to_name = [](const nlohmann::json& v) {
    return v.is_string() ? v.get<std::string>() : std::to_string(v.get<long long>());
  };
  std::vector<std::string> names;
  for (const auto& v : j["nodes"]) names.push_back(to_name(v));
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& e : j["edges"]) {
    if (!e.is_array() || e.size() != 2) throw data_error("graph: each edge must be a 2-array");
    edges.emplace_back(to_name(e[0]), to_name(e[1]));
  }
  return detail::build_from_named(std::move(names), edges, true);
}

inline AdjacencyGraph AdjacencyGraph::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("graph: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error("graph: bad JSON in '" + path + "': " + e.what());
  }
  return from_json(j);
}

inline AdjacencyGraph AdjacencyGraph::from_file(const std::string& path) {
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") return from_json_file(path);
  return from_edge_list_file(path);
}

}  // namespace tgwish
