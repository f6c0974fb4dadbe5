#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tokenwalk/error.hpp"
#include "tokenwalk/random.hpp"

namespace tokenwalk {

/// Dense node index in [0, N). Same width as Eigen::Index.
using Node = std::ptrdiff_t;

/// Undirected simple graph with sorted adjacency lists. Immutable once built.
///
/// `original_ids()[i]` is the id node i carried in the source file (or i itself
/// for generated graphs), so dataset-to-node assignment can be reproduced.
class Graph {
 public:
  Graph() = default;

  /// Builds a canonical graph on `n` nodes: self-loops dropped, duplicate and
  /// reversed edges merged.
  static Graph from_edges(Node n, const std::vector<std::pair<Node, Node>>& edges,
                          std::vector<std::int64_t> original_ids = {}) {
    if (n <= 0) throw ValidationError("graph must have at least one node");
    Graph g;
    g.adj_.assign(static_cast<std::size_t>(n), {});
    for (auto [u, v] : edges) {
      if (u < 0 || v < 0 || u >= n || v >= n)
        throw ValidationError("edge endpoint out of range [0, " + std::to_string(n) + ")");
      if (u == v) continue;
      g.adj_[u].push_back(v);
      g.adj_[v].push_back(u);
    }
    for (auto& nbrs : g.adj_) {
      std::sort(nbrs.begin(), nbrs.end());
      nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
      g.edge_count_ += nbrs.size();
    }
    g.edge_count_ /= 2;
    if (original_ids.empty()) {
      original_ids.resize(static_cast<std::size_t>(n));
      std::iota(original_ids.begin(), original_ids.end(), std::int64_t{0});
    } else if (static_cast<Node>(original_ids.size()) != n) {
      throw ValidationError("original id table size does not match node count");
    }
    g.original_ids_ = std::move(original_ids);
    g.connected_ = g.component_labels().second == 1;
    return g;
  }

  Node node_count() const noexcept { return static_cast<Node>(adj_.size()); }
  std::size_t edge_count() const noexcept { return edge_count_; }
  bool connected() const noexcept { return connected_; }

  const std::vector<Node>& neighbors(Node i) const { return adj_.at(static_cast<std::size_t>(i)); }
  std::size_t degree(Node i) const { return neighbors(i).size(); }
  bool has_edge(Node i, Node j) const {
    const auto& nb = neighbors(i);
    return std::binary_search(nb.begin(), nb.end(), j);
  }

  const std::vector<std::int64_t>& original_ids() const noexcept { return original_ids_; }

  /// Edges {u, v} with u < v in lexicographic order.
  std::vector<std::pair<Node, Node>> edges() const {
    std::vector<std::pair<Node, Node>> out;
    out.reserve(edge_count_);
    for (Node u = 0; u < node_count(); ++u)
      for (Node v : adj_[u])
        if (u < v) out.emplace_back(u, v);
    return out;
  }

  /// BFS component label per node plus the number of components. Labels are
  /// assigned in order of the smallest node in each component.
  std::pair<std::vector<Node>, Node> component_labels() const {
    std::vector<Node> label(adj_.size(), -1);
    Node next = 0;
    std::queue<Node> frontier;
    for (Node s = 0; s < node_count(); ++s) {
      if (label[s] >= 0) continue;
      label[s] = next;
      frontier.push(s);
      while (!frontier.empty()) {
        Node u = frontier.front();
        frontier.pop();
        for (Node v : adj_[u])
          if (label[v] < 0) {
            label[v] = next;
            frontier.push(v);
          }
      }
      ++next;
    }
    return {std::move(label), next};
  }

  /// Two-colouring test by BFS.
  bool bipartite() const {
    std::vector<int> colour(adj_.size(), -1);
    std::queue<Node> frontier;
    for (Node s = 0; s < node_count(); ++s) {
      if (colour[s] >= 0) continue;
      colour[s] = 0;
      frontier.push(s);
      while (!frontier.empty()) {
        Node u = frontier.front();
        frontier.pop();
        for (Node v : adj_[u]) {
          if (colour[v] < 0) {
            colour[v] = 1 - colour[u];
            frontier.push(v);
          } else if (colour[v] == colour[u]) {
            return false;
          }
        }
      }
    }
    return true;
  }

  friend bool operator==(const Graph& a, const Graph& b) { return a.adj_ == b.adj_; }

 private:
  std::vector<std::vector<Node>> adj_;
  std::vector<std::int64_t> original_ids_;
  std::size_t edge_count_ = 0;
  bool connected_ = false;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::int64_t parse_node_id(const std::string& tok, std::size_t line) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(tok, &used);
  } catch (const std::exception&) {
    throw ParseError(line, "expected a non-negative integer node id, got '" + tok + "'");
  }
  if (used != tok.size() || v < 0)
    throw ParseError(line, "expected a non-negative integer node id, got '" + tok + "'");
  return v;
}

}  // namespace detail

/// Parses a whitespace-separated "u v" edge list. Lines starting with '#' and
/// blank lines are skipped. Ids are remapped to [0, N) in ascending id order;
/// directed input is symmetrized.
inline Graph load_edge_list(std::istream& in) {
  std::vector<std::pair<std::int64_t, std::int64_t>> raw;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    std::istringstream fields{std::string(body)};
    std::string a, b, extra;
    if (!(fields >> a >> b)) throw ParseError(lineno, "expected two node ids");
    if (fields >> extra) throw ParseError(lineno, "unexpected token '" + extra + "'");
    raw.emplace_back(detail::parse_node_id(a, lineno), detail::parse_node_id(b, lineno));
  }
  if (raw.empty()) throw ValidationError("edge list contains no edges");

  std::map<std::int64_t, Node> dense;
  for (auto [u, v] : raw) {
    dense.emplace(u, 0);
    dense.emplace(v, 0);
  }
  std::vector<std::int64_t> ids;
  ids.reserve(dense.size());
  for (auto& [id, idx] : dense) {
    idx = static_cast<Node>(ids.size());
    ids.push_back(id);
  }
  std::vector<std::pair<Node, Node>> edges;
  edges.reserve(raw.size());
  for (auto [u, v] : raw) edges.emplace_back(dense[u], dense[v]);
  const auto n = static_cast<Node>(ids.size());
  auto g = Graph::from_edges(n, edges, std::move(ids));
  if (g.edge_count() == 0) throw ValidationError("edge list contains only self-loops");
  return g;
}

inline Graph load_edge_list(std::string_view text) {
  std::istringstream in{std::string(text)};
  return load_edge_list(in);
}

inline Graph load_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open graph file '" + path + "'");
  return load_edge_list(in);
}

/// Canonical "u v" text with u < v, one edge per line.
inline std::string serialize_edge_list(const Graph& g) {
  std::ostringstream out;
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
  return out.str();
}

/// Induced subgraph on the largest connected component, re-densified in the
/// original node order. Ties go to the component holding the smallest
/// original id.
inline Graph largest_connected_component(const Graph& g) {
  auto [label, count] = g.component_labels();
  if (count == 1) return g;
  std::vector<std::size_t> size(static_cast<std::size_t>(count), 0);
  std::vector<std::int64_t> min_id(static_cast<std::size_t>(count),
                                   std::numeric_limits<std::int64_t>::max());
  for (Node i = 0; i < g.node_count(); ++i) {
    ++size[label[i]];
    min_id[label[i]] = std::min(min_id[label[i]], g.original_ids()[i]);
  }
  Node best = 0;
  for (Node c = 1; c < count; ++c)
    if (size[c] > size[best] || (size[c] == size[best] && min_id[c] < min_id[best])) best = c;

  std::vector<Node> remap(static_cast<std::size_t>(g.node_count()), -1);
  std::vector<std::int64_t> ids;
  for (Node i = 0; i < g.node_count(); ++i)
    if (label[i] == best) {
      remap[i] = static_cast<Node>(ids.size());
      ids.push_back(g.original_ids()[i]);
    }
  std::vector<std::pair<Node, Node>> edges;
  for (auto [u, v] : g.edges())
    if (label[u] == best) edges.emplace_back(remap[u], remap[v]);
  const auto n = static_cast<Node>(ids.size());
  return Graph::from_edges(n, edges, std::move(ids));
}

/// Node degrees; every node must have at least one neighbour.
inline std::vector<std::size_t> degrees(const Graph& g) {
  std::vector<std::size_t> d(static_cast<std::size_t>(g.node_count()));
  for (Node i = 0; i < g.node_count(); ++i) {
    d[i] = g.degree(i);
    if (d[i] == 0)
      throw ValidationError("node " + std::to_string(i) + " is isolated; random walk undefined");
  }
  return d;
}

// Synthetic families used by tests and demos.

inline Graph path_graph(Node n) {
  std::vector<std::pair<Node, Node>> e;
  for (Node i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return Graph::from_edges(n, e);
}

inline Graph cycle_graph(Node n) {
  std::vector<std::pair<Node, Node>> e;
  for (Node i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return Graph::from_edges(n, e);
}

/// Star K_{1,leaves} with centre 0.
inline Graph star_graph(Node leaves) {
  std::vector<std::pair<Node, Node>> e;
  for (Node i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return Graph::from_edges(leaves + 1, e);
}

inline Graph complete_graph(Node n) {
  std::vector<std::pair<Node, Node>> e;
  for (Node i = 0; i < n; ++i)
    for (Node j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return Graph::from_edges(n, e);
}

/// G(n, p): each pair independently with probability p.
inline Graph erdos_renyi(Node n, double p, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<std::pair<Node, Node>> e;
  for (Node i = 0; i < n; ++i)
    for (Node j = i + 1; j < n; ++j)
      if (rng.uniform01() < p) e.emplace_back(i, j);
  return Graph::from_edges(n, e);
}

/// First connected, non-bipartite G(n, p) sample among seeds seed, seed+1, ...
inline Graph connected_erdos_renyi(Node n, double p, std::uint64_t seed, int max_tries = 10000) {
  for (int t = 0; t < max_tries; ++t) {
    auto g = erdos_renyi(n, p, seed + static_cast<std::uint64_t>(t));
    if (g.connected() && !g.bipartite()) return g;
  }
  throw ValidationError("no connected non-bipartite G(n,p) sample found");
}

}  // namespace tokenwalk
