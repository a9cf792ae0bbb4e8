#include "distsig/graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>
#include <unordered_map>

#include <Eigen/LU>

#include "distsig/error.hpp"
#include "distsig/rng.hpp"

namespace distsig {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

std::string edge_str(int u, int v) {
  return "(" + std::to_string(u) + "," + std::to_string(v) + ")";
}

}  // namespace

// ---------------------------------------------------------------------------
// Graph

Graph build_graph(int n, const std::vector<Edge>& edges) {
  if (n < 0) throw InvalidArgument("negative node count");
  Graph g;
  g.n_ = n;
  g.adj_.assign(n, {});
  g.edges_.reserve(edges.size());
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw InvalidArgument("edge " + edge_str(u, v) + " out of range for n=" +
                            std::to_string(n));
    if (u == v) throw InvalidArgument("self-loop at node " + std::to_string(u));
    g.edges_.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(g.edges_.begin(), g.edges_.end());
  auto dup = std::adjacent_find(g.edges_.begin(), g.edges_.end());
  if (dup != g.edges_.end())
    throw InvalidArgument("duplicate edge " + edge_str(dup->first, dup->second));
  for (auto [u, v] : g.edges_) {
    g.adj_[u].push_back(v);
    g.adj_[v].push_back(u);
  }
  for (auto& nb : g.adj_) std::sort(nb.begin(), nb.end());
  return g;
}

bool Graph::has_edge(int u, int v) const { return edge_index(u, v) >= 0; }

int Graph::edge_index(int u, int v) const {
  if (u > v) std::swap(u, v);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), Edge{u, v});
  if (it == edges_.end() || *it != Edge{u, v}) return -1;
  return static_cast<int>(it - edges_.begin());
}

Eigen::VectorXd Graph::degrees() const {
  Eigen::VectorXd d(n_);
  for (int i = 0; i < n_; ++i) d[i] = static_cast<double>(adj_[i].size());
  return d;
}

Eigen::SparseMatrix<double> Graph::sparse_adjacency() const {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(2 * edges_.size());
  for (auto [u, v] : edges_) {
    t.emplace_back(u, v, 1.0);
    t.emplace_back(v, u, 1.0);
  }
  Eigen::SparseMatrix<double> a(n_, n_);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

std::vector<int> Graph::components(int* count) const {
  std::vector<int> comp(n_, -1);
  int c = 0;
  for (int s = 0; s < n_; ++s) {
    if (comp[s] >= 0) continue;
    std::queue<int> q;
    q.push(s);
    comp[s] = c;
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (int w : adj_[v])
        if (comp[w] < 0) {
          comp[w] = c;
          q.push(w);
        }
    }
    ++c;
  }
  if (count) *count = c;
  return comp;
}

bool Graph::connected() const {
  int c = 0;
  components(&c);
  return c <= 1;
}

Graph Graph::main_component(std::vector<int>* node_map) const {
  int count = 0;
  auto comp = components(&count);
  std::vector<int> sizes(count, 0);
  for (int c : comp) ++sizes[c];
  const int best = count == 0
                       ? -1
                       : static_cast<int>(std::max_element(sizes.begin(), sizes.end()) -
                                          sizes.begin());
  std::vector<int> new_index(n_, -1), kept;
  for (int v = 0; v < n_; ++v)
    if (comp[v] == best) {
      new_index[v] = static_cast<int>(kept.size());
      kept.push_back(v);
    }
  std::vector<Edge> sub;
  for (auto [u, v] : edges_)
    if (comp[u] == best) sub.emplace_back(new_index[u], new_index[v]);
  if (node_map) *node_map = kept;
  return build_graph(static_cast<int>(kept.size()), sub);
}

Graph Graph::complement() const {
  std::vector<Edge> e;
  for (int u = 0; u < n_; ++u)
    for (int v = u + 1; v < n_; ++v)
      if (!has_edge(u, v)) e.emplace_back(u, v);
  return build_graph(n_, e);
}

Eigen::SparseMatrix<double> sparse_laplacian(const Graph& g) {
  std::vector<Eigen::Triplet<double>> t;
  for (auto [u, v] : g.edges()) {
    t.emplace_back(u, v, -1.0);
    t.emplace_back(v, u, -1.0);
  }
  for (int i = 0; i < g.num_nodes(); ++i)
    if (g.degree(i) > 0) t.emplace_back(i, i, g.degree(i));
  Eigen::SparseMatrix<double> l(g.num_nodes(), g.num_nodes());
  l.setFromTriplets(t.begin(), t.end());
  return l;
}

Eigen::MatrixXd normalized_adjacency(const Graph& g) {
  return Eigen::MatrixXd(sparse_normalized_adjacency(g));
}

Eigen::SparseMatrix<double> sparse_normalized_adjacency(const Graph& g) {
  const int n = g.num_nodes();
  Eigen::VectorXd inv_sqrt(n);
  for (int i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(g.degree(i) + 1.0);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(2 * g.edges().size() + n);
  for (int i = 0; i < n; ++i) t.emplace_back(i, i, inv_sqrt[i] * inv_sqrt[i]);
  for (auto [u, v] : g.edges()) {
    const double w = inv_sqrt[u] * inv_sqrt[v];
    t.emplace_back(u, v, w);
    t.emplace_back(v, u, w);
  }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

// ---------------------------------------------------------------------------
// SpanningTree

SpanningTree::SpanningTree(int n, std::vector<Edge> edges, const Graph* host)
    : n_(n), edges_(std::move(edges)) {
  for (auto& e : edges_)
    if (e.first > e.second) std::swap(e.first, e.second);
  std::sort(edges_.begin(), edges_.end());
  if (n > 0 && static_cast<int>(edges_.size()) != n - 1)
    throw InvalidArgument("spanning tree needs " + std::to_string(n - 1) +
                          " edges, got " + std::to_string(edges_.size()));
  UnionFind uf(n);
  for (auto [u, v] : edges_) {
    if (u < 0 || v >= n || u == v)
      throw InvalidArgument("invalid tree edge " + edge_str(u, v));
    if (host && !host->has_edge(u, v))
      throw InvalidArgument("tree edge " + edge_str(u, v) + " not in host graph");
    if (!uf.unite(u, v))
      throw InvalidArgument("tree edges contain a cycle at " + edge_str(u, v));
  }
}

SpanningTree SpanningTree::rooted_at(int v0) const {
  if (v0 < 0 || v0 >= n_) throw InvalidArgument("root out of range");
  SpanningTree t = *this;
  std::vector<std::vector<int>> adj(n_);
  for (auto [u, v] : edges_) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  t.root_ = v0;
  t.parent_.assign(n_, -1);
  t.depth_.assign(n_, -1);
  std::queue<int> q;
  q.push(v0);
  t.depth_[v0] = 0;
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (int w : adj[v])
      if (t.depth_[w] < 0) {
        t.depth_[w] = t.depth_[v] + 1;
        t.parent_[w] = v;
        q.push(w);
      }
  }
  return t;
}

int SpanningTree::meet(int a, int b) const {
  if (!root_) throw InvalidArgument("tree is not rooted");
  while (depth_[a] > depth_[b]) a = parent_[a];
  while (depth_[b] > depth_[a]) b = parent_[b];
  while (a != b) {
    a = parent_[a];
    b = parent_[b];
  }
  return a;
}

Graph SpanningTree::as_graph() const { return build_graph(n_, edges_); }

bool TreeCover::covers(const Graph& g) const {
  std::vector<bool> seen(g.num_edges(), false);
  for (const auto& t : trees)
    for (auto [u, v] : t.edges()) {
      int k = g.edge_index(u, v);
      if (k < 0) return false;
      seen[k] = true;
    }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

std::uint64_t spanning_tree_count(const Graph& g) {
  const int n = g.num_nodes();
  if (n <= 1) return 1;
  if (!g.connected()) return 0;
  Eigen::MatrixXd reduced = laplacian(g).bottomRightCorner(n - 1, n - 1);
  const double det = Eigen::FullPivLU<Eigen::MatrixXd>(reduced).determinant();
  if (det >= 1.8e19) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(std::llround(det));
}

std::vector<SpanningTree> enumerate_spanning_trees(const Graph& g,
                                                   std::uint64_t cap) {
  const int n = g.num_nodes();
  if (!g.connected()) throw InvalidArgument("graph disconnected");
  const std::uint64_t expected = spanning_tree_count(g);
  if (expected > cap)
    throw LimitError("tree count " + std::to_string(expected) + " exceeds cap " +
                         std::to_string(cap),
                     expected);

  const auto& edges = g.edges();
  const int m = g.num_edges();
  std::vector<SpanningTree> out;
  out.reserve(expected);
  std::vector<Edge> chosen;

  // Whether chosen edges plus the undecided suffix still span the graph.
  auto spannable = [&](int from) {
    UnionFind uf(n);
    int merged = 0;
    for (auto [u, v] : chosen) merged += uf.unite(u, v);
    for (int k = from; k < m && merged < n - 1; ++k)
      merged += uf.unite(edges[k].first, edges[k].second);
    return merged == n - 1;
  };

  std::function<void(int, UnionFind)> rec = [&](int k, UnionFind uf) {
    if (static_cast<int>(chosen.size()) == n - 1) {
      out.emplace_back(n, chosen);
      return;
    }
    if (k == m || static_cast<int>(chosen.size()) + (m - k) < n - 1) return;
    auto [u, v] = edges[k];
    if (uf.find(u) != uf.find(v)) {
      UnionFind next = uf;
      next.unite(u, v);
      chosen.push_back(edges[k]);
      rec(k + 1, std::move(next));
      chosen.pop_back();
    }
    if (spannable(k + 1)) rec(k + 1, std::move(uf));
  };
  rec(0, UnionFind(n));
  std::sort(out.begin(), out.end());
  if (out.size() != expected)
    throw NumericError("spanning tree enumeration produced " +
                       std::to_string(out.size()) + " trees, Kirchhoff count " +
                       std::to_string(expected));
  return out;
}

// ---------------------------------------------------------------------------
// Cliques

CliqueNumbers clique_number_complement(const Graph& g, int limit) {
  const int n = g.num_nodes();
  if (n > std::min(limit, 64))
    throw LimitError("n=" + std::to_string(n) + " exceeds exact limit " +
                         std::to_string(std::min(limit, 64)),
                     static_cast<std::uint64_t>(n));
  using Mask = std::uint64_t;
  // Neighbourhoods in the complement graph.
  std::vector<Mask> nb(n, 0);
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (u != v && !g.has_edge(u, v)) nb[u] |= Mask{1} << v;

  int best = 0;
  std::function<void(int, Mask, Mask)> bron_kerbosch = [&](int size, Mask p,
                                                           Mask x) {
    if (p == 0) {
      if (x == 0) best = std::max(best, size);
      return;
    }
    if (size + std::popcount(p) <= best) return;
    // Tomita pivot: vertex of P|X with most neighbours in P.
    Mask px = p | x;
    int pivot = std::countr_zero(px);
    int pivot_deg = -1;
    for (Mask s = px; s; s &= s - 1) {
      int u = std::countr_zero(s);
      int d = std::popcount(p & nb[u]);
      if (d > pivot_deg) {
        pivot_deg = d;
        pivot = u;
      }
    }
    for (Mask cand = p & ~nb[pivot]; cand; cand &= cand - 1) {
      int v = std::countr_zero(cand);
      Mask bit = Mask{1} << v;
      bron_kerbosch(size + 1, p & nb[v], x & nb[v]);
      p &= ~bit;
      x |= bit;
    }
  };
  const Mask all = n == 64 ? ~Mask{0} : (Mask{1} << n) - 1;
  bron_kerbosch(0, all, 0);
  return {best, n - best};
}

// ---------------------------------------------------------------------------
// Tree covers

std::optional<CoverSearchResult> cheapest_tree_cover(
    const Graph& g, const std::vector<SpanningTree>& trees,
    const std::vector<double>& tree_costs, int size_cap) {
  const int m = g.num_edges();
  if (m > 64) throw LimitError("cover search supports at most 64 edges", m);
  if (trees.size() != tree_costs.size())
    throw DimensionError("tree/cost count mismatch");
  if (trees.empty() || size_cap < 1) return std::nullopt;
  using Mask = std::uint64_t;

  std::vector<Mask> masks(trees.size(), 0);
  std::vector<std::vector<int>> trees_with_edge(m);
  for (std::size_t t = 0; t < trees.size(); ++t) {
    for (auto [u, v] : trees[t].edges()) {
      int k = g.edge_index(u, v);
      if (k < 0) throw InvalidArgument("tree edge not in graph");
      masks[t] |= Mask{1} << k;
    }
    for (int k = 0; k < m; ++k)
      if (masks[t] >> k & 1) trees_with_edge[k].push_back(static_cast<int>(t));
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  struct Entry {
    double cost;
    int choice;
  };
  // memo[budget][uncovered]; branch on the lowest uncovered edge.
  std::vector<std::unordered_map<Mask, Entry>> memo(size_cap + 1);
  std::function<double(Mask, int)> best = [&](Mask uncovered, int budget) -> double {
    if (uncovered == 0) return 0.0;
    if (budget == 0) return kInf;
    if (auto it = memo[budget].find(uncovered); it != memo[budget].end())
      return it->second.cost;
    const int e = std::countr_zero(uncovered);
    Entry entry{kInf, -1};
    for (int t : trees_with_edge[e]) {
      double c = tree_costs[t] + best(uncovered & ~masks[t], budget - 1);
      if (c < entry.cost) entry = {c, t};
    }
    memo[budget][uncovered] = entry;
    return entry.cost;
  };

  const Mask all = m == 64 ? ~Mask{0} : (Mask{1} << m) - 1;
  if (m == 0) {
    // Edgeless (single node) graph: the cheapest single tree covers.
    int t = static_cast<int>(std::min_element(tree_costs.begin(), tree_costs.end()) -
                             tree_costs.begin());
    return CoverSearchResult{tree_costs[t], {t}};
  }
  const double cost = best(all, size_cap);
  if (cost == kInf) return std::nullopt;

  CoverSearchResult result{cost, {}};
  Mask uncovered = all;
  int budget = size_cap;
  while (uncovered) {
    int t = memo[budget].at(uncovered).choice;
    result.tree_indices.push_back(t);
    uncovered &= ~masks[t];
    --budget;
  }
  return result;
}

TreeCover min_tree_cover(const Graph& g, int size_cap, std::uint64_t tree_cap) {
  auto trees = enumerate_spanning_trees(g, tree_cap);
  std::vector<double> unit(trees.size(), 1.0);
  auto found = cheapest_tree_cover(g, trees, unit, size_cap);
  if (!found)
    throw LimitError("no cover within cap " + std::to_string(size_cap));
  TreeCover cover;
  for (int t : found->tree_indices) cover.trees.push_back(trees[t]);
  return cover;
}

// ---------------------------------------------------------------------------
// Generation

LabeledGraph sbm_generate(const std::vector<int>& block_sizes, double p_in,
                          double p_out, std::uint64_t seed) {
  if (!(0.0 <= p_out && p_out <= p_in && p_in <= 1.0))
    throw InvalidArgument("SBM requires 0 <= p_out <= p_in <= 1");
  std::vector<int> labels;
  for (std::size_t b = 0; b < block_sizes.size(); ++b) {
    if (block_sizes[b] < 0) throw InvalidArgument("negative block size");
    labels.insert(labels.end(), block_sizes[b], static_cast<int>(b));
  }
  const int n = static_cast<int>(labels.size());
  Rng rng(seed);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < (labels[i] == labels[j] ? p_in : p_out))
        edges.emplace_back(i, j);
  return {build_graph(n, edges), std::move(labels)};
}

Graph random_connected_graph(int n, double extra_edge_p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Edge> edges;
  for (int v = 1; v < n; ++v)
    edges.emplace_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(v))), v);
  std::vector<bool> used(static_cast<std::size_t>(n) * n, false);
  for (auto [u, v] : edges) used[static_cast<std::size_t>(u) * n + v] = true;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (!used[static_cast<std::size_t>(i) * n + j] && rng.bernoulli(extra_edge_p))
        edges.emplace_back(i, j);
  return build_graph(n, edges);
}

// ---------------------------------------------------------------------------
// File formats

namespace {

bool next_data_line(std::istream& in, std::string& line, std::size_t& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    return true;
  }
  return false;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  return f;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

}  // namespace

Graph read_graph(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!next_data_line(in, line, lineno)) throw ParseError("missing header \"n m\"");
  long long n = -1, m = -1;
  {
    std::istringstream ss(line);
    std::string rest;
    if (!(ss >> n >> m) || (ss >> rest) || n < 0 || m < 0)
      throw ParseError("expected header \"n m\"", lineno);
  }
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(m));
  for (long long k = 0; k < m; ++k) {
    if (!next_data_line(in, line, lineno))
      throw ParseError("expected " + std::to_string(m) + " edges, found " +
                       std::to_string(k));
    std::istringstream ss(line);
    long long u, v;
    std::string rest;
    if (!(ss >> u >> v) || (ss >> rest))
      throw ParseError("expected edge \"u v\"", lineno);
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw ParseError("edge endpoint out of range", lineno);
    if (u == v) throw ParseError("self-loop", lineno);
    edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
  }
  if (next_data_line(in, line, lineno))
    throw ParseError("unexpected content after " + std::to_string(m) + " edges",
                     lineno);
  try {
    return build_graph(static_cast<int>(n), edges);
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
}

Graph read_graph_file(const std::string& path) {
  auto f = open_in(path);
  try {
    return read_graph(f);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_graph(std::ostream& out, const Graph& g) {
  out << g.num_nodes() << ' ' << g.num_edges() << '\n';
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

void write_graph_file(const std::string& path, const Graph& g) {
  auto f = open_out(path);
  write_graph(f, g);
  if (!f) throw IoError("failed writing '" + path + "'");
}

std::vector<int> read_labels(std::istream& in, int expected_count) {
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (next_data_line(in, line, lineno)) {
    std::istringstream ss(line);
    long long v;
    std::string rest;
    if (!(ss >> v) || (ss >> rest) || v < 0 || v > std::numeric_limits<int>::max())
      throw ParseError("expected one non-negative integer label", lineno);
    labels.push_back(static_cast<int>(v));
  }
  if (expected_count >= 0 && static_cast<int>(labels.size()) != expected_count)
    throw ParseError("expected " + std::to_string(expected_count) +
                     " labels, found " + std::to_string(labels.size()));
  return labels;
}

std::vector<int> read_labels_file(const std::string& path, int expected_count) {
  auto f = open_in(path);
  try {
    return read_labels(f, expected_count);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_labels(std::ostream& out, const std::vector<int>& labels) {
  for (int l : labels) out << l << '\n';
}

void write_labels_file(const std::string& path, const std::vector<int>& labels) {
  auto f = open_out(path);
  write_labels(f, labels);
  if (!f) throw IoError("failed writing '" + path + "'");
}

}  // namespace distsig
