#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace distsig {

using Edge = std::pair<int, int>;

/// Simple undirected unweighted graph on nodes 0..n-1.
///
/// Edges are stored once, normalized to (u, v) with u < v and sorted
/// lexicographically, so edge indices are stable and canonical. Dense
/// matrix views are produced on demand; the edge list is what the
/// total-variation sums iterate over.
class Graph {
 public:
  Graph() = default;

  int num_nodes() const { return n_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int v) const { return adj_[v]; }
  int degree(int v) const { return static_cast<int>(adj_[v].size()); }
  bool has_edge(int u, int v) const;

  /// Index of edge {u, v} in edges(), or -1.
  int edge_index(int u, int v) const;

  Eigen::VectorXd degrees() const;

  template <typename Scalar = double>
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> adjacency() const {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n_, n_);
    for (auto [u, v] : edges_) a(u, v) = a(v, u) = Scalar(1);
    return a;
  }

  Eigen::SparseMatrix<double> sparse_adjacency() const;

  /// Connected components; returns component id per node (ids ordered by
  /// smallest member) and writes the count.
  std::vector<int> components(int* count = nullptr) const;
  bool connected() const;

  /// The largest connected component as its own graph. `node_map` receives
  /// the original index of each retained node; ties broken by lowest id.
  Graph main_component(std::vector<int>* node_map = nullptr) const;

  Graph complement() const;

  friend Graph build_graph(int n, const std::vector<Edge>& edges);

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
};

/// Validating constructor. Throws InvalidArgument on a self-loop, an
/// out-of-range endpoint or a repeated unordered pair.
Graph build_graph(int n, const std::vector<Edge>& edges);

/// L = D - A.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> laplacian(const Graph& g) {
  const int n = g.num_nodes();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> l =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
  for (auto [u, v] : g.edges()) {
    l(u, v) -= Scalar(1);
    l(v, u) -= Scalar(1);
    l(u, u) += Scalar(1);
    l(v, v) += Scalar(1);
  }
  return l;
}

Eigen::SparseMatrix<double> sparse_laplacian(const Graph& g);

/// GCN propagation matrix D~^{-1/2} (A + I) D~^{-1/2}.
Eigen::MatrixXd normalized_adjacency(const Graph& g);
Eigen::SparseMatrix<double> sparse_normalized_adjacency(const Graph& g);

// ---------------------------------------------------------------------------
// Spanning trees

class SpanningTree {
 public:
  /// Validates n-1 edges, acyclic, connected and (when `host` is given)
  /// that every edge belongs to the host graph.
  SpanningTree(int n, std::vector<Edge> edges, const Graph* host = nullptr);

  int num_nodes() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }

  std::optional<int> root() const { return root_; }
  /// Predecessor toward the root, -1 at the root. Empty until rooted.
  const std::vector<int>& parent() const { return parent_; }
  const std::vector<int>& depth() const { return depth_; }

  /// Copy of this tree rooted at v0.
  SpanningTree rooted_at(int v0) const;

  /// Nearest common ancestor of a and b. Requires a root.
  int meet(int a, int b) const;

  /// Graph view of the tree on the same node set.
  Graph as_graph() const;

  friend bool operator==(const SpanningTree& a, const SpanningTree& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_;
  }
  friend bool operator<(const SpanningTree& a, const SpanningTree& b) {
    return a.edges_ < b.edges_;
  }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::optional<int> root_;
  std::vector<int> parent_;
  std::vector<int> depth_;
};

struct TreeCover {
  std::vector<SpanningTree> trees;
  std::size_t size() const { return trees.size(); }
  /// Whether the union of tree edges equals the host edge set exactly.
  bool covers(const Graph& g) const;
};

/// Kirchhoff count (determinant of a reduced Laplacian), rounded.
std::uint64_t spanning_tree_count(const Graph& g);

/// All spanning trees in canonical (lexicographic edge list) order.
/// Throws InvalidArgument if disconnected and LimitError carrying the
/// Kirchhoff count when it exceeds `cap`.
std::vector<SpanningTree> enumerate_spanning_trees(const Graph& g,
                                                   std::uint64_t cap);

struct CliqueNumbers {
  int omega_complement;  // largest clique in the complement graph
  int c1;                // n - omega_complement
};

inline constexpr int kExactCliqueLimit = 32;

/// Exact clique number of the complement via Bron-Kerbosch with pivoting.
/// Throws LimitError when n exceeds `limit` (at most 64).
CliqueNumbers clique_number_complement(const Graph& g,
                                       int limit = kExactCliqueLimit);

/// Cover with the fewest trees among subsets of the enumerated spanning
/// trees of size <= size_cap. Throws LimitError ("no cover within cap").
TreeCover min_tree_cover(const Graph& g, int size_cap,
                         std::uint64_t tree_cap = 20000);

/// Exhaustive weighted cover search shared by min_tree_cover and the
/// covering total variation: minimizes the summed tree cost over covers
/// using at most size_cap trees. Returns indices into `trees`, empty
/// optional when no cover exists within the cap.
struct CoverSearchResult {
  double cost;
  std::vector<int> tree_indices;
};
std::optional<CoverSearchResult> cheapest_tree_cover(
    const Graph& g, const std::vector<SpanningTree>& trees,
    const std::vector<double>& tree_costs, int size_cap);

// ---------------------------------------------------------------------------
// Generation and file formats

struct LabeledGraph {
  Graph graph;
  std::vector<int> labels;
};

/// Stochastic block model; one Bernoulli draw per pair in (i<j) order.
LabeledGraph sbm_generate(const std::vector<int>& block_sizes, double p_in,
                          double p_out, std::uint64_t seed);

/// Random connected graph: a random recursive tree plus each remaining
/// pair independently with probability `extra_edge_p`.
Graph random_connected_graph(int n, double extra_edge_p, std::uint64_t seed);

/// Text format: "n m" then m lines "u v"; lines starting with '#' ignored.
Graph read_graph(std::istream& in);
Graph read_graph_file(const std::string& path);
void write_graph(std::ostream& out, const Graph& g);
void write_graph_file(const std::string& path, const Graph& g);

/// One integer per line.
std::vector<int> read_labels(std::istream& in, int expected_count = -1);
std::vector<int> read_labels_file(const std::string& path,
                                  int expected_count = -1);
void write_labels(std::ostream& out, const std::vector<int>& labels);
void write_labels_file(const std::string& path, const std::vector<int>& labels);

}  // namespace distsig
