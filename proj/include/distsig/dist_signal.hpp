#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "distsig/graph.hpp"
#include "distsig/rng.hpp"

namespace distsig {

inline constexpr double kProbabilityTolerance = 1e-9;

/// Probability weights over a finite label set S = {0, ..., m-1}.
class DiscreteDistribution {
 public:
  explicit DiscreteDistribution(Eigen::VectorXd weights);

  static DiscreteDistribution uniform(int m);
  static DiscreteDistribution delta(int m, int label);

  int size() const { return static_cast<int>(w_.size()); }
  double operator[](int s) const { return w_[s]; }
  const Eigen::VectorXd& weights() const { return w_; }

 private:
  Eigen::VectorXd w_;
};

/// One distribution per node, stored as the row-stochastic n x m matrix X_N.
class Marginals {
 public:
  explicit Marginals(Eigen::MatrixXd rows);

  int num_nodes() const { return static_cast<int>(x_.rows()); }
  int num_labels() const { return static_cast<int>(x_.cols()); }
  const Eigen::MatrixXd& matrix() const { return x_; }
  DiscreteDistribution node(int i) const {
    return DiscreteDistribution(x_.row(i).transpose());
  }
  /// Graph signal of the weights of label s.
  Eigen::VectorXd label_column(int s) const { return x_.col(s); }
  double weight(int node, int label) const { return x_(node, label); }

 private:
  Eigen::MatrixXd x_;
};

/// Joint plan gamma(s_i, s_j) with row sums = source, column sums = target.
struct Coupling {
  Eigen::MatrixXd plan;
  DiscreteDistribution source;
  DiscreteDistribution target;

  /// Transport cost under the discrete metric: the off-diagonal mass.
  double cost() const { return plan.sum() - plan.trace(); }
  /// Largest violation of the marginal constraints.
  double marginal_error() const;
};

/// Probability table over S^n. Index encoding: node 0 is the least
/// significant base-m digit.
class JointDistribution {
 public:
  JointDistribution(int num_nodes, int num_labels, Eigen::VectorXd weights);

  int num_nodes() const { return n_; }
  int num_labels() const { return m_; }
  const Eigen::VectorXd& weights() const { return w_; }
  /// Label of `node` in configuration `index`.
  int label_at(std::int64_t index, int node) const;
  Eigen::VectorXd marginal(int node) const;
  /// Expected classical total variation, sum over edges of P(x_u != x_v).
  double expected_total_variation(const Graph& g) const;

 private:
  int n_;
  int m_;
  Eigen::VectorXd w_;
};

/// W(mu, nu)^2 under the discrete metric: half the l1 distance.
double wasserstein_sq(const DiscreteDistribution& mu, const DiscreteDistribution& nu);

/// Constructive optimal coupling with diagonal min(mu, nu).
Coupling optimal_coupling(const DiscreteDistribution& mu, const DiscreteDistribution& nu);

inline constexpr int kCouplingOracleMaxLabels = 6;

/// Exact optimum of the transportation LP, m <= kCouplingOracleMaxLabels.
double coupling_lp_oracle(const DiscreteDistribution& mu, const DiscreteDistribution& nu);

struct TvL1L2 {
  double l1;  // T_{G,1}
  double l2;  // T_{G,2}
};

/// Edge-sum l1 and l2 total variations of the marginal weight signals.
TvL1L2 tv_l1_l2(const Graph& g, const Marginals& marginals);

/// Tr(X^T L X), the trace route to T_{G,2}.
double tv_l2_trace(const Graph& g, const Marginals& marginals);

inline constexpr std::int64_t kDefaultStateCap = 729;  // 3^6

struct ExactTv {
  double value;
  JointDistribution optimum;
};

/// T_G(N): minimal expected total variation over joint distributions on
/// S^n with the given marginals, solved as a dense LP. Throws LimitError
/// when m^n exceeds `state_cap`.
ExactTv tv_exact(const Graph& g, const Marginals& marginals,
                 std::int64_t state_cap = kDefaultStateCap);

/// T_{G,H,v0}: for each edge (i,j) of g, with v_k the meet of the root
/// paths to v_i and v_j in h, adds mu_i(s) + mu_j(s)
///   - 2 mu_k(s) rho_{Q_i}(s) rho_{Q_j}(s),
/// where rho multiplies min(1, mu_b(s)/mu_a(s)) along the tree path from
/// v_k downward (taken as 1 when mu_a(s) = 0).
double tv_tree_rooted(const Graph& g, const SpanningTree& h, int root,
                      const Marginals& marginals);

struct CoverTv {
  double value;    // minimal summed per-tree variation within the cap
  TreeCover cover; // witness
  int size_cap;
};

/// Covering total variation restricted to covers of at most `size_cap`
/// spanning trees; exact within that restriction. Per-tree variation is
/// half the tree's l1 variation.
CoverTv tv_cover(const Graph& g, const Marginals& marginals, int size_cap,
                 std::uint64_t tree_cap = 20000);

// ---------------------------------------------------------------------------
// Inequality verification

struct BoundConfig {
  std::int64_t state_cap = kDefaultStateCap;
  std::uint64_t tree_cap = 20000;
  int cover_size_cap = 0;    // 0: max(c1, 3)
  double tolerance = 1e-9;   // allowed negative margin
};

struct BoundCheck {
  std::string name;
  double lhs;
  double rhs;
  double margin() const { return rhs - lhs; }
};

struct BoundReport {
  double tg1 = 0, tg2 = 0, tg2_trace = 0, tg_exact = 0, tcov = 0;
  double tghv_min = 0, tghv_max = 0;
  int tree_count = 0;
  int c1 = 0;
  int omega_complement = 0;
  int cover_size_cap = 0;
  double c3 = 0;        // sqrt(|S| |E|)
  double c3_vertex = 0;  // sqrt(|S| n)
  bool vertex_c3_holds = true;
  std::vector<BoundCheck> checks;
  std::vector<std::string> violations;
  /// Smallest margin among the checks.
  double min_margin() const;
};

/// Evaluates every total-variation notion on (g, N) and checks
///   T2 <= T1 <= 2 min(Tc, TG) <= c1 T1 <= c1 c3 sqrt(T2),
///   T1 <= 2 TG <= T_{G,H,v0}  for every spanning tree H and root v0.
BoundReport check_bounds(const Graph& g, const Marginals& marginals,
                         const BoundConfig& config = {});

struct BoundInstance {
  Graph graph;
  Marginals marginals;
};

/// Connected graph with 2..max_nodes nodes and Dirichlet(1,...,1)
/// marginals over 2..max_labels labels.
BoundInstance random_bound_instance(Rng& rng, int max_nodes, int max_labels);

}  // namespace distsig
