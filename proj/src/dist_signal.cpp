#include "distsig/dist_signal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "distsig/error.hpp"
#include "distsig/lp.hpp"

namespace distsig {

namespace {

void check_same_alphabet(const DiscreteDistribution& mu, const DiscreteDistribution& nu) {
  if (mu.size() != nu.size())
    throw DimensionError("alphabet mismatch: " + std::to_string(mu.size()) + " vs " +
                         std::to_string(nu.size()));
}

void check_marginals(const Graph& g, const Marginals& marginals) {
  if (marginals.num_nodes() != g.num_nodes())
    throw DimensionError("marginal count " + std::to_string(marginals.num_nodes()) +
                         " does not match graph size " + std::to_string(g.num_nodes()));
}

}  // namespace

// ---------------------------------------------------------------------------
// Types

DiscreteDistribution::DiscreteDistribution(Eigen::VectorXd weights) : w_(std::move(weights)) {
  if (w_.size() == 0) throw InvalidArgument("empty distribution");
  if (!w_.allFinite()) throw InvalidArgument("distribution has non-finite weights");
  if (w_.minCoeff() < 0.0) throw InvalidArgument("distribution has negative weights");
  if (std::abs(w_.sum() - 1.0) > kProbabilityTolerance)
    throw InvalidArgument("distribution weights sum to " + std::to_string(w_.sum()));
}

DiscreteDistribution DiscreteDistribution::uniform(int m) {
  return DiscreteDistribution(Eigen::VectorXd::Constant(m, 1.0 / m));
}

DiscreteDistribution DiscreteDistribution::delta(int m, int label) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  w[label] = 1.0;
  return DiscreteDistribution(std::move(w));
}

Marginals::Marginals(Eigen::MatrixXd rows) : x_(std::move(rows)) {
  if (x_.cols() == 0) throw InvalidArgument("marginals need at least one label");
  for (Eigen::Index i = 0; i < x_.rows(); ++i) {
    const auto r = x_.row(i);
    if (!r.allFinite() || r.minCoeff() < 0.0 ||
        std::abs(r.sum() - 1.0) > kProbabilityTolerance)
      throw InvalidArgument("row " + std::to_string(i) + " is not a probability vector");
  }
}

double Coupling::marginal_error() const {
  const double rows = (plan.rowwise().sum() - source.weights()).cwiseAbs().maxCoeff();
  const double cols =
      (plan.colwise().sum().transpose() - target.weights()).cwiseAbs().maxCoeff();
  return std::max(rows, cols);
}

JointDistribution::JointDistribution(int num_nodes, int num_labels, Eigen::VectorXd weights)
    : n_(num_nodes), m_(num_labels), w_(std::move(weights)) {
  const double states = std::pow(static_cast<double>(m_), n_);
  if (static_cast<double>(w_.size()) != states)
    throw DimensionError("joint table size does not equal m^n");
  if (w_.size() && (w_.minCoeff() < -kProbabilityTolerance ||
                    std::abs(w_.sum() - 1.0) > kProbabilityTolerance))
    throw InvalidArgument("joint weights are not a probability table");
}

int JointDistribution::label_at(std::int64_t index, int node) const {
  for (int k = 0; k < node; ++k) index /= m_;
  return static_cast<int>(index % m_);
}

Eigen::VectorXd JointDistribution::marginal(int node) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m_);
  for (Eigen::Index x = 0; x < w_.size(); ++x) out[label_at(x, node)] += w_[x];
  return out;
}

double JointDistribution::expected_total_variation(const Graph& g) const {
  double total = 0.0;
  for (Eigen::Index x = 0; x < w_.size(); ++x) {
    int mismatches = 0;
    for (auto [u, v] : g.edges()) mismatches += label_at(x, u) != label_at(x, v);
    total += w_[x] * mismatches;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Wasserstein on the discrete metric

double wasserstein_sq(const DiscreteDistribution& mu, const DiscreteDistribution& nu) {
  check_same_alphabet(mu, nu);
  return 0.5 * (mu.weights() - nu.weights()).cwiseAbs().sum();
}

Coupling optimal_coupling(const DiscreteDistribution& mu, const DiscreteDistribution& nu) {
  check_same_alphabet(mu, nu);
  const int m = mu.size();
  Eigen::MatrixXd plan = Eigen::MatrixXd::Zero(m, m);
  // Keep min(mu, nu) in place; after that each label is either a pure
  // source of surplus or a pure sink, and surplus is routed greedily.
  Eigen::VectorXd surplus(m), deficit(m);
  for (int s = 0; s < m; ++s) {
    const double stay = std::min(mu[s], nu[s]);
    plan(s, s) = stay;
    surplus[s] = mu[s] - stay;
    deficit[s] = nu[s] - stay;
  }
  int sink = 0;
  for (int src = 0; src < m; ++src) {
    double left = surplus[src];
    while (left > 0.0 && sink < m) {
      if (deficit[sink] <= 0.0) {
        ++sink;
        continue;
      }
      const double moved = std::min(left, deficit[sink]);
      plan(src, sink) += moved;
      left -= moved;
      deficit[sink] -= moved;
      if (deficit[sink] <= 0.0) ++sink;
    }
  }
  return Coupling{std::move(plan), mu, nu};
}

double coupling_lp_oracle(const DiscreteDistribution& mu, const DiscreteDistribution& nu) {
  check_same_alphabet(mu, nu);
  const int m = mu.size();
  if (m > kCouplingOracleMaxLabels)
    throw LimitError("alphabet too large for oracle", static_cast<std::uint64_t>(m));
  // Variable gamma(i, j) at column i*m + j.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * m, m * m);
  Eigen::VectorXd b(2 * m);
  Eigen::VectorXd c(m * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      a(i, i * m + j) = 1.0;
      a(m + j, i * m + j) = 1.0;
      c[i * m + j] = i == j ? 0.0 : 1.0;
    }
  b.head(m) = mu.weights();
  b.tail(m) = nu.weights();
  return solve_lp(a, b, c).objective;
}

// ---------------------------------------------------------------------------
// Total variations

TvL1L2 tv_l1_l2(const Graph& g, const Marginals& marginals) {
  check_marginals(g, marginals);
  const auto& x = marginals.matrix();
  TvL1L2 out{0.0, 0.0};
  for (auto [u, v] : g.edges()) {
    const Eigen::RowVectorXd d = x.row(u) - x.row(v);
    out.l1 += d.cwiseAbs().sum();
    out.l2 += d.squaredNorm();
  }
  return out;
}

double tv_l2_trace(const Graph& g, const Marginals& marginals) {
  check_marginals(g, marginals);
  const auto& x = marginals.matrix();
  return (x.transpose() * laplacian(g) * x).trace();
}

ExactTv tv_exact(const Graph& g, const Marginals& marginals, std::int64_t state_cap) {
  check_marginals(g, marginals);
  const int n = g.num_nodes();
  const int m = marginals.num_labels();
  const double states_d = std::pow(static_cast<double>(m), n);
  if (states_d > static_cast<double>(state_cap))
    throw LimitError("state space too large: " + std::to_string(m) + "^" +
                         std::to_string(n) + " exceeds cap " + std::to_string(state_cap),
                     static_cast<std::uint64_t>(std::min(states_d, 1.8e19)));
  const auto states = static_cast<Eigen::Index>(states_d);

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n) * m, states);
  Eigen::VectorXd b(static_cast<Eigen::Index>(n) * m);
  Eigen::VectorXd c(states);
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < m; ++s) b[i * m + s] = marginals.weight(i, s);
  std::vector<int> labels(n);
  for (Eigen::Index x = 0; x < states; ++x) {
    Eigen::Index rest = x;
    for (int i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(rest % m);
      rest /= m;
      a(i * m + labels[i], x) = 1.0;
    }
    int mismatches = 0;
    for (auto [u, v] : g.edges()) mismatches += labels[u] != labels[v];
    c[x] = mismatches;
  }
  LpSolution sol;
  try {
    sol = solve_lp(a, b, c);
  } catch (const NumericError& e) {
    throw NumericError(std::string("tv_exact: internal LP failure: ") + e.what());
  }
  Eigen::VectorXd w = sol.x;
  if (w.sum() > 0) w /= w.sum();
  return ExactTv{sol.objective, JointDistribution(n, m, std::move(w))};
}

double tv_tree_rooted(const Graph& g, const SpanningTree& h, int root,
                      const Marginals& marginals) {
  check_marginals(g, marginals);
  const int n = g.num_nodes();
  if (h.num_nodes() != n) throw InvalidArgument("tree/graph mismatch: node counts differ");
  for (auto [u, v] : h.edges())
    if (!g.has_edge(u, v)) throw InvalidArgument("tree/graph mismatch: tree edge not in graph");
  if (root < 0 || root >= n) throw InvalidArgument("root out of range");

  const SpanningTree t = h.root() == root ? h : h.rooted_at(root);
  const auto& parent = t.parent();
  const int m = marginals.num_labels();
  const auto& x = marginals.matrix();

  auto rho_step = [&](int from, int to, int s) {
    const double a = x(from, s), b = x(to, s);
    return (b <= a && a > 0.0) ? b / a : 1.0;
  };
  // rho along the downward tree path from `top` to `node`.
  auto rho_path = [&](int top, int node, int s) {
    double r = 1.0;
    for (int v = node; v != top; v = parent[v]) r *= rho_step(parent[v], v, s);
    return r;
  };

  double total = 0.0;
  for (auto [i, j] : g.edges()) {
    const int k = t.meet(i, j);
    for (int s = 0; s < m; ++s)
      total += x(i, s) + x(j, s) - 2.0 * x(k, s) * rho_path(k, i, s) * rho_path(k, j, s);
  }
  return total;
}

CoverTv tv_cover(const Graph& g, const Marginals& marginals, int size_cap,
                 std::uint64_t tree_cap) {
  check_marginals(g, marginals);
  std::vector<SpanningTree> trees;
  try {
    trees = enumerate_spanning_trees(g, tree_cap);
  } catch (const LimitError& e) {
    throw LimitError(std::string("enumeration infeasible: ") + e.what(), e.count());
  }
  const auto& x = marginals.matrix();
  std::vector<double> costs;
  costs.reserve(trees.size());
  for (const auto& t : trees) {
    double l1 = 0.0;
    for (auto [u, v] : t.edges()) l1 += (x.row(u) - x.row(v)).cwiseAbs().sum();
    costs.push_back(0.5 * l1);
  }
  auto found = cheapest_tree_cover(g, trees, costs, size_cap);
  if (!found) throw LimitError("no cover within cap " + std::to_string(size_cap));
  CoverTv out{found->cost, {}, size_cap};
  for (int t : found->tree_indices) out.cover.trees.push_back(trees[t]);
  return out;
}

// ---------------------------------------------------------------------------
// Bounds

double BoundReport::min_margin() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& c : checks) m = std::min(m, c.margin());
  return m;
}

BoundReport check_bounds(const Graph& g, const Marginals& marginals,
                         const BoundConfig& config) {
  check_marginals(g, marginals);
  BoundReport r;
  const auto l12 = tv_l1_l2(g, marginals);
  r.tg1 = l12.l1;
  r.tg2 = l12.l2;
  r.tg2_trace = tv_l2_trace(g, marginals);
  r.tg_exact = tv_exact(g, marginals, config.state_cap).value;

  const auto clique = clique_number_complement(g);
  r.c1 = clique.c1;
  r.omega_complement = clique.omega_complement;
  const int m = marginals.num_labels();
  r.c3 = std::sqrt(static_cast<double>(m) * g.num_edges());
  r.c3_vertex = std::sqrt(static_cast<double>(m) * g.num_nodes());

  r.cover_size_cap = config.cover_size_cap > 0 ? config.cover_size_cap : std::max(r.c1, 3);
  r.tcov = tv_cover(g, marginals, r.cover_size_cap, config.tree_cap).value;

  const auto trees = enumerate_spanning_trees(g, config.tree_cap);
  r.tree_count = static_cast<int>(trees.size());
  r.tghv_min = std::numeric_limits<double>::infinity();
  r.tghv_max = -std::numeric_limits<double>::infinity();
  for (const auto& h : trees)
    for (int v0 = 0; v0 < g.num_nodes(); ++v0) {
      const double value = tv_tree_rooted(g, h.rooted_at(v0), v0, marginals);
      r.tghv_min = std::min(r.tghv_min, value);
      r.tghv_max = std::max(r.tghv_max, value);
    }

  const double two_min = 2.0 * std::min(r.tcov, r.tg_exact);
  const double sqrt_t2 = std::sqrt(std::max(0.0, r.tg2));
  r.checks = {
      {"T2 <= T1", r.tg2, r.tg1},
      {"T1 <= 2 min(Tc, TG)", r.tg1, two_min},
      {"2 min(Tc, TG) <= c1 T1", two_min, r.c1 * r.tg1},
      {"c1 T1 <= c1 c3 sqrt(T2)", r.c1 * r.tg1, r.c1 * r.c3 * sqrt_t2},
      {"T1 <= c3 sqrt(T2)", r.tg1, r.c3 * sqrt_t2},
      {"T1 <= 2 TG", r.tg1, 2.0 * r.tg_exact},
      {"2 TG <= min T_{G,H,v0}", 2.0 * r.tg_exact, r.tghv_min},
  };
  for (const auto& c : r.checks)
    if (c.margin() < -config.tolerance) r.violations.push_back(c.name);
  r.vertex_c3_holds = r.tg1 <= r.c3_vertex * sqrt_t2 + config.tolerance;
  return r;
}

BoundInstance random_bound_instance(Rng& rng, int max_nodes, int max_labels) {
  if (max_nodes < 2 || max_labels < 2)
    throw InvalidArgument("random instances need at least 2 nodes and 2 labels");
  const int n = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_nodes - 1)));
  const int m = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_labels - 1)));
  Graph g = random_connected_graph(n, 0.5, rng.next());
  Eigen::MatrixXd x(n, m);
  for (int i = 0; i < n; ++i) x.row(i) = rng.dirichlet_flat(m).transpose();
  return BoundInstance{std::move(g), Marginals(std::move(x))};
}

}  // namespace distsig
