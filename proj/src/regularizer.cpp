#include "distsig/regularizer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "distsig/error.hpp"

namespace distsig {

namespace {

void check_rows(const Eigen::Ref<const Eigen::MatrixXd>& x, int n, const char* what) {
  if (x.rows() != n)
    throw DimensionError(std::string(what) + ": " + std::to_string(x.rows()) +
                         " rows for " + std::to_string(n) + " nodes");
}

}  // namespace

ProbMatrix::ProbMatrix(Eigen::MatrixXd x) : x_(std::move(x)) {
  if (x_.cols() == 0) throw InvalidArgument("probability matrix has no columns");
  if (!x_.allFinite()) throw InvalidArgument("probability matrix has non-finite entries");
  if (x_.size() > 0 && (x_.minCoeff() < 0.0 || x_.maxCoeff() > 1.0))
    throw InvalidArgument("probability matrix entry outside [0,1]");
  for (Eigen::Index i = 0; i < x_.rows(); ++i)
    if (std::abs(x_.row(i).sum() - 1.0) > kRowSumTolerance)
      throw InvalidArgument("probability matrix row " + std::to_string(i) +
                            " does not sum to 1");
}

WeightDiag::WeightDiag(Eigen::VectorXd a) : a_(std::move(a)) {
  if (!a_.allFinite()) throw InvalidArgument("weight diagonal has non-finite entries");
  for (Eigen::Index i = 0; i < a_.size(); ++i)
    if (a_[i] > 0.0)
      throw InvalidArgument("weight diagonal entry " + std::to_string(i) + " is positive");
}

WeightDiag default_weight_diag(const Graph& g, int* clamped) {
  Eigen::VectorXd a = Eigen::VectorXd::Ones(g.num_nodes()) - g.degrees();
  int isolated = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a[i] > 0.0) {
      a[i] = 0.0;
      ++isolated;
    }
  if (clamped) *clamped = isolated;
  return WeightDiag(std::move(a));
}

ProbMatrix softmax_rows(const Eigen::Ref<const Eigen::MatrixXd>& logits) {
  if (logits.hasNaN()) throw NumericError("softmax_rows: NaN input");
  if (!logits.allFinite()) throw NumericError("softmax_rows: infinite input");
  Eigen::MatrixXd x(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double peak = logits.row(i).maxCoeff();
    x.row(i) = (logits.row(i).array() - peak).exp().matrix();
    x.row(i) /= x.row(i).sum();
  }
  return ProbMatrix(std::move(x));
}

Eigen::MatrixXd softmax_rows_backward(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                      const Eigen::Ref<const Eigen::MatrixXd>& grad_x) {
  if (x.rows() != grad_x.rows() || x.cols() != grad_x.cols())
    throw DimensionError("softmax_rows_backward: shape mismatch");
  const Eigen::VectorXd inner = (grad_x.array() * x.array()).rowwise().sum();
  return (x.array() * (grad_x.colwise() - inner).array()).matrix();
}

Eigen::SparseMatrix<double> loss0_matrix(const Graph& g, const WeightDiag& d) {
  if (d.size() != g.num_nodes())
    throw DimensionError("weight diagonal size does not match graph");
  Eigen::SparseMatrix<double> m = sparse_laplacian(g);
  for (int i = 0; i < g.num_nodes(); ++i) m.coeffRef(i, i) += d.values()[i];
  m.prune(0.0);
  return m;
}

LossComponents loss_components(const Eigen::Ref<const Eigen::MatrixXd>& x, const Graph& g,
                               const WeightDiag& d) {
  check_rows(x, g.num_nodes(), "loss_components");
  if (d.size() != g.num_nodes())
    throw DimensionError("loss_components: weight diagonal size does not match graph");
  LossComponents out{};
  for (auto [u, v] : g.edges()) out.l1 += (x.row(u) - x.row(v)).squaredNorm();
  out.l2 = d.values().dot(x.rowwise().squaredNorm());
  const Eigen::MatrixXd mx = loss0_matrix(g, d) * x;
  out.l0 = (x.array() * mx.array()).sum();
  return out;
}

Eigen::MatrixXd grad_loss0(const Eigen::Ref<const Eigen::MatrixXd>& x, const Graph& g,
                           const WeightDiag& d) {
  check_rows(x, g.num_nodes(), "grad_loss0");
  return 2.0 * (loss0_matrix(g, d) * x);
}

Eigen::MatrixXd grad_loss1(const Eigen::Ref<const Eigen::MatrixXd>& x, const Graph& g) {
  check_rows(x, g.num_nodes(), "grad_loss1");
  return 2.0 * (sparse_laplacian(g) * x);
}

Eigen::MatrixXd grad_loss2(const Eigen::Ref<const Eigen::MatrixXd>& x, const WeightDiag& d) {
  check_rows(x, d.size(), "grad_loss2");
  return 2.0 * (d.values().asDiagonal() * x);
}

double NonuniformityBound::margin() const {
  return std::min({lhs() - rhs, trace - trace_onehot, trace_uniform - trace});
}

NonuniformityBound nonuniformity_bound_check(const Eigen::Ref<const Eigen::MatrixXd>& x, const WeightDiag& d) {
  check_rows(x, d.size(), "nonuniformity_bound_check");
  const double m = static_cast<double>(x.cols());
  const Eigen::VectorXd& a = d.values();
  NonuniformityBound r{};
  r.trace = a.dot(x.rowwise().squaredNorm());
  r.constant = -d.trace() / m;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double w_sq = 0.5 * (x.row(i).array() - 1.0 / m).abs().sum();
    r.rhs += 2.0 * a[i] * w_sq;
  }
  r.trace_onehot = d.trace();
  r.trace_uniform = d.trace() / m;
  return r;
}

NonuniformityCounts nonuniformity_counts(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                         double eps1, double eps2) {
  if (!(eps1 > 0 && eps1 < 1 && eps2 > 0 && eps2 < 1))
    throw InvalidArgument("nonuniformity thresholds must lie in (0,1)");
  const double center = 1.0 / static_cast<double>(x.cols());
  NonuniformityCounts c{0, 0, static_cast<long>(x.size())};
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double v = x(i, j);
      if (v >= center - eps1 && v <= center + eps1) ++c.near_uniform;
      if (v >= 1.0 - eps2 && v <= 1.0) ++c.near_one;
    }
  return c;
}

std::vector<NonuniformityRow> nonuniformity_sweep(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                                  const std::string& model_tag,
                                                  const std::vector<double>& epsilons) {
  std::vector<NonuniformityRow> rows;
  for (double eps : epsilons) {
    const auto c = nonuniformity_counts(x, eps, eps);
    rows.push_back({eps, "uniform", c.near_uniform, model_tag});
    rows.push_back({eps, "onehot", c.near_one, model_tag});
  }
  return rows;
}

void write_nonuniformity_csv(std::ostream& out, const std::vector<NonuniformityRow>& rows) {
  out << "epsilon,kind,count,model_tag\n";
  for (const auto& r : rows)
    out << r.epsilon << ',' << r.kind << ',' << r.count << ',' << r.model_tag << '\n';
}

}  // namespace distsig
