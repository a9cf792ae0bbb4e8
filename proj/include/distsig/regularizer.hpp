#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "distsig/graph.hpp"

namespace distsig {

inline constexpr double kRowSumTolerance = 1e-7;

/// Row-stochastic n x m matrix X, one label distribution per node.
class ProbMatrix {
 public:
  explicit ProbMatrix(Eigen::MatrixXd x);

  int rows() const { return static_cast<int>(x_.rows()); }
  int cols() const { return static_cast<int>(x_.cols()); }
  const Eigen::MatrixXd& matrix() const { return x_; }
  operator const Eigen::MatrixXd&() const { return x_; }

 private:
  Eigen::MatrixXd x_;
};

/// Nonpositive diagonal weights a_i forming D.
class WeightDiag {
 public:
  explicit WeightDiag(Eigen::VectorXd a);

  int size() const { return static_cast<int>(a_.size()); }
  const Eigen::VectorXd& values() const { return a_; }
  double trace() const { return a_.sum(); }

 private:
  Eigen::VectorXd a_;
};

/// D = I - D_G, with isolated nodes clamped to 0. `clamped` receives the
/// number of clamped nodes.
WeightDiag default_weight_diag(const Graph& g, int* clamped = nullptr);

/// Row-wise softmax with row-max subtraction.
ProbMatrix softmax_rows(const Eigen::Ref<const Eigen::MatrixXd>& logits);

/// Backward pass of softmax_rows: maps dL/dX to dL/dO given X.
Eigen::MatrixXd softmax_rows_backward(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                      const Eigen::Ref<const Eigen::MatrixXd>& grad_x);

struct LossComponents {
  double l1;  // Tr(X^T L X)
  double l2;  // Tr(X^T D X)
  double l0;  // Tr(X^T (D_G - A + D) X)
};

/// Sparse M = D_G - A + D.
Eigen::SparseMatrix<double> loss0_matrix(const Graph& g, const WeightDiag& d);

/// The three traces. l0 is evaluated through M, independently of l1 and l2.
LossComponents loss_components(const Eigen::Ref<const Eigen::MatrixXd>& x, const Graph& g,
                               const WeightDiag& d);

Eigen::MatrixXd grad_loss0(const Eigen::Ref<const Eigen::MatrixXd>& x, const Graph& g,
                           const WeightDiag& d);
Eigen::MatrixXd grad_loss1(const Eigen::Ref<const Eigen::MatrixXd>& x, const Graph& g);
Eigen::MatrixXd grad_loss2(const Eigen::Ref<const Eigen::MatrixXd>& x, const WeightDiag& d);

struct NonuniformityBound {
  double trace;          // Tr(X^T D X)
  double constant;       // C = -Tr(D) / m
  double rhs;            // 2 sum_i a_i W(mu_i, U(S))^2
  double trace_onehot;   // Tr(X_o^T D X_o) = sum_i a_i
  double trace_uniform;  // Tr(X_u^T D X_u) = sum_i a_i / m

  double lhs() const { return trace + constant; }
  /// Smallest slack among the inequality and both sides of the sandwich.
  double margin() const;
};

NonuniformityBound nonuniformity_bound_check(const Eigen::Ref<const Eigen::MatrixXd>& x, const WeightDiag& d);

struct NonuniformityCounts {
  long near_uniform;  // entries within eps1 of 1/m
  long near_one;      // entries in [1 - eps2, 1]
  long total;
};

NonuniformityCounts nonuniformity_counts(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                         double eps1, double eps2);

inline const std::vector<double> kNonuniformityEpsilons = {0.005, 0.01, 0.02, 0.05};

struct NonuniformityRow {
  double epsilon;
  std::string kind;  // "uniform" or "onehot"
  long count;
  std::string model_tag;
};

/// Both counts for every epsilon in `epsilons` (eps1 = eps2 = epsilon).
std::vector<NonuniformityRow> nonuniformity_sweep(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                                  const std::string& model_tag,
                                                  const std::vector<double>& epsilons =
                                                      kNonuniformityEpsilons);

/// CSV with header "epsilon,kind,count,model_tag".
void write_nonuniformity_csv(std::ostream& out, const std::vector<NonuniformityRow>& rows);

}  // namespace distsig
