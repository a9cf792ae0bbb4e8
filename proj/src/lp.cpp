#include "distsig/lp.hpp"

#include <limits>
#include <vector>

#include "distsig/error.hpp"

namespace distsig {

namespace {

// Tableau layout: rows 0..m-1 are constraints, row m is the reduced-cost
// row; columns 0..cols-2 are variables, the last column is the rhs.
class Tableau {
 public:
  Tableau(Eigen::MatrixXd t, std::vector<int> basis, const LpOptions& opt)
      : t_(std::move(t)), basis_(std::move(basis)), opt_(opt) {}

  int rows() const { return static_cast<int>(t_.rows()) - 1; }
  int rhs_col() const { return static_cast<int>(t_.cols()) - 1; }
  Eigen::MatrixXd& data() { return t_; }
  std::vector<int>& basis() { return basis_; }
  int iterations() const { return iterations_; }

  void set_costs(const Eigen::VectorXd& cost) {
    const int m = rows();
    t_.row(m).setZero();
    t_.row(m).head(cost.size()) = cost.transpose();
    for (int i = 0; i < m; ++i) {
      const double cb = cost[basis_[i]];
      if (cb != 0.0) t_.row(m) -= cb * t_.row(i);
    }
  }

  void pivot(int r, int col) {
    t_.row(r) /= t_(r, col);
    for (int i = 0; i < t_.rows(); ++i) {
      if (i == r) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    t_.col(col).setZero();
    t_(r, col) = 1.0;
    basis_[r] = col;
    ++iterations_;
  }

  // Bland's rule: lowest-index improving column, ties in the ratio test
  // broken by lowest basic variable index. Columns >= allowed_cols never
  // enter.
  void optimize(int allowed_cols) {
    const int m = rows();
    const int rhs = rhs_col();
    for (;;) {
      if (iterations_ > opt_.max_iterations)
        throw NumericError("simplex: iteration cap reached");
      int enter = -1;
      for (int j = 0; j < allowed_cols; ++j)
        if (t_(m, j) < -opt_.pivot_tolerance) {
          enter = j;
          break;
        }
      if (enter < 0) return;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        const double a = t_(i, enter);
        if (a <= opt_.pivot_tolerance) continue;
        const double ratio = std::max(0.0, t_(i, rhs)) / a;
        if (leave < 0 || ratio < best - 1e-15) {
          best = ratio;
          leave = i;
        } else if (ratio <= best + 1e-15 && basis_[i] < basis_[leave]) {
          best = std::min(best, ratio);
          leave = i;
        }
      }
      if (leave < 0) throw NumericError("simplex: problem unbounded");
      pivot(leave, enter);
    }
  }

  void drop_row(int r) {
    const Eigen::Index n = t_.rows();
    t_.block(r, 0, n - 1 - r, t_.cols()) = t_.block(r + 1, 0, n - 1 - r, t_.cols()).eval();
    t_.conservativeResize(n - 1, Eigen::NoChange);
    basis_.erase(basis_.begin() + r);
  }

 private:
  Eigen::MatrixXd t_;
  std::vector<int> basis_;
  LpOptions opt_;
  int iterations_ = 0;
};

}  // namespace

LpSolution solve_lp(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                    const Eigen::VectorXd& c, const LpOptions& opt) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  if (b.size() != m || c.size() != n) throw DimensionError("solve_lp: shape mismatch");

  // Phase I: artificial variable per row, rows flipped so b >= 0.
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) {
    const double sign = b[i] < 0 ? -1.0 : 1.0;
    t.row(i).head(n) = sign * a.row(i);
    t(i, n + i) = 1.0;
    t(i, n + m) = sign * b[i];
    basis[i] = n + i;
  }
  Tableau tab(std::move(t), std::move(basis), opt);
  Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(n + m);
  phase1_cost.tail(m).setOnes();
  tab.set_costs(phase1_cost);
  tab.optimize(n + m);

  const double infeasibility = -tab.data()(tab.rows(), tab.rhs_col());
  if (infeasibility > opt.feasibility_tolerance)
    throw NumericError("simplex: infeasible (phase I residual " +
                       std::to_string(infeasibility) + ")");

  // Drive remaining artificials out of the basis; rows where that is
  // impossible are linearly dependent and can be dropped.
  for (int r = tab.rows() - 1; r >= 0; --r) {
    if (tab.basis()[r] < n) continue;
    int col = -1;
    for (int j = 0; j < n; ++j)
      if (std::abs(tab.data()(r, j)) > 1e-9) {
        col = j;
        break;
      }
    if (col >= 0)
      tab.pivot(r, col);
    else
      tab.drop_row(r);
  }

  Eigen::VectorXd phase2_cost = Eigen::VectorXd::Zero(n + m);
  phase2_cost.head(n) = c;
  tab.set_costs(phase2_cost);
  tab.optimize(n);

  LpSolution sol;
  sol.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < tab.rows(); ++i)
    sol.x[tab.basis()[i]] = std::max(0.0, tab.data()(i, tab.rhs_col()));
  sol.objective = c.dot(sol.x);
  sol.iterations = tab.iterations();
  return sol;
}

}  // namespace distsig
