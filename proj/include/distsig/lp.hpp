#pragma once

#include <Eigen/Core>

namespace distsig {

struct LpOptions {
  double pivot_tolerance = 1e-12;
  double feasibility_tolerance = 1e-9;
  int max_iterations = 100000;
};

struct LpSolution {
  double objective = 0.0;
  Eigen::VectorXd x;
  int iterations = 0;
};

/// Dense two-phase primal simplex with Bland's rule for
///   minimize c^T x  subject to  A x = b,  x >= 0.
/// Redundant equality rows are detected after phase I and dropped.
/// Throws NumericError when the problem is infeasible, unbounded or the
/// iteration cap is hit.
LpSolution solve_lp(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                    const Eigen::VectorXd& c, const LpOptions& opt = {});

}  // namespace distsig
