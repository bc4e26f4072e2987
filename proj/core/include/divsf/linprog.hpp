#pragma once

#include <Eigen/Dense>

namespace divsf::lp {

enum class Status { kOptimal, kInfeasible, kUnbounded };

struct Solution {
  Status status = Status::kInfeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  /// Reduced costs c_j - y.A_j at the optimum (all <= 0 up to round-off);
  /// empty unless status is kOptimal.
  Eigen::VectorXd reduced_costs;
};

/// Dense two-phase primal simplex for
///
///     maximize c.x  subject to  A x = b,  x >= 0.
///
/// Pivoting follows Bland's rule (smallest eligible column enters, ties in
/// the ratio test leave by smallest basic index), so the returned vertex is
/// a deterministic function of (A, b, c) and of c only up to positive
/// scaling. Redundant equality rows are detected after phase one and
/// dropped. The final basic solution is recomputed from the original data
/// with an LU solve.
Solution solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
               const Eigen::VectorXd& c, double tol = 1e-11);

/// As solve(), but among all optimal solutions returns the lexicographically
/// smallest x (x_0 minimized first, then x_1, ...). The optimal face is
/// identified from the reduced costs, so the answer depends on c only up to
/// positive scaling.
Solution solve_lexicographic(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                             const Eigen::VectorXd& c, double tol = 1e-11);

}  // namespace divsf::lp
