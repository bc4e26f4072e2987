#include "divsf/linprog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "divsf/errors.hpp"

namespace divsf::lp {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Entries below this are treated as zero when choosing a pivot row; pivoting
// on them amplifies round-off beyond what the tableau can absorb.
constexpr double kPivotTol = 1e-9;
// A reduced cost above this (objective scaled to unit max-norm) marks a
// column whose entry would make an already-optimized objective worse.
constexpr double kFaceTol = 1e-9;

// Tableau layout: rows [0, m) are constraints, row m is the reduced-cost
// row (z_j - c_j), the last column is the right-hand side / objective.
struct Tableau {
  MatrixXd t;
  std::vector<int> basis;
  int n_cols = 0;  // structural + artificial columns

  int m() const { return static_cast<int>(basis.size()); }
  int rhs() const { return n_cols; }

  void pivot(int r, int c) {
    t.row(r) /= t(r, c);
    for (int i = 0; i <= m(); ++i) {
      if (i == r) continue;
      const double f = t(i, c);
      if (f != 0.0) t.row(i) -= f * t.row(r);
    }
    basis[r] = c;
  }

  void drop_row(int r) {
    const int rows = static_cast<int>(t.rows());
    MatrixXd next(rows - 1, t.cols());
    next << t.topRows(r), t.bottomRows(rows - r - 1);
    t = std::move(next);
    basis.erase(basis.begin() + r);
  }

  // Loads the reduced-cost row for maximizing obj over the current basis.
  void set_objective(const VectorXd& obj) {
    const int rows = m();
    t.row(rows).setZero();
    for (int j = 0; j < obj.size(); ++j) {
      double z = 0.0;
      for (int i = 0; i < rows; ++i) z += obj(basis[i]) * t(i, j);
      t(rows, j) = z - obj(j);
    }
    double value = 0.0;
    for (int i = 0; i < rows; ++i) value += obj(basis[i]) * t(i, rhs());
    t(rows, rhs()) = value;
  }

  bool is_basic(int col) const {
    return std::find(basis.begin(), basis.end(), col) != basis.end();
  }
};

// Bland's rule over the allowed columns. Returns false when unbounded.
bool iterate(Tableau& tab, const std::vector<char>& allowed, double tol) {
  const int n_allowed = static_cast<int>(allowed.size());
  const int max_pivots = 50 * (tab.n_cols + tab.m() + 10);
  for (int it = 0; it < max_pivots; ++it) {
    const int m = tab.m();
    int enter = -1;
    for (int j = 0; j < n_allowed; ++j) {
      if (allowed[j] && tab.t(m, j) < -tol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return true;

    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      const double a = tab.t(i, enter);
      if (a <= kPivotTol) continue;
      const double ratio = std::max(0.0, tab.t(i, tab.rhs())) / a;
      if (leave < 0 || ratio < best - tol ||
          (std::abs(ratio - best) <= tol && tab.basis[i] < tab.basis[leave])) {
        if (leave < 0 || ratio < best) best = ratio;
        leave = i;
      }
    }
    if (leave < 0) return false;
    tab.pivot(leave, enter);
  }
  throw InternalError("simplex exceeded its pivot budget");
}

// Removes from the allowed set every column whose entry would lower the
// objective currently loaded in the tableau.
void restrict_to_face(const Tableau& tab, std::vector<char>& allowed) {
  for (std::size_t j = 0; j < allowed.size(); ++j) {
    if (tab.t(tab.m(), static_cast<int>(j)) > kFaceTol) allowed[j] = 0;
  }
}

Solution run_simplex(const MatrixXd& A, const VectorXd& b, const VectorXd& c,
                     double tol, bool lexicographic) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  if (b.size() != m || c.size() != n) {
    throw DimensionError("lp::solve: A is " + std::to_string(m) + "x" +
                         std::to_string(n) + " but b has " +
                         std::to_string(b.size()) + " and c has " +
                         std::to_string(c.size()) + " entries");
  }

  MatrixXd a_norm = A;
  VectorXd b_norm = b;
  for (int i = 0; i < m; ++i) {
    if (b_norm(i) < 0) {
      a_norm.row(i) *= -1.0;
      b_norm(i) *= -1.0;
    }
  }

  Tableau tab;
  tab.n_cols = n + m;
  tab.t = MatrixXd::Zero(m + 1, n + m + 1);
  tab.t.topLeftCorner(m, n) = a_norm;
  tab.t.block(0, n, m, m).setIdentity();
  tab.t.topRightCorner(m, 1) = b_norm;
  tab.basis.resize(m);
  for (int i = 0; i < m; ++i) tab.basis[i] = n + i;

  // Phase one: maximize -sum(artificials).
  for (int j = 0; j < n; ++j) tab.t(m, j) = -a_norm.col(j).sum();
  tab.t(m, tab.rhs()) = -b_norm.sum();
  iterate(tab, std::vector<char>(tab.n_cols, 1), tol);

  Solution out;
  const double scale_b = std::max(1.0, b_norm.lpNorm<Eigen::Infinity>());
  if (tab.t(tab.m(), tab.rhs()) < -1e-9 * scale_b) {
    out.status = Status::kInfeasible;
    return out;
  }

  // Drive remaining artificials out of the basis; drop redundant rows.
  std::vector<int> kept_rows(m);
  for (int i = 0; i < m; ++i) kept_rows[i] = i;
  for (int i = tab.m() - 1; i >= 0; --i) {
    if (tab.basis[i] < n) continue;
    int col = -1;
    for (int j = 0; j < n; ++j) {
      if (std::abs(tab.t(i, j)) > kPivotTol) {
        col = j;
        break;
      }
    }
    if (col >= 0) {
      tab.pivot(i, col);
    } else {
      const int original_row = tab.basis[i] - n;
      tab.drop_row(i);
      kept_rows.erase(
          std::find(kept_rows.begin(), kept_rows.end(), original_row));
    }
  }

  // Phase two on the structural columns. The objective is scaled to unit
  // max-norm so that the pivot sequence is invariant under positive scaling.
  const double c_scale = c.lpNorm<Eigen::Infinity>();
  const VectorXd c_unit = c_scale > 0 ? VectorXd(c / c_scale) : c;
  VectorXd full_c = VectorXd::Zero(tab.n_cols);
  full_c.head(n) = c_unit;
  tab.set_objective(full_c);
  std::vector<char> allowed(n, 1);
  if (!iterate(tab, allowed, tol)) {
    out.status = Status::kUnbounded;
    return out;
  }

  if (lexicographic) {
    // Lexicographic simplex: minimize x_0, x_1, ... in turn, each time
    // forbidding columns that would undo an earlier objective.
    restrict_to_face(tab, allowed);
    VectorXd unit = VectorXd::Zero(tab.n_cols);
    for (int j = 0; j < n; ++j) {
      if (!allowed[j]) continue;
      if (tab.is_basic(j)) {
        unit(j) = -1.0;
        tab.set_objective(unit);
        unit(j) = 0.0;
        iterate(tab, allowed, tol);  // bounded below by x_j >= 0
        restrict_to_face(tab, allowed);
      }
      if (!tab.is_basic(j)) allowed[j] = 0;
    }
  }

  // Recompute the basic solution from the untouched data.
  const int rows = tab.m();
  MatrixXd basis_matrix(rows, rows);
  VectorXd rhs(rows);
  for (int i = 0; i < rows; ++i) {
    rhs(i) = b_norm(kept_rows[i]);
    for (int k = 0; k < rows; ++k) {
      basis_matrix(i, k) = a_norm(kept_rows[i], tab.basis[k]);
    }
  }
  const Eigen::PartialPivLU<MatrixXd> lu = basis_matrix.partialPivLu();
  const VectorXd xb = lu.solve(rhs);
  out.x = VectorXd::Zero(n);
  for (int k = 0; k < rows; ++k) out.x(tab.basis[k]) = std::max(0.0, xb(k));
  out.objective = c.dot(out.x);

  // Duals y solve B^T y = c_B; reduced costs follow on the kept rows.
  VectorXd c_basis(rows);
  for (int k = 0; k < rows; ++k) c_basis(k) = c(tab.basis[k]);
  const VectorXd y = lu.transpose().solve(c_basis);
  out.reduced_costs = c;
  for (int i = 0; i < rows; ++i) {
    out.reduced_costs -= y(i) * a_norm.row(kept_rows[i]).transpose();
  }
  out.status = Status::kOptimal;
  return out;
}

}  // namespace

Solution solve(const MatrixXd& A, const VectorXd& b, const VectorXd& c,
               double tol) {
  return run_simplex(A, b, c, tol, false);
}

Solution solve_lexicographic(const MatrixXd& A, const VectorXd& b,
                             const VectorXd& c, double tol) {
  return run_simplex(A, b, c, tol, true);
}

}  // namespace divsf::lp
