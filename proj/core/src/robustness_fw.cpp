#include "divsf/robustness_fw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "divsf/errors.hpp"
#include "divsf/random.hpp"

namespace divsf {
namespace {

void require_vertices(std::span<const Vector> vertices) {
  if (vertices.empty()) {
    throw InvalidArgument("convex hull of an empty vertex set");
  }
  for (const Vector& v : vertices) {
    if (v.size() != vertices.front().size()) {
      throw DimensionError("hull vertices differ in dimension");
    }
  }
}

double scale_of(std::span<const Vector> vertices) {
  double s = 1.0;
  for (const Vector& v : vertices) s = std::max(s, v.squaredNorm());
  return s;
}

// Affine minimum-norm point of the given vertices: minimize ||V l||^2 with
// sum(l) = 1. Returns false when the vertices are affinely dependent.
bool affine_min_norm(std::span<const Vector> vertices,
                     const std::vector<int>& support, Vector& lambda) {
  const int k = static_cast<int>(support.size());
  Matrix kkt = Matrix::Zero(k + 1, k + 1);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      kkt(i, j) = vertices[support[i]].dot(vertices[support[j]]);
    }
    kkt(i, k) = 1.0;
    kkt(k, i) = 1.0;
  }
  Eigen::FullPivLU<Matrix> lu(kkt);
  lu.setThreshold(1e-12);
  if (lu.rank() < k + 1) return false;
  Vector rhs = Vector::Zero(k + 1);
  rhs(k) = 1.0;
  lambda = lu.solve(rhs).head(k);
  return true;
}

Vector combine(std::span<const Vector> vertices, const std::vector<int>& support,
               const Vector& lambda) {
  Vector p = Vector::Zero(vertices.front().size());
  for (std::size_t i = 0; i < support.size(); ++i) {
    p += lambda(static_cast<Eigen::Index>(i)) * vertices[support[i]];
  }
  return p;
}

bool next_combination(std::vector<int>& idx, int n) {
  const int k = static_cast<int>(idx.size());
  for (int i = k - 1; i >= 0; --i) {
    if (idx[i] < n - k + i) {
      ++idx[i];
      for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

MinNormResult min_norm_point_enumerate(std::span<const Vector> vertices) {
  require_vertices(vertices);
  const int n = static_cast<int>(vertices.size());
  const int dim = static_cast<int>(vertices.front().size());
  const double tol = 1e-12 * scale_of(vertices);

  for (int k = 1; k <= std::min(n, dim + 1); ++k) {
    std::vector<int> support(k);
    std::iota(support.begin(), support.end(), 0);
    do {
      Vector lambda;
      if (!affine_min_norm(vertices, support, lambda)) continue;
      if ((lambda.array() < -1e-12).any()) continue;
      lambda = lambda.cwiseMax(0.0);
      lambda /= lambda.sum();
      const Vector p = combine(vertices, support, lambda);
      const double pp = p.squaredNorm();
      bool optimal = true;
      for (const Vector& v : vertices) {
        if (v.dot(p) < pp - tol) {
          optimal = false;
          break;
        }
      }
      if (!optimal) continue;
      MinNormResult out;
      out.point = p;
      out.coefficients = Vector::Zero(n);
      for (int i = 0; i < k; ++i) out.coefficients(support[i]) = lambda(i);
      return out;
    } while (next_combination(support, n));
  }
  // Round-off defeated every optimality check; the active-set method is
  // robust to that.
  return min_norm_point_wolfe(vertices);
}

MinNormResult min_norm_point_wolfe(std::span<const Vector> vertices) {
  require_vertices(vertices);
  const int n = static_cast<int>(vertices.size());
  const double tol = 1e-12 * scale_of(vertices);

  int first = 0;
  for (int j = 1; j < n; ++j) {
    if (vertices[j].squaredNorm() < vertices[first].squaredNorm()) first = j;
  }
  std::vector<int> support{first};
  Vector lambda = Vector::Ones(1);
  Vector x = vertices[first];

  for (int major = 0; major < 10 * n + 100; ++major) {
    int best = 0;
    double best_dot = vertices[0].dot(x);
    for (int j = 1; j < n; ++j) {
      const double dj = vertices[j].dot(x);
      if (dj < best_dot) {
        best_dot = dj;
        best = j;
      }
    }
    if (x.squaredNorm() - best_dot <= tol) break;
    if (std::find(support.begin(), support.end(), best) != support.end()) break;
    support.push_back(best);
    lambda.conservativeResize(lambda.size() + 1);
    lambda(lambda.size() - 1) = 0.0;

    for (int minor = 0; minor < n + 10; ++minor) {
      Vector alpha;
      if (!affine_min_norm(vertices, support, alpha)) {
        // Dependent support: drop the newest vertex and stop improving.
        support.pop_back();
        lambda.conservativeResize(lambda.size() - 1);
        major = std::numeric_limits<int>::max() - 1;
        break;
      }
      if ((alpha.array() > tol).all()) {
        lambda = alpha;
        break;
      }
      double theta = 1.0;
      for (Eigen::Index i = 0; i < alpha.size(); ++i) {
        if (alpha(i) <= tol && lambda(i) - alpha(i) > 0.0) {
          theta = std::min(theta, lambda(i) / (lambda(i) - alpha(i)));
        }
      }
      lambda = (1.0 - theta) * lambda + theta * alpha;
      std::vector<int> kept;
      std::vector<double> kept_lambda;
      for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda(i) > tol) {
          kept.push_back(support[i]);
          kept_lambda.push_back(lambda(i));
        }
      }
      support = kept;
      lambda = Eigen::Map<Vector>(kept_lambda.data(),
                                  static_cast<Eigen::Index>(kept_lambda.size()));
      lambda /= lambda.sum();
    }
    x = combine(vertices, support, lambda);
  }

  MinNormResult out;
  out.coefficients = Vector::Zero(n);
  for (std::size_t i = 0; i < support.size(); ++i) {
    out.coefficients(support[i]) += lambda(static_cast<Eigen::Index>(i));
  }
  out.point = combine(vertices, support, lambda);
  return out;
}

MinNormResult min_norm_point(std::span<const Vector> vertices) {
  if (vertices.size() <= kEnumerationLimit) return min_norm_point_enumerate(vertices);
  return min_norm_point_wolfe(vertices);
}

WorstCaseReward worst_case_reward(std::span<const Vector> vertices) {
  const MinNormResult mnp = min_norm_point(vertices);
  const double norm = mnp.point.norm();
  WorstCaseReward out;
  if (norm <= kDegenerateNorm) {
    out.w = Vector::Zero(mnp.point.size());
    out.degenerate = true;
  } else {
    out.w = -mnp.point / norm;
  }
  return out;
}

double smp_value(std::span<const Vector> vertices) {
  return -min_norm_point(vertices).point.norm();
}

FwState FwState::from_vertices(std::vector<Vector> vertices) {
  FwState st;
  const MinNormResult mnp = divsf::min_norm_point(vertices);
  st.vertices = std::move(vertices);
  st.coefficients = mnp.coefficients;
  st.min_norm_point = mnp.point;
  st.h = 0.5 * mnp.point.squaredNorm();
  st.smp_value = -mnp.point.norm();
  return st;
}

PolicyEntry best_response(const TabularMdp& mdp, const Vector& w) {
  const OptimalPolicy opt =
      optimal_average_policy(mdp, mdp.features().project(w));
  PolicyEntry e;
  e.psi = successor_features(mdp, opt.policy);
  e.v_e = policy_value(mdp, opt.policy, mdp.extrinsic_reward());
  e.policy = opt.policy;
  return e;
}

PolicyEntry initial_game_policy(const TabularMdp& mdp, std::uint64_t seed) {
  Rng rng(seed);
  Vector w(mdp.feature_dim());
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = standard_normal(rng);
  return best_response(mdp, w);
}

GameRun run_wcpi(const TabularMdp& mdp, const GameOptions& opts) {
  GameRun run;
  PolicyEntry next = initial_game_policy(mdp, opts.seed);
  for (int t = 1; t <= opts.max_iters; ++t) {
    run.set.add(std::move(next));
    const std::vector<Vector> sfs = run.set.sfs();
    const MinNormResult mnp = min_norm_point(sfs);
    const double norm = mnp.point.norm();
    const double value = -norm;
    run.trace.push_back(value);
    if (norm <= kDegenerateNorm) {
      run.converged = true;
      break;
    }
    const Vector w = -mnp.point / norm;
    next = best_response(mdp, w);
    if (next.psi.psi.dot(w) <= value + opts.improvement_tol) {
      run.converged = true;
      break;
    }
  }
  return run;
}

GameRun run_fcfw(const TabularMdp& mdp, const GameOptions& opts) {
  GameRun run;
  PolicyEntry next = initial_game_policy(mdp, opts.seed);
  for (int t = 1; t <= opts.max_iters; ++t) {
    run.set.add(std::move(next));
    const std::vector<Vector> sfs = run.set.sfs();
    const MinNormResult mnp = min_norm_point(sfs);
    const double h = 0.5 * mnp.point.squaredNorm();
    run.trace.push_back(h);
    if (h <= opts.epsilon) {
      run.converged = true;
      break;
    }
    const Vector direction = -mnp.point;
    next = best_response(mdp, direction);
    // Frank-Wolfe gap <psi_hat - psi_new, psi_hat>, compared on the same
    // scale as the worst-case iteration's improvement test.
    const double gap = mnp.point.squaredNorm() - next.psi.psi.dot(mnp.point);
    if (gap <= opts.improvement_tol * mnp.point.norm()) {
      run.converged = true;
      break;
    }
  }
  return run;
}

double fitted_contraction_rate(std::span<const double> h_trace, double h_star) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t t = 0; t < h_trace.size(); ++t) {
    const double gap = h_trace[t] - h_star;
    if (gap > 1e-12) {
      xs.push_back(static_cast<double>(t));
      ys.push_back(std::log(gap));
    }
  }
  if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return 1.0 - std::exp(sxy / sxx);
}

}  // namespace divsf
