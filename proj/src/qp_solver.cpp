#include "jetflight/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "jetflight/errors.hpp"

namespace jetflight {

namespace {

constexpr double kMultiplierTolerance = 1e-11;

// Solves the equality-constrained subproblem for the free coordinates with
// every working-set coordinate pinned to its bound.
VecX solve_free(const MatX& h, const VecX& g, const VecX& u, const std::vector<Activity>& working) {
  const int n = static_cast<int>(g.size());
  std::vector<int> free_idx;
  for (int i = 0; i < n; ++i)
    if (working[i] == Activity::kFree) free_idx.push_back(i);
  VecX x = u;
  if (free_idx.empty()) return x;
  const int nf = static_cast<int>(free_idx.size());
  MatX hff(nf, nf);
  VecX rhs(nf);
  for (int a = 0; a < nf; ++a) {
    double r = -g[free_idx[a]];
    for (int j = 0; j < n; ++j)
      if (working[j] != Activity::kFree) r -= h(free_idx[a], j) * u[j];
    rhs[a] = r;
    for (int b = 0; b < nf; ++b) hff(a, b) = h(free_idx[a], free_idx[b]);
  }
  const VecX xf = hff.llt().solve(rhs);
  for (int a = 0; a < nf; ++a) x[free_idx[a]] = xf[a];
  return x;
}

}  // namespace

void validate(const BoxQP& p) {
  const int n = p.size();
  if (p.hessian.rows() != n || p.hessian.cols() != n || p.lower.size() != n || p.upper.size() != n)
    throw ValidationError("box QP: dimension mismatch");
  for (int i = 0; i < n; ++i) {
    if (std::isnan(p.lower[i]) || std::isnan(p.upper[i])) throw ValidationError("box QP: NaN bound");
    if (p.lower[i] > p.upper[i])
      throw InfeasibleError("box QP: lower bound exceeds upper bound on coordinate " + std::to_string(i), i);
  }
  if (!p.hessian.allFinite() || !p.gradient.allFinite()) throw ValidationError("box QP: non-finite data");
  if ((p.hessian - p.hessian.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw ValidationError("box QP: Hessian is not symmetric");
  if (n > 0) {
    Eigen::SelfAdjointEigenSolver<MatX> es(p.hessian, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kQpRegularization)
      throw ValidationError("box QP: Hessian is not positive semidefinite");
  }
}

double kkt_residual(const BoxQP& p, const VecX& u) {
  const VecX grad = p.hessian * u + p.gradient;
  double worst = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    if (u[i] < p.lower[i]) worst = std::max(worst, p.lower[i] - u[i]);
    if (u[i] > p.upper[i]) worst = std::max(worst, u[i] - p.upper[i]);
    const bool at_lower = u[i] <= p.lower[i];
    const bool at_upper = u[i] >= p.upper[i];
    if (at_lower && at_upper) continue;
    if (at_lower) {
      worst = std::max(worst, -grad[i]);
    } else if (at_upper) {
      worst = std::max(worst, grad[i]);
    } else {
      worst = std::max(worst, std::abs(grad[i]));
    }
  }
  return worst;
}

QpSolution BoxQpSolver::solve(const BoxQP& problem) {
  validate(problem);
  const int n = problem.size();

  MatX h = problem.hessian;
  if (h.llt().info() != Eigen::Success) h.diagonal().array() += kQpRegularization;
  const VecX& g = problem.gradient;
  const VecX& lb = problem.lower;
  const VecX& ub = problem.upper;

  std::vector<Activity> working(n, Activity::kFree);
  if (static_cast<int>(warm_.size()) == n) working = warm_;

  VecX u(n);
  for (int i = 0; i < n; ++i) {
    if (lb[i] == ub[i]) working[i] = Activity::kLower;
    if (working[i] == Activity::kLower && !std::isfinite(lb[i])) working[i] = Activity::kFree;
    if (working[i] == Activity::kUpper && !std::isfinite(ub[i])) working[i] = Activity::kFree;
    switch (working[i]) {
      case Activity::kLower: u[i] = lb[i]; break;
      case Activity::kUpper: u[i] = ub[i]; break;
      case Activity::kFree: u[i] = std::clamp(0.0, lb[i], ub[i]); break;
    }
  }

  QpSolution sol;
  const int max_iterations = 20 * n + 100;
  for (int iter = 0; iter < max_iterations; ++iter) {
    sol.iterations = iter + 1;
    const VecX target = solve_free(h, g, u, working);
    const VecX step = target - u;
    const double scale = 1.0 + u.cwiseAbs().maxCoeff();
    if (step.cwiseAbs().maxCoeff() <= 1e-14 * scale) {
      // Stationary on the current face: release the most violated bound.
      const VecX grad = h * target + g;
      int release = -1;
      double most_negative = -kMultiplierTolerance;
      for (int i = 0; i < n; ++i) {
        if (working[i] == Activity::kFree || lb[i] == ub[i]) continue;
        const double mult = working[i] == Activity::kLower ? grad[i] : -grad[i];
        if (mult < most_negative) {
          most_negative = mult;
          release = i;
        }
      }
      u = target;
      if (release < 0) break;
      working[release] = Activity::kFree;
      continue;
    }

    double alpha = 1.0;
    int blocking = -1;
    Activity blocking_side = Activity::kFree;
    for (int i = 0; i < n; ++i) {
      if (working[i] != Activity::kFree) continue;
      if (step[i] < 0.0 && std::isfinite(lb[i])) {
        const double a = (lb[i] - u[i]) / step[i];
        if (a < alpha) {
          alpha = a;
          blocking = i;
          blocking_side = Activity::kLower;
        }
      } else if (step[i] > 0.0 && std::isfinite(ub[i])) {
        const double a = (ub[i] - u[i]) / step[i];
        if (a < alpha) {
          alpha = a;
          blocking = i;
          blocking_side = Activity::kUpper;
        }
      }
    }
    alpha = std::max(alpha, 0.0);
    if (blocking < 0) {
      u = target;
    } else {
      u += alpha * step;
      working[blocking] = blocking_side;
      u[blocking] = blocking_side == Activity::kLower ? lb[blocking] : ub[blocking];
    }
  }

  // Final polish from the converged active set so the result depends only on it.
  for (int i = 0; i < n; ++i) {
    if (working[i] == Activity::kLower) u[i] = lb[i];
    if (working[i] == Activity::kUpper) u[i] = ub[i];
  }
  u = solve_free(h, g, u, working);
  for (int i = 0; i < n; ++i) u[i] = std::clamp(u[i], lb[i], ub[i]);

  warm_ = working;
  sol.u = u;
  sol.active_set = working;
  sol.objective = problem.objective(u);
  return sol;
}

QpSolution solve_box_qp(const BoxQP& problem) {
  BoxQpSolver solver;
  return solver.solve(problem);
}

BoxQP build_controller_qp(const VecX& u_star, const VecX& s_dot_star, double w1, double w2,
                          const QpBounds& bounds, double dt, const VecX& s, const VecX& thrust,
                          const Limits& s_limits, const Limits& thrust_limits) {
  if (!(w1 > 0.0) || w2 < 0.0) throw ValidationError("controller QP: weights must satisfy w1 > 0, w2 >= 0");
  if (!(dt > 0.0)) throw ValidationError("controller QP: dt must be positive");
  const auto m = thrust.size();
  const auto n = s.size();
  if (u_star.size() != m + n || s_dot_star.size() != n)
    throw ValidationError("controller QP: dimension mismatch");

  BoxQP qp;
  qp.hessian = MatX::Zero(m + n, m + n);
  qp.gradient = -w1 * u_star;
  qp.lower.resize(m + n);
  qp.upper.resize(m + n);
  for (Eigen::Index i = 0; i < m; ++i) {
    qp.hessian(i, i) = w1;
    qp.lower[i] = std::max(bounds.thrust_rate_min[i], (thrust_limits.min[i] - thrust[i]) / dt);
    qp.upper[i] = std::min(bounds.thrust_rate_max[i], (thrust_limits.max[i] - thrust[i]) / dt);
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index i = m + j;
    qp.hessian(i, i) = w1 + w2;
    qp.gradient[i] -= w2 * s_dot_star[j];
    qp.lower[i] = std::max(bounds.joint_rate_min[j], (s_limits.min[j] - s[j]) / dt);
    qp.upper[i] = std::min(bounds.joint_rate_max[j], (s_limits.max[j] - s[j]) / dt);
  }
  for (Eigen::Index i = 0; i < m + n; ++i) {
    if (qp.lower[i] > qp.upper[i]) {
      const std::string kind = i < m ? "thrust rate " + std::to_string(i) : "joint rate " + std::to_string(i - m);
      throw InfeasibleError("controller QP: empty bound intersection on " + kind + " (lower " +
                                std::to_string(qp.lower[i]) + " > upper " + std::to_string(qp.upper[i]) + ")",
                            static_cast<int>(i));
    }
  }
  return qp;
}

}  // namespace jetflight
