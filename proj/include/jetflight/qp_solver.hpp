#pragma once

#include <string>
#include <vector>

#include "jetflight/math.hpp"

namespace jetflight {

/// minimize 0.5 u'Hu + g'u  subject to  lb <= u <= ub  (bounds may be infinite).
struct BoxQP {
  MatX hessian;
  VecX gradient;
  VecX lower;
  VecX upper;

  int size() const { return static_cast<int>(gradient.size()); }
  double objective(const VecX& u) const { return 0.5 * u.dot(hessian * u) + gradient.dot(u); }
};

enum class Activity : signed char { kFree = 0, kLower = -1, kUpper = 1 };

struct QpSolution {
  VecX u;
  std::vector<Activity> active_set;
  double objective = 0.0;
  int iterations = 0;
};

inline constexpr double kQpRegularization = 1e-9;
inline constexpr double kKktTolerance = 1e-8;

/// Throws InfeasibleError (lb > ub) or ValidationError (dimensions, asymmetric
/// or indefinite Hessian).
void validate(const BoxQP& problem);

/// Max violation of the box KKT conditions at u.
double kkt_residual(const BoxQP& problem, const VecX& u);

/// Primal active-set solver for box-constrained convex QPs. Keeps the last
/// active set as the warm start for the next call. Not thread safe: one
/// instance belongs to one control loop.
class BoxQpSolver {
 public:
  QpSolution solve(const BoxQP& problem);
  void reset() { warm_.clear(); }
  const std::vector<Activity>& warm_start() const { return warm_; }

 private:
  std::vector<Activity> warm_;
};

/// Cold-start solve.
QpSolution solve_box_qp(const BoxQP& problem);

struct QpBounds {
  VecX thrust_rate_min;
  VecX thrust_rate_max;
  VecX joint_rate_min;
  VecX joint_rate_max;
};

struct Limits {
  VecX min;
  VecX max;
};

/// Assembles the controller QP over u = (T_dot, s_dot):
///   w1 |u - u*|^2 + w2 |s_dot - s_dot*|^2
/// with rate bounds intersected with the one-step Euler position/thrust bounds
/// (e.g. lb_T = max(T_dot_min, (T_min - T) / dt)).
BoxQP build_controller_qp(const VecX& u_star, const VecX& s_dot_star, double w1, double w2,
                          const QpBounds& bounds, double dt, const VecX& s, const VecX& thrust,
                          const Limits& s_limits, const Limits& thrust_limits);

}  // namespace jetflight
