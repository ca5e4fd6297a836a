#include "jetflight/flight_controller.hpp"

#include <algorithm>
#include <cmath>

#include "jetflight/errors.hpp"

namespace jetflight {

const char* variant_name(ControllerVariant v) {
  switch (v) {
    case ControllerVariant::kBaseline: return "baseline";
    case ControllerVariant::kFeedbackLinearization: return "fl";
    case ControllerVariant::kGainScheduling: return "gs";
  }
  return "baseline";
}

ControllerVariant parse_variant(const std::string& name) {
  if (name == "baseline") return ControllerVariant::kBaseline;
  if (name == "fl") return ControllerVariant::kFeedbackLinearization;
  if (name == "gs") return ControllerVariant::kGainScheduling;
  throw ValidationError("unknown controller variant '" + name + "' (expected baseline, fl or gs)");
}

void ControllerGains::validate(int dof) const {
  auto positive = [](const auto& v) { return v.size() > 0 && (v.array() > 0.0).all() && v.allFinite(); };
  if (!positive(kp) || !positive(kd) || !positive(ki)) throw ValidationError("gains: K_P, K_D, K_I must be positive");
  if (kp_posture.size() != dof) throw ValidationError("gains: posture gain size does not match the joint count");
  if (dof > 0 && !positive(kp_posture)) throw ValidationError("gains: posture gains must be positive");
  if (!positive(integral_clamp)) throw ValidationError("gains: integral clamp must be positive");
  if (!(w1 > 0.0) || !(w2 >= 0.0)) throw ValidationError("gains: weights must satisfy w1 > 0, w2 >= 0");
}

// ---------------------------------------------------------------------------
// Reference

ReferenceTrajectory::ReferenceTrajectory(std::vector<Waypoint> waypoints, Vec3 origin, double mass)
    : waypoints_(std::move(waypoints)), origin_(origin), mass_(mass) {
  if (waypoints_.empty()) waypoints_.push_back({});
  for (std::size_t i = 1; i < waypoints_.size(); ++i)
    if (!(waypoints_[i].t > waypoints_[i - 1].t)) throw ValidationError("waypoints: times must be strictly increasing");
  for (std::size_t i = 0; i + 1 < waypoints_.size(); ++i) {
    const Waypoint& a = waypoints_[i];
    const Waypoint& b = waypoints_[i + 1];
    const double T = b.t - a.t;
    const Vec3 dp = b.position - a.position;
    Segment seg{a.t, b.t, Eigen::Matrix<double, 3, 6>::Zero()};
    seg.coeffs.col(0) = a.position;
    seg.coeffs.col(1) = a.velocity;
    seg.coeffs.col(3) = (20.0 * dp - (8.0 * b.velocity + 12.0 * a.velocity) * T) / (2.0 * T * T * T);
    seg.coeffs.col(4) = (-30.0 * dp + (14.0 * b.velocity + 16.0 * a.velocity) * T) / (2.0 * T * T * T * T);
    seg.coeffs.col(5) = (12.0 * dp - 6.0 * (b.velocity + a.velocity) * T) / (2.0 * T * T * T * T * T);
    segments_.push_back(seg);
  }
}

ReferenceTrajectory::Sample ReferenceTrajectory::com(double t) const {
  Sample s{origin_ + waypoints_.front().position, Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  if (t <= waypoints_.front().t) return s;
  const Waypoint& last = waypoints_.back();
  if (t >= last.t) {
    s.position = origin_ + last.position + (t - last.t) * last.velocity;
    s.velocity = last.velocity;
    return s;
  }
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](double x, const Segment& seg) { return x < seg.t1; });
  const Segment& seg = *it;
  const double x = t - seg.t0;
  const auto& c = seg.coeffs;
  s.position = origin_ + c.col(0) + x * (c.col(1) + x * (c.col(2) + x * (c.col(3) + x * (c.col(4) + x * c.col(5)))));
  s.velocity = c.col(1) + x * (2.0 * c.col(2) + x * (3.0 * c.col(3) + x * (4.0 * c.col(4) + x * 5.0 * c.col(5))));
  s.acceleration = 2.0 * c.col(2) + x * (6.0 * c.col(3) + x * (12.0 * c.col(4) + x * 20.0 * c.col(5)));
  s.jerk = 6.0 * c.col(3) + x * (24.0 * c.col(4) + x * 60.0 * c.col(5));
  return s;
}

MomentumReference ReferenceTrajectory::at(double t) const {
  const Sample s = com(t);
  MomentumReference r;
  r.com = s.position;
  r.h.head<3>() = mass_ * s.velocity;
  r.h_dot.head<3>() = mass_ * s.acceleration;
  r.h_ddot.head<3>() = mass_ * s.jerk;
  return r;
}

// ---------------------------------------------------------------------------
// Error terms

void MomentumIntegral::accumulate(const Vec6& h_tilde, double dt, const Vec6& clamp) {
  if (has_previous_) value_ += 0.5 * dt * (previous_ + h_tilde);
  value_ = value_.cwiseMax(-clamp).cwiseMin(clamp);
  previous_ = h_tilde;
  has_previous_ = true;
}

void MomentumIntegral::reset() {
  value_.setZero();
  previous_.setZero();
  has_previous_ = false;
}

Vec6 momentum_rate_estimate(const Mat6X& thrust_map, const VecX& thrust, double mass,
                            const std::optional<Vec3>& aero_estimate) {
  Vec6 h_dot = thrust_map * thrust + gravity_wrench(mass);
  if (aero_estimate) h_dot.head<3>() += *aero_estimate;
  return h_dot;
}

ErrorTerms momentum_error_terms(const Vec6& h, const Mat6X& thrust_map, const VecX& thrust, double mass,
                                const MomentumReference& reference, const std::optional<Vec3>& aero_estimate,
                                MomentumIntegral& integral, double dt, const Vec6& clamp) {
  ErrorTerms e;
  e.h_dot_estimate = momentum_rate_estimate(thrust_map, thrust, mass, aero_estimate);
  e.h_tilde = h - reference.h;
  e.h_dot_tilde = e.h_dot_estimate - reference.h_dot;
  integral.accumulate(e.h_tilde, dt, clamp);
  e.integral = integral.value();
  return e;
}

Vec6 desired_momentum_acceleration(const ErrorTerms& terms, const Vec6& h_ddot_reference,
                                   const ControllerGains& gains) {
  return h_ddot_reference - gains.kd.cwiseProduct(terms.h_dot_tilde) - gains.kp.cwiseProduct(terms.h_tilde) -
         gains.ki.cwiseProduct(terms.integral);
}

VecX baseline_input(const ThrustMapRate& rate, const Vec6& h_ddot_des, double damping,
                    bool include_base_velocity_term) {
  const auto m = rate.lambda_t.cols();
  const auto n = rate.lambda_s.cols();
  Mat6X j(6, m + n);
  j << rate.lambda_t, rate.lambda_s;
  const Vec6 rhs = include_base_velocity_term ? Vec6(h_ddot_des - rate.b) : h_ddot_des;
  Mat6 jjt = j * j.transpose();
  jjt.diagonal().array() += damping * damping;
  return j.transpose() * jjt.ldlt().solve(rhs);
}

VecX postural_velocity(const VecX& s, const VecX& s_desired, const VecX& kp_posture) {
  if (s.size() != s_desired.size() || s.size() != kp_posture.size())
    throw ValidationError("postural task: dimension mismatch");
  return -kp_posture.cwiseProduct(s - s_desired);
}

ControllerGains gain_schedule_update(GainScheduleState& state, double com_error_norm, double dt,
                                     const ControllerGains& nominal) {
  if (!(dt > 0.0)) throw ValidationError("gain schedule: dt must be positive");
  const auto& p = state.params;
  const double target = com_error_norm > p.threshold ? p.sigma_max : 1.0;
  state.sigma += dt * (target - state.sigma) / p.time_constant;
  state.sigma = std::clamp(state.sigma, 1.0, std::max(1.0, p.sigma_max));
  ControllerGains g = nominal;
  if (state.sigma != 1.0) {
    g.kp *= state.sigma;
    g.ki *= state.sigma;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Controller

FlightController::FlightController(const RobotModel& model, ControllerConfig config, ReferenceTrajectory reference,
                                   std::uint64_t seed)
    : model_(&model), config_(std::move(config)), reference_(std::move(reference)), rng_(seed) {
  const int n = model.dof();
  if (config_.gains.kp_posture.size() == 0) config_.gains.kp_posture = VecX::Ones(n);
  if (config_.joint_rate_limit.size() == 0) config_.joint_rate_limit = VecX::Constant(n, 3.0);
  if (config_.posture.size() == 0) config_.posture = VecX::Zero(n);
  config_.gains.validate(n);
  if (config_.joint_rate_limit.size() != n || config_.posture.size() != n)
    throw ValidationError("controller: joint limits or posture do not match the joint count");
  if (!(config_.dt > 0.0)) throw ValidationError("controller: dt must be positive");
  if (!(config_.damping > 0.0)) throw ValidationError("controller: damping must be positive");
  if (config_.schedule.sigma_max < 1.0 || !(config_.schedule.time_constant > 0.0))
    throw ValidationError("controller: gain schedule needs sigma_max >= 1 and a positive time constant");
  schedule_.params = config_.schedule;
}

std::optional<Vec3> FlightController::estimate_aero(const ControllerMeasurement& m) {
  if (config_.variant != ControllerVariant::kFeedbackLinearization || !m.relative_velocity) return std::nullopt;
  const Mat3 body = m.q.base.rotation * model_->aero_frame();
  if (!config_.corruption) return aero_force(config_.coefficients, *m.relative_velocity, body).total;
  const Vec3& v = *m.relative_velocity;
  const FlowAngles angles = flow_angles(body.transpose() * v);
  auto [measured, next] = corrupt_flow_measurement(v.norm(), angles, *config_.corruption, rng_);
  rng_ = next;
  return aero_force_from_angles(config_.coefficients, measured.speed, measured.angles, body).total;
}

ControlInput FlightController::tick(const ControllerMeasurement& m, double t) {
  const RobotModel& model = *model_;
  const int n = model.dof();
  const int jets = model.jet_count();
  if (m.q.joints.size() != n || m.joint_rates.size() != n || m.thrust.size() != jets)
    throw ValidationError("controller: measurement dimension mismatch");

  TickDiagnostics d;
  d.reference = reference_.at(t);
  const Mat6X a = thrust_map(model, m.q);
  d.com = com_and_jacobian(model, m.q).com;
  d.aero_estimate = estimate_aero(m);

  d.terms = momentum_error_terms(m.h, a, m.thrust, model.total_mass(), d.reference, d.aero_estimate, integral_,
                                 config_.dt, config_.gains.integral_clamp);

  if (config_.variant == ControllerVariant::kGainScheduling) {
    d.gains = gain_schedule_update(schedule_, (d.com - d.reference.com).norm(), config_.dt, config_.gains);
  } else {
    d.gains = config_.gains;
  }
  d.sigma = schedule_.sigma;
  d.h_ddot_des = desired_momentum_acceleration(d.terms, d.reference.h_ddot, d.gains);

  SystemVelocity v;
  v.joints = m.joint_rates;
  v.base = base_velocity_from_momentum(model, m.q, m.h, m.joint_rates);
  const ThrustMapRate rate = thrust_map_rate(model, m.q, v, m.thrust);
  d.u_star = baseline_input(rate, d.h_ddot_des, config_.damping, config_.include_base_velocity_term);
  d.s_dot_star = postural_velocity(m.q.joints, config_.posture, d.gains.kp_posture);

  QpBounds bounds;
  bounds.thrust_rate_min.resize(jets);
  bounds.thrust_rate_max.resize(jets);
  Limits thrust_limits{VecX(jets), VecX(jets)};
  for (int k = 0; k < jets; ++k) {
    const Jet& jet = model.jets[k];
    bounds.thrust_rate_min[k] = jet.rate_min;
    bounds.thrust_rate_max[k] = jet.rate_max;
    thrust_limits.min[k] = jet.thrust_min;
    thrust_limits.max[k] = jet.thrust_max;
  }
  bounds.joint_rate_min = -config_.joint_rate_limit;
  bounds.joint_rate_max = config_.joint_rate_limit;
  Limits s_limits{VecX(n), VecX(n)};
  for (int j = 0; j < n; ++j) {
    s_limits.min[j] = model.joints[j].lower;
    s_limits.max[j] = model.joints[j].upper;
  }

  d.qp = build_controller_qp(d.u_star, d.s_dot_star, d.gains.w1, d.gains.w2, bounds, config_.dt, m.q.joints,
                             m.thrust, s_limits, thrust_limits);
  d.solution = solver_.solve(d.qp);
  diag_ = std::move(d);

  ControlInput out;
  out.thrust_rate = diag_.solution.u.head(jets);
  out.joint_rate = diag_.solution.u.tail(n);
  return out;
}

}  // namespace jetflight
