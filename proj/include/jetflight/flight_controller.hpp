#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jetflight/aero_model.hpp"
#include "jetflight/qp_solver.hpp"
#include "jetflight/robot_model.hpp"

namespace jetflight {

enum class ControllerVariant { kBaseline, kFeedbackLinearization, kGainScheduling };

const char* variant_name(ControllerVariant v);
/// Accepts "baseline", "fl", "gs". Throws ValidationError otherwise.
ControllerVariant parse_variant(const std::string& name);

/// Diagonal gains of the momentum loop and the postural task.
struct ControllerGains {
  Vec6 kp = Vec6::Constant(27.0);
  Vec6 kd = Vec6::Constant(9.0);
  Vec6 ki = Vec6::Constant(27.0);
  VecX kp_posture;                           ///< one entry per joint
  Vec6 integral_clamp = Vec6::Constant(1e3);  ///< anti-windup bound on |I_i|
  double w1 = 1.0;
  double w2 = 0.1;

  /// Throws ValidationError unless every diagonal entry is positive.
  void validate(int dof) const;
};

struct GainScheduleParams {
  double threshold = 0.1;  ///< m, CoM error that triggers the schedule
  double sigma_max = 3.0;
  double time_constant = 0.5;  ///< s
};

struct GainScheduleState {
  GainScheduleParams params;
  double sigma = 1.0;
};

struct ControllerConfig {
  ControllerVariant variant = ControllerVariant::kBaseline;
  ControllerGains gains;
  GainScheduleParams schedule;
  std::optional<MeasurementCorruption> corruption;  ///< FL measurement corruption
  AeroCoefficients coefficients;                     ///< model used for the FL estimate
  double damping = 1e-4;
  double dt = 0.01;
  VecX joint_rate_limit;  ///< rad/s, symmetric
  VecX posture;           ///< desired joint configuration s_d
  bool include_base_velocity_term = true;
};

/// Waypoint of the CoM reference, position relative to the initial CoM.
struct Waypoint {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
};

struct MomentumReference {
  Vec6 h = Vec6::Zero();
  Vec6 h_dot = Vec6::Zero();
  Vec6 h_ddot = Vec6::Zero();
  Vec3 com = Vec3::Zero();
};

/// Piecewise quintic CoM trajectory through waypoints with zero acceleration
/// at every knot. Holds the first waypoint before it and extrapolates with the
/// last velocity after the final one.
class ReferenceTrajectory {
 public:
  ReferenceTrajectory() = default;
  ReferenceTrajectory(std::vector<Waypoint> waypoints, Vec3 origin, double mass);

  MomentumReference at(double t) const;

  struct Sample {
    Vec3 position, velocity, acceleration, jerk;
  };
  Sample com(double t) const;

 private:
  struct Segment {
    double t0, t1;
    Eigen::Matrix<double, 3, 6> coeffs;  // p(t) = sum c_k (t - t0)^k
  };
  std::vector<Waypoint> waypoints_;
  std::vector<Segment> segments_;
  Vec3 origin_ = Vec3::Zero();
  double mass_ = 1.0;
};

/// Trapezoid-rule integral of the momentum error with componentwise clamping.
class MomentumIntegral {
 public:
  const Vec6& value() const { return value_; }
  void accumulate(const Vec6& h_tilde, double dt, const Vec6& clamp);
  void reset();

 private:
  Vec6 value_ = Vec6::Zero();
  Vec6 previous_ = Vec6::Zero();
  bool has_previous_ = false;
};

struct ErrorTerms {
  Vec6 h_tilde = Vec6::Zero();
  Vec6 h_dot_tilde = Vec6::Zero();
  Vec6 integral = Vec6::Zero();
  Vec6 h_dot_estimate = Vec6::Zero();
};

/// Momentum rate from the thrust map, optionally with the aerodynamic force:
/// A T + m g_bar (+ [F_a; 0]).
Vec6 momentum_rate_estimate(const Mat6X& thrust_map, const VecX& thrust, double mass,
                            const std::optional<Vec3>& aero_estimate);

ErrorTerms momentum_error_terms(const Vec6& h, const Mat6X& thrust_map, const VecX& thrust, double mass,
                                const MomentumReference& reference, const std::optional<Vec3>& aero_estimate,
                                MomentumIntegral& integral, double dt, const Vec6& clamp);

Vec6 desired_momentum_acceleration(const ErrorTerms& terms, const Vec6& h_ddot_reference,
                                   const ControllerGains& gains);

/// u* = J^T (J J^T + damping^2 I)^{-1} (h_ddot_des - b) with J = [Lambda_T Lambda_s].
VecX baseline_input(const ThrustMapRate& rate, const Vec6& h_ddot_des, double damping,
                    bool include_base_velocity_term = true);

VecX postural_velocity(const VecX& s, const VecX& s_desired, const VecX& kp_posture);

/// Advances sigma one step and returns the gains with K_P and K_I scaled by it.
ControllerGains gain_schedule_update(GainScheduleState& state, double com_error_norm, double dt,
                                     const ControllerGains& nominal);

struct ControlInput {
  VecX thrust_rate;
  VecX joint_rate;
};

struct ControllerMeasurement {
  Configuration q;
  Vec6 h = Vec6::Zero();
  VecX thrust;
  VecX joint_rates;
  /// Relative air velocity in the inertial frame (Pitot-style sensor).
  std::optional<Vec3> relative_velocity;
};

struct TickDiagnostics {
  MomentumReference reference;
  ErrorTerms terms;
  Vec6 h_ddot_des = Vec6::Zero();
  VecX u_star;
  VecX s_dot_star;
  BoxQP qp;
  QpSolution solution;
  ControllerGains gains;
  double sigma = 1.0;
  std::optional<Vec3> aero_estimate;
  Vec3 com = Vec3::Zero();
};

/// Momentum-based flight controller. Holds the integral, the gain schedule,
/// the measurement-noise stream and the QP warm start, so an instance serves
/// exactly one control loop.
class FlightController {
 public:
  FlightController(const RobotModel& model, ControllerConfig config, ReferenceTrajectory reference,
                   std::uint64_t seed = 0);

  ControlInput tick(const ControllerMeasurement& m, double t);

  const TickDiagnostics& diagnostics() const { return diag_; }
  const ControllerConfig& config() const { return config_; }
  double sigma() const { return schedule_.sigma; }

 private:
  std::optional<Vec3> estimate_aero(const ControllerMeasurement& m);

  const RobotModel* model_;
  ControllerConfig config_;
  ReferenceTrajectory reference_;
  MomentumIntegral integral_;
  GainScheduleState schedule_;
  BoxQpSolver solver_;
  Rng rng_;
  TickDiagnostics diag_;
};

}  // namespace jetflight
