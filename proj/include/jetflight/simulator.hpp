#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "jetflight/aero_model.hpp"
#include "jetflight/flight_controller.hpp"
#include "jetflight/robot_model.hpp"
#include "jetflight/scenario.hpp"
#include "jetflight/sim_log.hpp"
#include "jetflight/wind_env.hpp"

namespace jetflight {

struct PlantParameters {
  double joint_lag = 0.03;  ///< s, first-order joint velocity tracking
  AeroCoefficients coefficients;
  bool aero_enabled = true;
};

struct PlantState {
  Pose base;
  VecX joints;
  VecX joint_rates;  ///< actual (lagged) joint velocities
  Vec6 h = Vec6::Zero();
  VecX thrust;
  double t = 0.0;

  Configuration configuration() const { return {base, joints}; }
};

inline constexpr double kBlowUpThreshold = 1e6;

/// Aerodynamic force on the plant at `state` for a given wind velocity.
Vec3 plant_aero_force(const RobotModel& model, const PlantParameters& params, const PlantState& state,
                      const Vec3& wind);

/// Relative air velocity v_CoM - v_wind.
Vec3 relative_air_velocity(const RobotModel& model, const PlantState& state, const Vec3& wind);

/// One RK4 step; the base orientation is integrated on SO(3) through the
/// exponential map. Thrust is clamped to its limits afterwards.
/// Throws BlowUpError if the result is non-finite or exceeds kBlowUpThreshold.
PlantState step_plant(const RobotModel& model, const PlantParameters& params, const PlantState& state,
                      const ControlInput& input, const WindProfile& wind, double dt);

/// Initial plant state of a scenario: zero momentum, hover thrusts.
PlantState initial_state(const Scenario& scenario);

/// Runs the whole scenario with `config` and returns the per-tick log.
/// Throws BlowUpError or InfeasibleError (message carries the tick index).
SimLog run_scenario(const Scenario& scenario, const ControllerConfig& config, std::uint64_t seed);

/// Evaluation windows [start, end + tail] of the scenario gusts, each capped at
/// the next gust start and at the end of the run.
std::vector<GustWindow> gust_windows(const WindProfile& wind, double tail, double duration);

struct WindowMetrics {
  GustWindow window;
  double peak = 0.0;  ///< max |(com - com_ref) . direction| (m)
  std::optional<double> baseline_peak;
  std::optional<double> reduction_percent;
  bool degenerate = false;  ///< both peaks zero
};

struct Metrics {
  std::string variant;
  std::vector<WindowMetrics> windows;
  double rms_linear_momentum_error = 0.0;
  double rms_angular_momentum_error = 0.0;
  std::optional<double> baseline_rms_linear_momentum_error;
  std::optional<double> baseline_rms_angular_momentum_error;
};

/// Throws ValidationError if the logs do not share tick grid and windows.
Metrics compute_metrics(const SimLog& log, const SimLog* baseline = nullptr);
nlohmann::json metrics_to_json(const Metrics& m);

/// Constant C of the audit bound C * dt^2 (N s / s^2 scale, see README).
inline constexpr double kAuditConstant = 1e3;

struct AuditReport {
  double max_residual = 0.0;
  std::size_t worst_interval = 0;
  double bound = 0.0;
  bool passed = true;
  std::vector<double> residuals;  ///< one per interval between logged ticks
};

/// Compares the numerical derivative of the logged momentum with the rate
/// recomputed from logged pose, joints, thrust and aerodynamic force.
AuditReport consistency_audit(const SimLog& log, const RobotModel& model);

}  // namespace jetflight
