#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "jetflight/aero_model.hpp"
#include "jetflight/flight_controller.hpp"
#include "jetflight/robot_model.hpp"
#include "jetflight/wind_env.hpp"

namespace jetflight {

/// Everything needed to run one flight: model, wind, reference, timing and
/// the controller configuration (variant may be overridden per run).
struct Scenario {
  std::string name = "scenario";
  std::string model_path;
  RobotModel model;
  AeroCoefficients coefficients;  ///< used by the plant
  bool aero_enabled = true;

  double duration = 40.0;
  double plant_dt = 1e-3;
  double control_dt = 1e-2;
  double joint_lag = 0.03;

  Configuration initial;
  WindProfile wind;
  std::vector<Waypoint> waypoints;
  ControllerConfig controller;
  std::uint64_t seed = 0;
  /// Seconds after each gust end included in its evaluation window.
  double metrics_tail = 5.0;
  LimitMode limit_mode = LimitMode::kPermissive;

  /// Files read while loading, in order (scenario first).
  std::vector<std::string> input_files;
};

/// Parses a scenario document. Relative file references resolve against `base_dir`.
Scenario load_scenario(std::string_view json_text, const std::string& base_dir);
Scenario load_scenario_file(const std::string& path);

ControllerConfig controller_config_from_json(const nlohmann::json& j, int dof);
nlohmann::json controller_config_to_json(const ControllerConfig& c);

/// Checks timing and dimensions. Throws ValidationError.
void validate(const Scenario& s);

}  // namespace jetflight
