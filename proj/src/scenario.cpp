#include "jetflight/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "jetflight/errors.hpp"

namespace jetflight {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

Vec3 vec3_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ValidationError(std::string(what) + ": expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

// Accepts a scalar (broadcast) or an array of exactly `size` numbers.
VecX vecx_from(const json& j, Eigen::Index size, const char* what) {
  if (j.is_number()) return VecX::Constant(size, j.get<double>());
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size)
    throw ValidationError(std::string(what) + ": expected a number or an array of " + std::to_string(size));
  VecX v(size);
  for (Eigen::Index i = 0; i < size; ++i) v[i] = j[i].get<double>();
  return v;
}

json to_array(const VecX& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

std::string resolve(const std::string& base_dir, const std::string& ref) {
  fs::path p(ref);
  if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
  return p.lexically_normal().string();
}

}  // namespace

ControllerConfig controller_config_from_json(const json& j, int dof) {
  ControllerConfig c;
  c.gains.kp_posture = VecX::Ones(dof);
  c.joint_rate_limit = VecX::Constant(dof, 3.0);
  c.posture = VecX::Zero(dof);
  try {
    if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
    if (j.contains("kp")) c.gains.kp = vecx_from(j.at("kp"), 6, "controller.kp");
    if (j.contains("kd")) c.gains.kd = vecx_from(j.at("kd"), 6, "controller.kd");
    if (j.contains("ki")) c.gains.ki = vecx_from(j.at("ki"), 6, "controller.ki");
    if (j.contains("kp_posture")) c.gains.kp_posture = vecx_from(j.at("kp_posture"), dof, "controller.kp_posture");
    if (j.contains("integral_clamp"))
      c.gains.integral_clamp = vecx_from(j.at("integral_clamp"), 6, "controller.integral_clamp");
    c.gains.w1 = j.value("w1", c.gains.w1);
    c.gains.w2 = j.value("w2", c.gains.w2);
    c.damping = j.value("damping", c.damping);
    if (j.contains("joint_rate_limit"))
      c.joint_rate_limit = vecx_from(j.at("joint_rate_limit"), dof, "controller.joint_rate_limit");
    if (j.contains("posture")) c.posture = vecx_from(j.at("posture"), dof, "controller.posture");
    c.include_base_velocity_term = j.value("include_base_velocity_term", c.include_base_velocity_term);
    if (j.contains("gain_schedule")) {
      const json& g = j.at("gain_schedule");
      c.schedule.threshold = g.value("threshold", c.schedule.threshold);
      c.schedule.sigma_max = g.value("sigma_max", c.schedule.sigma_max);
      c.schedule.time_constant = g.value("time_constant", c.schedule.time_constant);
    }
    if (j.contains("corruption") && !j.at("corruption").is_null()) {
      const json& k = j.at("corruption");
      if (k.value("enabled", true)) {
        MeasurementCorruption mc;
        mc.noise = k.value("noise", 0.0);
        mc.calibration = k.value("calibration", 0.0);
        mc.seed = k.value("seed", std::uint64_t{0});
        if (mc.noise < 0.0 || mc.calibration < 0.0)
          throw ValidationError("controller.corruption: amplitudes must be non-negative");
        c.corruption = mc;
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("controller section: ") + e.what());
  }
  c.gains.validate(dof);
  if (!(c.damping > 0.0)) throw ValidationError("controller.damping must be positive");
  if (c.schedule.sigma_max < 1.0 || !(c.schedule.time_constant > 0.0) || c.schedule.threshold < 0.0)
    throw ValidationError("controller.gain_schedule: need sigma_max >= 1, time_constant > 0, threshold >= 0");
  if ((c.joint_rate_limit.array() <= 0.0).any())
    throw ValidationError("controller.joint_rate_limit must be positive");
  return c;
}

json controller_config_to_json(const ControllerConfig& c) {
  json j;
  j["variant"] = variant_name(c.variant);
  j["kp"] = to_array(c.gains.kp);
  j["kd"] = to_array(c.gains.kd);
  j["ki"] = to_array(c.gains.ki);
  j["kp_posture"] = to_array(c.gains.kp_posture);
  j["integral_clamp"] = to_array(c.gains.integral_clamp);
  j["w1"] = c.gains.w1;
  j["w2"] = c.gains.w2;
  j["damping"] = c.damping;
  j["dt"] = c.dt;
  j["joint_rate_limit"] = to_array(c.joint_rate_limit);
  j["posture"] = to_array(c.posture);
  j["include_base_velocity_term"] = c.include_base_velocity_term;
  j["gain_schedule"] = {{"threshold", c.schedule.threshold},
                        {"sigma_max", c.schedule.sigma_max},
                        {"time_constant", c.schedule.time_constant}};
  if (c.corruption) {
    j["corruption"] = {{"noise", c.corruption->noise},
                       {"calibration", c.corruption->calibration},
                       {"seed", c.corruption->seed}};
  } else {
    j["corruption"] = nullptr;
  }
  return j;
}

void validate(const Scenario& s) {
  if (!(s.duration > 0.0) || !(s.plant_dt > 0.0) || !(s.control_dt > 0.0))
    throw ValidationError("scenario: duration and time steps must be positive");
  const double ratio = s.control_dt / s.plant_dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1.0)
    throw ValidationError("scenario: control_dt must be an integer multiple of plant_dt");
  const double ticks = s.duration / s.control_dt;
  if (std::abs(ticks - std::round(ticks)) > 1e-9)
    throw ValidationError("scenario: duration must be an integer multiple of control_dt");
  if (!(s.joint_lag > 0.0)) throw ValidationError("scenario: joint_lag must be positive");
  if (s.metrics_tail < 0.0) throw ValidationError("scenario: metrics_tail must be non-negative");
  validate_configuration(s.model, s.initial, s.limit_mode);
  validate(s.wind);
}

Scenario load_scenario(std::string_view json_text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw IoError(std::string("scenario is not valid JSON: ") + e.what());
  }
  Scenario s;
  try {
    s.name = doc.value("name", s.name);
    if (!doc.contains("model")) throw ValidationError("scenario: missing 'model'");
    s.model_path = resolve(base_dir, doc.at("model").get<std::string>());
    s.model = load_model_file(s.model_path);
    s.input_files.push_back(s.model_path);
    if (doc.contains("coefficients")) {
      const json& c = doc.at("coefficients");
      if (c.is_string()) {
        const std::string path = resolve(base_dir, c.get<std::string>());
        s.coefficients = load_coefficients_file(path);
        s.input_files.push_back(path);
      } else {
        s.coefficients = load_coefficients(c.dump());
      }
    }
    s.aero_enabled = doc.value("aero_enabled", s.aero_enabled);
    s.duration = doc.value("duration", s.duration);
    s.plant_dt = doc.value("plant_dt", s.plant_dt);
    s.control_dt = doc.value("control_dt", s.control_dt);
    s.joint_lag = doc.value("joint_lag", s.joint_lag);
    s.seed = doc.value("seed", s.seed);
    s.metrics_tail = doc.value("metrics_tail", s.metrics_tail);
    if (doc.value("strict_joint_limits", false)) s.limit_mode = LimitMode::kStrict;

    const int dof = s.model.dof();
    s.initial.joints = VecX::Zero(dof);
    if (doc.contains("initial")) {
      const json& init = doc.at("initial");
      if (init.contains("position")) s.initial.base.translation = vec3_from(init.at("position"), "initial.position");
      if (init.contains("rotation"))
        s.initial.base.rotation = exp_so3(vec3_from(init.at("rotation"), "initial.rotation"));
      if (init.contains("joints")) s.initial.joints = vecx_from(init.at("joints"), dof, "initial.joints");
    }
    if (doc.contains("wind")) s.wind = wind_from_json(doc.at("wind"));
    if (doc.contains("waypoints")) {
      for (const json& w : doc.at("waypoints")) {
        Waypoint p;
        p.t = w.at("t").get<double>();
        if (w.contains("position")) p.position = vec3_from(w.at("position"), "waypoint.position");
        if (w.contains("velocity")) p.velocity = vec3_from(w.at("velocity"), "waypoint.velocity");
        s.waypoints.push_back(p);
      }
    }
    s.controller = controller_config_from_json(doc.value("controller", json::object()), dof);
    if (!doc.contains("controller") || !doc.at("controller").contains("posture"))
      s.controller.posture = s.initial.joints;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("scenario: ") + e.what());
  }
  s.controller.dt = s.control_dt;
  validate(s);
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  Scenario s = load_scenario(ss.str(), fs::path(path).parent_path().string());
  s.input_files.insert(s.input_files.begin(), path);
  return s;
}

}  // namespace jetflight
