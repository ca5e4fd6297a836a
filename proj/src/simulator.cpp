#include "jetflight/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "jetflight/errors.hpp"

namespace jetflight {

namespace {

struct Derivative {
  Vec3 phi;
  Vec3 position;
  VecX joints;
  VecX joint_rates;
  Vec6 h;
  VecX thrust;
};

struct Stage {
  Vec3 phi = Vec3::Zero();
  Vec3 position;
  VecX joints;
  VecX joint_rates;
  Vec6 h;
  VecX thrust;
};

Stage advance(const Stage& s, const Derivative& d, double a) {
  return {s.phi + a * d.phi,     s.position + a * d.position, s.joints + a * d.joints,
          s.joint_rates + a * d.joint_rates, s.h + a * d.h, s.thrust + a * d.thrust};
}

Derivative evaluate(const RobotModel& model, const PlantParameters& params, const Mat3& r0, const Stage& s,
                    const ControlInput& u, const WindProfile& wind, double t) {
  PlantState ps;
  ps.base.rotation = exp_so3(s.phi) * r0;
  ps.base.translation = s.position;
  ps.joints = s.joints;
  ps.h = s.h;
  const Configuration q = ps.configuration();

  Derivative d;
  const Vec6 twist = base_velocity_from_momentum(model, q, s.h, s.joint_rates);
  d.position = twist.head<3>();
  d.phi = dexp_inv(s.phi, twist.tail<3>());
  d.joints = s.joint_rates;
  d.joint_rates = (u.joint_rate - s.joint_rates) / params.joint_lag;
  d.h = thrust_map(model, q) * s.thrust + gravity_wrench(model.total_mass());
  if (params.aero_enabled) d.h.head<3>() += plant_aero_force(model, params, ps, wind_velocity(wind, t));
  d.thrust = u.thrust_rate;
  return d;
}

void check_finite(const PlantState& s) {
  auto bad = [](const auto& v) { return !v.allFinite() || v.cwiseAbs().maxCoeff() > kBlowUpThreshold; };
  const char* what = nullptr;
  if (bad(s.base.translation)) what = "base position";
  else if (bad(s.base.rotation)) what = "base rotation";
  else if (s.joints.size() && bad(s.joints)) what = "joint angles";
  else if (s.joint_rates.size() && bad(s.joint_rates)) what = "joint rates";
  else if (bad(s.h)) what = "momentum";
  else if (s.thrust.size() && bad(s.thrust)) what = "thrust";
  if (what) {
    std::ostringstream os;
    os << "plant blow-up at t = " << s.t << " s: " << what << " is non-finite or exceeds " << kBlowUpThreshold;
    throw BlowUpError(os.str());
  }
}

}  // namespace

Vec3 relative_air_velocity(const RobotModel& model, const PlantState& state, const Vec3& wind) {
  return state.h.head<3>() / model.total_mass() - wind;
}

Vec3 plant_aero_force(const RobotModel& model, const PlantParameters& params, const PlantState& state,
                      const Vec3& wind) {
  if (!params.aero_enabled) return Vec3::Zero();
  return aero_force(params.coefficients, relative_air_velocity(model, state, wind),
                    state.base.rotation * model.aero_frame())
      .total;
}

PlantState step_plant(const RobotModel& model, const PlantParameters& params, const PlantState& state,
                      const ControlInput& input, const WindProfile& wind, double dt) {
  if (!(dt > 0.0)) throw ValidationError("step_plant: dt must be positive");
  if (input.thrust_rate.size() != model.jet_count() || input.joint_rate.size() != model.dof())
    throw ValidationError("step_plant: control input dimension mismatch");
  check_finite(state);

  const Mat3& r0 = state.base.rotation;
  const Stage s0{Vec3::Zero(), state.base.translation, state.joints, state.joint_rates, state.h, state.thrust};
  const double t = state.t;
  const Derivative k1 = evaluate(model, params, r0, s0, input, wind, t);
  const Derivative k2 = evaluate(model, params, r0, advance(s0, k1, 0.5 * dt), input, wind, t + 0.5 * dt);
  const Derivative k3 = evaluate(model, params, r0, advance(s0, k2, 0.5 * dt), input, wind, t + 0.5 * dt);
  const Derivative k4 = evaluate(model, params, r0, advance(s0, k3, dt), input, wind, t + dt);

  const double w = dt / 6.0;
  PlantState out;
  const Vec3 phi = w * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi);
  out.base.rotation = exp_so3(phi) * r0;
  out.base.translation = s0.position + w * (k1.position + 2.0 * k2.position + 2.0 * k3.position + k4.position);
  out.joints = s0.joints + w * (k1.joints + 2.0 * k2.joints + 2.0 * k3.joints + k4.joints);
  out.joint_rates =
      s0.joint_rates + w * (k1.joint_rates + 2.0 * k2.joint_rates + 2.0 * k3.joint_rates + k4.joint_rates);
  out.h = s0.h + w * (k1.h + 2.0 * k2.h + 2.0 * k3.h + k4.h);
  out.thrust = s0.thrust + w * (k1.thrust + 2.0 * k2.thrust + 2.0 * k3.thrust + k4.thrust);
  for (int k = 0; k < model.jet_count(); ++k)
    out.thrust[k] = std::clamp(out.thrust[k], model.jets[k].thrust_min, model.jets[k].thrust_max);
  out.t = t + dt;
  check_finite(out);
  return out;
}

PlantState initial_state(const Scenario& scenario) {
  PlantState s;
  s.base = scenario.initial.base;
  s.joints = scenario.initial.joints;
  s.joint_rates = VecX::Zero(scenario.model.dof());
  s.thrust = hover_thrust(scenario.model, scenario.initial);
  for (int k = 0; k < scenario.model.jet_count(); ++k)
    s.thrust[k] = std::clamp(s.thrust[k], scenario.model.jets[k].thrust_min, scenario.model.jets[k].thrust_max);
  return s;
}

std::vector<GustWindow> gust_windows(const WindProfile& wind, double tail, double duration) {
  std::vector<GustSpec> gusts = wind.gusts;
  std::stable_sort(gusts.begin(), gusts.end(), [](const GustSpec& a, const GustSpec& b) { return a.start < b.start; });
  std::vector<GustWindow> out;
  for (std::size_t i = 0; i < gusts.size(); ++i) {
    double end = std::min(gusts[i].end() + tail, duration);
    if (i + 1 < gusts.size()) end = std::min(end, std::max(gusts[i + 1].start, gusts[i].end()));
    out.push_back({gusts[i].start, end, gusts[i].direction});
  }
  return out;
}

SimLog run_scenario(const Scenario& scenario, const ControllerConfig& config_in, std::uint64_t seed) {
  validate(scenario);
  const RobotModel& model = scenario.model;
  ControllerConfig config = config_in;
  config.dt = scenario.control_dt;

  PlantParameters params;
  params.joint_lag = scenario.joint_lag;
  params.coefficients = scenario.coefficients;
  params.aero_enabled = scenario.aero_enabled;

  PlantState state = initial_state(scenario);
  const Vec3 origin = com_and_jacobian(model, state.configuration()).com;
  FlightController controller(model, config, ReferenceTrajectory(scenario.waypoints, origin, model.total_mass()),
                              seed);

  SimLog log;
  log.scenario = scenario.name;
  log.variant = variant_name(config.variant);
  log.mass = model.total_mass();
  log.control_dt = scenario.control_dt;
  log.dof = model.dof();
  log.jets = model.jet_count();
  log.windows = gust_windows(scenario.wind, scenario.metrics_tail, scenario.duration);

  const long ticks = std::lround(scenario.duration / scenario.control_dt);
  const long substeps = std::lround(scenario.control_dt / scenario.plant_dt);
  log.records.reserve(static_cast<std::size_t>(ticks + 1));

  for (long k = 0; k <= ticks; ++k) {
    const double t = static_cast<double>(k) * scenario.control_dt;
    state.t = t;
    const Vec3 wind = wind_velocity(scenario.wind, t);

    ControllerMeasurement m;
    m.q = state.configuration();
    m.h = state.h;
    m.thrust = state.thrust;
    m.joint_rates = state.joint_rates;
    if (scenario.aero_enabled) m.relative_velocity = relative_air_velocity(model, state, wind);

    ControlInput u;
    try {
      u = controller.tick(m, t);
    } catch (const InfeasibleError& e) {
      throw InfeasibleError("tick " + std::to_string(k) + " (t = " + std::to_string(t) + " s): " + e.what(),
                            e.coordinate());
    }
    if (validate_configuration(model, m.q, LimitMode::kPermissive) > 0) ++log.joint_limit_warnings;

    const TickDiagnostics& d = controller.diagnostics();
    LogRecord r;
    r.t = t;
    r.com = d.com;
    r.com_ref = d.reference.com;
    r.h = state.h;
    r.h_ref = d.reference.h;
    r.thrust = state.thrust;
    r.joints = state.joints;
    r.wind = wind;
    r.aero = plant_aero_force(model, params, state, wind);
    r.sigma = controller.sigma();
    r.base_position = state.base.translation;
    r.base_rotation = log_so3(state.base.rotation);
    log.records.push_back(std::move(r));

    if (k == ticks) break;
    for (long i = 0; i < substeps; ++i) {
      state = step_plant(model, params, state, u, scenario.wind, scenario.plant_dt);
      state.t = static_cast<double>(k * substeps + i + 1) * scenario.plant_dt;
    }
  }
  return log;
}

// ---------------------------------------------------------------------------
// Metrics

namespace {

void check_aligned(const SimLog& a, const SimLog& b) {
  if (a.records.size() != b.records.size()) throw ValidationError("metrics: logs have different tick counts");
  for (std::size_t i = 0; i < a.records.size(); ++i)
    if (std::abs(a.records[i].t - b.records[i].t) > 1e-9)
      throw ValidationError("metrics: logs do not share the tick grid (row " + std::to_string(i) + ")");
  if (a.windows.size() != b.windows.size()) throw ValidationError("metrics: logs have different gust windows");
  for (std::size_t i = 0; i < a.windows.size(); ++i) {
    const auto& x = a.windows[i];
    const auto& y = b.windows[i];
    if (std::abs(x.start - y.start) > 1e-9 || std::abs(x.end - y.end) > 1e-9 ||
        (x.direction - y.direction).norm() > 1e-9)
      throw ValidationError("metrics: gust window " + std::to_string(i) + " differs between logs");
  }
}

double window_peak(const SimLog& log, const GustWindow& w) {
  double peak = 0.0;
  for (const auto& r : log.records) {
    if (r.t < w.start - 1e-12 || r.t > w.end + 1e-12) continue;
    peak = std::max(peak, std::abs((r.com - r.com_ref).dot(w.direction)));
  }
  return peak;
}

std::pair<double, double> rms_errors(const SimLog& log) {
  if (log.records.empty()) return {0.0, 0.0};
  double lin = 0.0, ang = 0.0;
  for (const auto& r : log.records) {
    const Vec6 e = r.h - r.h_ref;
    lin += e.head<3>().squaredNorm();
    ang += e.tail<3>().squaredNorm();
  }
  const double n = static_cast<double>(log.records.size());
  return {std::sqrt(lin / n), std::sqrt(ang / n)};
}

}  // namespace

Metrics compute_metrics(const SimLog& log, const SimLog* baseline) {
  if (baseline) check_aligned(log, *baseline);
  Metrics m;
  m.variant = log.variant;
  std::tie(m.rms_linear_momentum_error, m.rms_angular_momentum_error) = rms_errors(log);
  if (baseline) {
    const auto [bl, ba] = rms_errors(*baseline);
    m.baseline_rms_linear_momentum_error = bl;
    m.baseline_rms_angular_momentum_error = ba;
  }
  for (const auto& w : log.windows) {
    WindowMetrics wm;
    wm.window = w;
    wm.peak = window_peak(log, w);
    if (baseline) {
      const double pb = window_peak(*baseline, w);
      wm.baseline_peak = pb;
      if (pb == 0.0) {
        wm.reduction_percent = 0.0;
        wm.degenerate = true;
      } else {
        wm.reduction_percent = (1.0 - wm.peak / pb) * 100.0;
      }
    }
    m.windows.push_back(wm);
  }
  return m;
}

nlohmann::json metrics_to_json(const Metrics& m) {
  using nlohmann::json;
  json j;
  j["variant"] = m.variant;
  j["rms_linear_momentum_error"] = m.rms_linear_momentum_error;
  j["rms_angular_momentum_error"] = m.rms_angular_momentum_error;
  if (m.baseline_rms_linear_momentum_error) {
    j["baseline_rms_linear_momentum_error"] = *m.baseline_rms_linear_momentum_error;
    j["baseline_rms_angular_momentum_error"] = *m.baseline_rms_angular_momentum_error;
  }
  j["windows"] = json::array();
  for (const auto& w : m.windows) {
    json jw;
    jw["start"] = w.window.start;
    jw["end"] = w.window.end;
    jw["direction"] = {w.window.direction.x(), w.window.direction.y(), w.window.direction.z()};
    jw["peak"] = w.peak;
    if (w.baseline_peak) {
      jw["baseline_peak"] = *w.baseline_peak;
      jw["reduction_percent"] = *w.reduction_percent;
      jw["degenerate"] = w.degenerate;
    }
    j["windows"].push_back(jw);
  }
  return j;
}

// ---------------------------------------------------------------------------
// Audit

AuditReport consistency_audit(const SimLog& log, const RobotModel& model) {
  if (log.jets != model.jet_count() || log.dof != model.dof())
    throw ValidationError("audit: log dimensions do not match the model");
  AuditReport rep;
  const std::size_t n = log.records.size();
  std::vector<Vec6> rates(n);
  const Vec6 gravity = gravity_wrench(model.total_mass());
  for (std::size_t k = 0; k < n; ++k) {
    const LogRecord& r = log.records[k];
    Configuration q;
    q.base.rotation = exp_so3(r.base_rotation);
    q.base.translation = r.base_position;
    q.joints = r.joints;
    rates[k] = thrust_map(model, q) * r.thrust + gravity;
    rates[k].head<3>() += r.aero;
  }
  double max_dt = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double dt = log.records[k + 1].t - log.records[k].t;
    max_dt = std::max(max_dt, dt);
    const Vec6 fd = (log.records[k + 1].h - log.records[k].h) / dt;
    const double res = (fd - 0.5 * (rates[k] + rates[k + 1])).norm();
    rep.residuals.push_back(res);
    if (res > rep.max_residual) {
      rep.max_residual = res;
      rep.worst_interval = k;
    }
  }
  rep.bound = kAuditConstant * max_dt * max_dt;
  rep.passed = rep.max_residual < rep.bound;
  return rep;
}

}  // namespace jetflight
