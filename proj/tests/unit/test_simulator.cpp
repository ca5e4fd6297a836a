#include <doctest.h>

#include <cmath>

#include "jetflight/errors.hpp"
#include "jetflight/simulator.hpp"
#include "support/oracles.hpp"

using namespace jetflight;

namespace {

PlantState hover_state(const RobotModel& m) {
  PlantState s;
  s.joints = VecX::Zero(m.dof());
  s.joint_rates = VecX::Zero(m.dof());
  s.thrust = hover_thrust(m, s.configuration());
  return s;
}

ControlInput zero_input(const RobotModel& m) { return {VecX::Zero(m.jet_count()), VecX::Zero(m.dof())}; }

Scenario short_scenario(double duration) {
  Scenario s = load_scenario_file(oracle::data_path("scenarios/hovering.json"));
  s.duration = duration;
  return s;
}

SimLog synthetic_log(const std::vector<double>& errors, double dt = 0.1) {
  SimLog log;
  log.variant = "x";
  log.mass = 1.0;
  log.control_dt = dt;
  log.windows.push_back({0.0, dt * static_cast<double>(errors.size()), Vec3::UnitX()});
  for (std::size_t i = 0; i < errors.size(); ++i) {
    LogRecord r;
    r.t = dt * static_cast<double>(i);
    r.com = Vec3(errors[i], 0.3, 0.0);  // off-axis offsets do not count
    log.records.push_back(r);
  }
  return log;
}

}  // namespace

TEST_SUITE("simulator") {
  TEST_CASE("balanced hover without wind is stationary") {
    const RobotModel m = oracle::default_model();
    PlantParameters p;
    p.aero_enabled = false;
    PlantState s = hover_state(m);
    const Vec3 com0 = com_and_jacobian(m, s.configuration()).com;
    Vec3 previous = com0;
    for (int k = 0; k < 100; ++k) {
      s = step_plant(m, p, s, zero_input(m), WindProfile{}, 1e-3);
      const Vec3 com = com_and_jacobian(m, s.configuration()).com;
      CHECK((com - previous).norm() < 1e-12);
      previous = com;
    }
    // with aerodynamics on and still air the drag is zero as well
    p.aero_enabled = true;
    PlantState a = hover_state(m);
    for (int k = 0; k < 100; ++k) a = step_plant(m, p, a, zero_input(m), WindProfile{}, 1e-3);
    CHECK(a.h.norm() < 1e-9);
  }

  TEST_CASE("ballistic flight matches the closed form") {
    const RobotModel m = oracle::default_model();
    PlantParameters p;
    p.aero_enabled = false;
    PlantState s = hover_state(m);
    s.thrust.setZero();
    s.h.head<3>() = Vec3(4.0, -2.0, 10.0);
    const Vec3 p0 = s.base.translation;
    const Vec3 hp0 = s.h.head<3>();
    const int steps = 1000;
    for (int k = 0; k < steps; ++k) {
      s = step_plant(m, p, s, zero_input(m), WindProfile{}, 1e-3);
      s.t = (k + 1) * 1e-3;
    }
    const double mass = m.total_mass();
    const Vec3 g(0, 0, -kGravity);
    CHECK((s.h.head<3>() - (hp0 + mass * g * 1.0)).norm() < 1e-10 * mass);
    CHECK(s.h.tail<3>().norm() < 1e-12);
    CHECK((s.base.translation - (p0 + hp0 / mass + 0.5 * g)).norm() < 1e-10);
  }

  TEST_CASE("linear momentum with frozen thrusts follows gravity and thrust exactly") {
    const RobotModel m = oracle::default_model();
    PlantParameters p;
    p.aero_enabled = false;
    PlantState s = hover_state(m);
    const Vec6 h0 = s.h;
    for (int k = 0; k < 2000; ++k) s = step_plant(m, p, s, zero_input(m), WindProfile{}, 1e-3);
    CHECK((s.h - h0).head<3>().norm() < 2 * 1e-10);
  }

  TEST_CASE("RK4 plant convergence order") {
    const RobotModel m = oracle::default_model();
    const oracle::RichardsonStudy r = oracle::plant_richardson_study(m, 4e-3);
    CHECK(r.order >= 3.8);
  }

  TEST_CASE("wind equal to CoM velocity removes the aerodynamic force") {
    const RobotModel m = oracle::default_model();
    PlantParameters p;
    Rng rng(51);
    for (int i = 0; i < 20; ++i) {
      PlantState s = hover_state(m);
      for (int k = 0; k < 6; ++k) s.h[k] = rng.uniform(-40, 40);
      const Vec3 v = s.h.head<3>() / m.total_mass();
      CHECK(plant_aero_force(m, p, s, v).isZero(0.0));
      CHECK(plant_aero_force(m, p, s, v + Vec3(1, 0, 0)).norm() > 0.0);
    }
  }

  TEST_CASE("drag alone never adds kinetic energy") {
    const RobotModel m = oracle::default_model();
    PlantParameters p;
    p.coefficients.d0 = 0.0;
    p.coefficients.d1 = 0.0;
    PlantState s = hover_state(m);
    s.h.head<3>() = Vec3(120.0, -80.0, 40.0);
    WindProfile wind;
    wind.constant = Vec3(-2.0, 1.0, 0.0);
    // thrust cancels gravity exactly in force at this pose, and the pose does
    // not rotate, so only drag changes the linear momentum
    double previous = s.h.head<3>().squaredNorm();
    for (int k = 0; k < 500; ++k) {
      s = step_plant(m, p, s, zero_input(m), wind, 1e-3);
      const double e = s.h.head<3>().squaredNorm();
      CHECK(e <= previous * (1 + 1e-14));
      previous = e;
    }
    CHECK(previous < 120.0 * 120.0 + 80.0 * 80.0 + 40.0 * 40.0);
  }

  TEST_CASE("thrust is clamped to its limits") {
    const RobotModel m = oracle::default_model();
    PlantParameters p;
    p.aero_enabled = false;
    PlantState s = hover_state(m);
    ControlInput u = zero_input(m);
    u.thrust_rate.setConstant(500.0);
    for (int k = 0; k < 400; ++k) s = step_plant(m, p, s, u, WindProfile{}, 1e-3);
    for (int k = 0; k < m.jet_count(); ++k) CHECK(s.thrust[k] == m.jets[k].thrust_max);
  }

  TEST_CASE("blow-up and bad input are reported") {
    const RobotModel m = oracle::default_model();
    PlantParameters p;
    PlantState s = hover_state(m);
    s.h[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(step_plant(m, p, s, zero_input(m), WindProfile{}, 1e-3), BlowUpError);
    CHECK_THROWS_AS(step_plant(m, p, hover_state(m), zero_input(m), WindProfile{}, 0.0), ValidationError);
    ControlInput bad{VecX::Zero(2), VecX::Zero(4)};
    CHECK_THROWS_AS(step_plant(m, p, hover_state(m), bad, WindProfile{}, 1e-3), ValidationError);
  }

  TEST_CASE("identical seeds give bitwise identical logs") {
    Scenario sc = short_scenario(2.0);
    ControllerConfig cfg = sc.controller;
    cfg.variant = ControllerVariant::kFeedbackLinearization;
    cfg.corruption = MeasurementCorruption{0.05, 0.1, 3};
    const SimLog a = run_scenario(sc, cfg, 3);
    const SimLog b = run_scenario(sc, cfg, 3);
    REQUIRE(a.records.size() == 201);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].h == b.records[i].h);
      CHECK(a.records[i].com == b.records[i].com);
      CHECK(a.records[i].thrust == b.records[i].thrust);
    }
  }

  TEST_CASE("log has constant tick spacing") {
    const SimLog log = run_scenario(short_scenario(1.0), short_scenario(1.0).controller, 0);
    for (std::size_t i = 1; i < log.records.size(); ++i)
      CHECK(log.records[i].t - log.records[i - 1].t == doctest::Approx(0.01).epsilon(1e-12));
  }

  TEST_CASE("baseline error peaks inside both gust windows") {
    const Scenario sc = load_scenario_file(oracle::data_path("scenarios/hovering.json"));
    const SimLog log = run_scenario(sc, sc.controller, sc.seed);
    REQUIRE(log.windows.size() == 2);
    double quiet = 0.0;
    for (const auto& r : log.records)
      if (r.t >= 5.0 && r.t < 10.0) quiet = std::max(quiet, (r.com - r.com_ref).norm());
    const Metrics m = compute_metrics(log);
    for (const auto& w : m.windows) {
      CHECK(w.peak > 0.05);
      CHECK(w.peak > 5 * quiet);
    }
    // the peak sits inside the gust, not in the tail
    for (const auto& w : log.windows) {
      double peak = 0.0, at = 0.0;
      for (const auto& r : log.records) {
        if (r.t < w.start || r.t > w.end) continue;
        const double e = std::abs((r.com - r.com_ref).dot(w.direction));
        if (e > peak) {
          peak = e;
          at = r.t;
        }
      }
      CHECK(at >= w.start);
      CHECK(at <= w.start + 4.0 + 1.0);
    }
  }

  TEST_CASE("FL linear momentum error decays after each gust") {
    // The error has to change sign while the CoM drifts back, so its norm is
    // not pointwise monotone; the 1 s envelope is.
    const Scenario sc = load_scenario_file(oracle::data_path("scenarios/hovering.json"));
    ControllerConfig cfg = sc.controller;
    cfg.variant = ControllerVariant::kFeedbackLinearization;
    const SimLog log = run_scenario(sc, cfg, sc.seed);
    for (const auto& g : sc.wind.gusts) {
      const int slices = static_cast<int>(sc.metrics_tail);
      std::vector<double> envelope(slices, 0.0);
      for (const auto& r : log.records) {
        const int i = static_cast<int>(std::floor(r.t - g.end()));
        if (r.t < g.end() || i >= slices) continue;
        envelope[i] = std::max(envelope[i], (r.h - r.h_ref).head<3>().norm());
      }
      for (int i = 1; i < slices; ++i) CHECK(envelope[i] <= 1.05 * envelope[i - 1]);
      CHECK(envelope.back() < 0.1 * envelope.front());
    }
  }

  TEST_CASE("gust windows respect tail, next gust and duration") {
    const auto w = gust_windows(hovering_scenario_wind(), 5.0, 40.0);
    REQUIRE(w.size() == 2);
    CHECK(w[0].start == 10.0);
    CHECK(w[0].end == 19.0);
    CHECK(w[1].end == 34.0);
    const auto tight = gust_windows(hovering_scenario_wind(), 20.0, 40.0);
    CHECK(tight[0].end == 25.0);
    CHECK(tight[1].end == 40.0);
  }

  TEST_CASE("metrics arithmetic on constructed logs") {
    std::vector<double> base(20, 0.0), cand(20, 0.0);
    base[7] = 0.50;
    base[9] = -0.2;
    cand[8] = -0.145;
    const SimLog b = synthetic_log(base), c = synthetic_log(cand);
    const Metrics m = compute_metrics(c, &b);
    REQUIRE(m.windows.size() == 1);
    CHECK(m.windows[0].peak == doctest::Approx(0.145));
    CHECK(*m.windows[0].baseline_peak == doctest::Approx(0.50));
    CHECK(*m.windows[0].reduction_percent == doctest::Approx(71.0).epsilon(1e-12));
    CHECK_FALSE(m.windows[0].degenerate);

    const Metrics self = compute_metrics(b, &b);
    CHECK(*self.windows[0].reduction_percent == 0.0);

    const SimLog z = synthetic_log(std::vector<double>(20, 0.0));
    const Metrics zz = compute_metrics(z, &z);
    CHECK(*zz.windows[0].reduction_percent == 0.0);
    CHECK(zz.windows[0].degenerate);
  }

  TEST_CASE("RMS momentum errors") {
    SimLog log = synthetic_log({0, 0, 0, 0});
    for (auto& r : log.records) r.h << 3, 4, 0, 0, 0, 1;
    const Metrics m = compute_metrics(log);
    CHECK(m.rms_linear_momentum_error == doctest::Approx(5.0));
    CHECK(m.rms_angular_momentum_error == doctest::Approx(1.0));
  }

  TEST_CASE("misaligned logs are rejected") {
    const SimLog a = synthetic_log(std::vector<double>(20, 0.0));
    const SimLog shorter = synthetic_log(std::vector<double>(19, 0.0));
    CHECK_THROWS_AS(compute_metrics(a, &shorter), ValidationError);
    SimLog shifted = a;
    shifted.windows[0].start = 0.5;
    CHECK_THROWS_AS(compute_metrics(a, &shifted), ValidationError);
    const SimLog coarse = synthetic_log(std::vector<double>(20, 0.0), 0.2);
    CHECK_THROWS_AS(compute_metrics(a, &coarse), ValidationError);
  }

  TEST_CASE("metrics JSON") {
    std::vector<double> base(10, 0.0), cand(10, 0.0);
    base[2] = 0.75;
    cand[2] = 0.0375;
    const SimLog b = synthetic_log(base), c = synthetic_log(cand);
    const nlohmann::json j = metrics_to_json(compute_metrics(c, &b));
    CHECK(j["windows"][0]["reduction_percent"].get<double>() == doctest::Approx(95.0).epsilon(1e-12));
    CHECK(j["windows"][0]["degenerate"].get<bool>() == false);
  }

  TEST_CASE("audit of a static run is exact") {
    const RobotModel m = oracle::default_model();
    PlantParameters p;
    p.aero_enabled = false;
    SimLog log;
    log.jets = m.jet_count();
    log.dof = m.dof();
    log.control_dt = 0.01;
    PlantState s = hover_state(m);
    for (int k = 0; k <= 100; ++k) {
      LogRecord r;
      r.t = 0.01 * k;
      r.h = s.h;
      r.thrust = s.thrust;
      r.joints = s.joints;
      r.base_position = s.base.translation;
      r.base_rotation = log_so3(s.base.rotation);
      log.records.push_back(r);
      for (int i = 0; i < 10; ++i) s = step_plant(m, p, s, zero_input(m), WindProfile{}, 1e-3);
    }
    const AuditReport rep = consistency_audit(log, m);
    CHECK(rep.max_residual < 1e-12);
    CHECK(rep.passed);
    CHECK(rep.residuals.size() == 100);
  }

  TEST_CASE("audit localizes a corrupted momentum sample") {
    const Scenario sc = short_scenario(3.0);
    SimLog log = run_scenario(sc, sc.controller, 0);
    const AuditReport clean = consistency_audit(log, sc.model);
    CHECK(clean.passed);
    CHECK(clean.max_residual < clean.bound);
    log.records[150].h[1] += 5.0;
    const AuditReport bad = consistency_audit(log, sc.model);
    CHECK_FALSE(bad.passed);
    CHECK((bad.worst_interval == 149 || bad.worst_interval == 150));
    for (std::size_t k = 0; k < bad.residuals.size(); ++k)
      if (k != 149 && k != 150) CHECK(bad.residuals[k] == clean.residuals[k]);
  }

  TEST_CASE("audit rejects a log from another model") {
    const RobotModel m = oracle::default_model();
    SimLog log;
    log.jets = 3;
    log.dof = 4;
    CHECK_THROWS_AS(consistency_audit(log, m), ValidationError);
  }
}
