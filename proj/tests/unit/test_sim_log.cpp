#include <doctest.h>

#include <sstream>

#include "jetflight/errors.hpp"
#include "jetflight/sim_log.hpp"

using namespace jetflight;

namespace {

SimLog sample_log() {
  SimLog log;
  log.scenario = "unit";
  log.variant = "gs";
  log.mass = 40.0;
  log.control_dt = 0.01;
  log.dof = 2;
  log.jets = 3;
  log.joint_limit_warnings = 4;
  log.windows = {{1.0, 2.5, Vec3::UnitX()}, {3.0, 4.0, Vec3(0, -1, 0)}};
  Rng rng(61);
  for (int k = 0; k < 25; ++k) {
    LogRecord r;
    r.t = 0.01 * k;
    r.com = Vec3(rng.uniform(-1, 1), 1.0 / 3.0, 1e-300);
    r.com_ref = Vec3(0.1, 0.2, 0.3);
    for (int i = 0; i < 6; ++i) {
      r.h[i] = rng.uniform(-100, 100);
      r.h_ref[i] = rng.uniform(-1, 1);
    }
    r.thrust = VecX::Constant(3, rng.uniform(0, 250));
    r.joints = VecX::Constant(2, -0.1 * k);
    r.wind = Vec3(-3, 0, 0);
    r.aero = Vec3(rng.uniform(-5, 5), 0, 0);
    r.sigma = 1.0 + 0.01 * k;
    r.base_position = Vec3(0, 0, 1);
    r.base_rotation = Vec3(0, 1e-3 * k, 0);
    log.records.push_back(r);
  }
  return log;
}

std::string serialize(const SimLog& log) {
  std::ostringstream os;
  write_log(os, log);
  return os.str();
}

}  // namespace

TEST_SUITE("sim_log") {
  TEST_CASE("column order") {
    const auto c = log_columns(4, 4);
    REQUIRE(c.size() == 1 + 3 + 3 + 6 + 6 + 4 + 4 + 3 + 3 + 1 + 6);
    CHECK(c[0] == "t");
    CHECK(c[1] == "com_x");
    CHECK(c[4] == "com_ref_x");
    CHECK(c[7] == "h_0");
    CHECK(c[13] == "h_d_0");
    CHECK(c[19] == "T_0");
    CHECK(c[23] == "s_0");
    CHECK(c[27] == "wind_x");
    CHECK(c[30] == "Fa_x");
    CHECK(c[33] == "sigma");
  }

  TEST_CASE("write then read is lossless") {
    const SimLog a = sample_log();
    std::istringstream in(serialize(a));
    const SimLog b = read_log(in);
    CHECK(b.scenario == a.scenario);
    CHECK(b.variant == a.variant);
    CHECK(b.mass == a.mass);
    CHECK(b.control_dt == a.control_dt);
    CHECK(b.jets == 3);
    CHECK(b.dof == 2);
    CHECK(b.joint_limit_warnings == 4);
    REQUIRE(b.windows.size() == 2);
    CHECK(b.windows[1].direction == Vec3(0, -1, 0));
    REQUIRE(b.records.size() == a.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      const auto &x = a.records[i], &y = b.records[i];
      CHECK(x.t == y.t);
      CHECK(x.com == y.com);
      CHECK(x.h == y.h);
      CHECK(x.h_ref == y.h_ref);
      CHECK(x.thrust == y.thrust);
      CHECK(x.joints == y.joints);
      CHECK(x.aero == y.aero);
      CHECK(x.sigma == y.sigma);
      CHECK(x.base_rotation == y.base_rotation);
    }
    CHECK(serialize(b) == serialize(a));
  }

  TEST_CASE("missing gust-window metadata is an input error with a schema hint") {
    std::string text = serialize(sample_log());
    std::string stripped;
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);)
      if (line.rfind("# gust_window", 0) != 0) stripped += line + '\n';
    std::istringstream in(stripped);
    try {
      read_log(in);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("gust_windows=N") != std::string::npos);
    }
  }

  TEST_CASE("malformed content") {
    const std::string good = serialize(sample_log());
    SUBCASE("missing magic line") {
      std::istringstream in(good.substr(good.find('\n') + 1));
      CHECK_THROWS_AS(read_log(in), IoError);
    }
    SUBCASE("short row") {
      std::string bad = good;
      bad.erase(bad.rfind(','));
      bad += '\n';
      std::istringstream in(bad);
      CHECK_THROWS_AS(read_log(in), ValidationError);
    }
    SUBCASE("non-increasing time") {
      SimLog log = sample_log();
      log.records[5].t = log.records[4].t;
      std::istringstream in(serialize(log));
      CHECK_THROWS_AS(read_log(in), ValidationError);
    }
    SUBCASE("text in a numeric field") {
      std::string bad = good;
      const auto pos = bad.rfind('\n', bad.size() - 2);
      bad.replace(pos + 1, 1, "x");
      std::istringstream in(bad);
      CHECK_THROWS_AS(read_log(in), ValidationError);
    }
  }

  TEST_CASE("unreadable file") { CHECK_THROWS_AS(read_log_file("/nonexistent/log.csv"), IoError); }
}
