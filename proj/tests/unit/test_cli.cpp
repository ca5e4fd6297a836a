#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "jetflight/cfd_fit.hpp"
#include "jetflight/cli.hpp"
#include "jetflight/manifest.hpp"
#include "jetflight/sim_log.hpp"
#include "support/oracles.hpp"

using namespace jetflight;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "jetflight");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("jetflight_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// 2 s hovering run with one short gust, model and coefficients by absolute path.
fs::path short_scenario(const fs::path& dir) {
  json j = json::parse(slurp(oracle::data_path("scenarios/hovering.json")));
  j["name"] = "short";
  j["model"] = oracle::data_path("models/default_robot.json");
  j["coefficients"] = oracle::data_path("coefficients/default.json");
  j["duration"] = 2.0;
  j["metrics_tail"] = 0.5;
  j["wind"]["gusts"] = json::array({{{"start", 0.5},
                                     {"duration", 0.5},
                                     {"peak", 10.0},
                                     {"direction", {-1.0, 0.0, 0.0}},
                                     {"shape", "one_minus_cosine"}}});
  const fs::path p = dir / "short.json";
  write(p, j.dump(2));
  return p;
}

SimLog constructed_log(double peak) {
  SimLog log;
  log.variant = "x";
  log.mass = 40.0;
  log.control_dt = 0.1;
  log.jets = 4;
  log.dof = 4;
  log.windows = {{0.0, 1.0, Vec3::UnitX()}};
  for (int k = 0; k < 11; ++k) {
    LogRecord r;
    r.t = 0.1 * k;
    r.thrust = VecX::Zero(4);
    r.joints = VecX::Zero(4);
    if (k == 5) r.com.x() = peak;
    log.records.push_back(r);
  }
  return log;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors") {
    CHECK(run_cli({}).code == cli::kUsageOrIo);
    CHECK(run_cli({"fly"}).code == cli::kUsageOrIo);
    CHECK(run_cli({"fit", "--input"}).code == cli::kUsageOrIo);
    CHECK(run_cli({"--help"}).code == cli::kOk);
  }

  TEST_CASE("fit recovers the generating coefficients") {
    const fs::path dir = scratch("fit");
    const AeroCoefficients truth;
    const CfdDataset d = synth_dataset(truth, reference_alpha_grid_deg(), reference_beta_grid_deg(), 0.0, 0);
    write(dir / "cfd.csv", write_dataset(d));
    const Result r = run_cli({"fit", "--input", (dir / "cfd.csv").string(), "--out", (dir / "c.json").string()});
    REQUIRE(r.code == cli::kOk);
    const AeroCoefficients fitted = load_coefficients_file((dir / "c.json").string());
    CHECK(std::abs(fitted.c0 - truth.c0) < 1e-8);
    CHECK(std::abs(fitted.c1 - truth.c1) < 1e-8);
    CHECK(std::abs(fitted.c2 - truth.c2) < 1e-8);
    CHECK(std::abs(fitted.c3 - truth.c3) < 1e-8);
    CHECK(std::abs(fitted.d0 - truth.d0) < 1e-8);
    CHECK(std::abs(fitted.d1 - truth.d1) < 1e-8);
    const json doc = json::parse(slurp(dir / "c.json"));
    CHECK(doc["provenance"]["dataset_hash"] == file_blob_hash((dir / "cfd.csv").string()));
    CHECK(doc["fit"]["samples"] == 45);
    CHECK(doc["positivity"]["positive"] == true);
  }

  TEST_CASE("fit date honours SOURCE_DATE_EPOCH") {
    const fs::path dir = scratch("fit_date");
    write(dir / "cfd.csv", write_dataset(synth_dataset(AeroCoefficients{}, reference_alpha_grid_deg(),
                                                       reference_beta_grid_deg(), 0.0, 0)));
    setenv("SOURCE_DATE_EPOCH", "0", 1);
    const Result r = run_cli({"fit", "--input", (dir / "cfd.csv").string(), "--out", (dir / "c.json").string()});
    unsetenv("SOURCE_DATE_EPOCH");
    REQUIRE(r.code == cli::kOk);
    CHECK(json::parse(slurp(dir / "c.json"))["provenance"]["fit_date"] == "1970-01-01T00:00:00Z");
  }

  TEST_CASE("fit with negative drag somewhere exits with a validation error") {
    const fs::path dir = scratch("fit_negative");
    AeroCoefficients c;
    c.c0 = -0.05;
    write(dir / "cfd.csv", write_dataset(synth_dataset(c, reference_alpha_grid_deg(), reference_beta_grid_deg(), 0.0, 0)));
    const Result r = run_cli({"fit", "--input", (dir / "cfd.csv").string(), "--out", (dir / "c.json").string()});
    CHECK(r.code == cli::kValidation);
    CHECK(r.err.find("alpha, beta") != std::string::npos);
  }

  TEST_CASE("fit of a missing file is an input error") {
    const Result r = run_cli({"fit", "--input", "/nonexistent/cfd.csv", "--out", "/tmp/x.json"});
    CHECK(r.code == cli::kUsageOrIo);
  }

  TEST_CASE("simulate writes logs, metrics and manifests reproducibly") {
    const fs::path dir = scratch("simulate");
    const fs::path sc = short_scenario(dir);
    const Result a = run_cli({"simulate", "--scenario", sc.string(), "--out", (dir / "a").string(), "--jobs", "3"});
    REQUIRE(a.code == cli::kOk);
    const Result b = run_cli({"simulate", "--scenario", sc.string(), "--out", (dir / "b").string()});
    REQUIRE(b.code == cli::kOk);
    for (const char* v : {"baseline", "gs", "fl"}) {
      const std::string name(v);
      CHECK(fs::exists(dir / "a" / (name + "_metrics.json")));
      CHECK(slurp(dir / "a" / (name + ".csv")) == slurp(dir / "b" / (name + ".csv")));
      const json ma = json::parse(slurp(dir / "a" / (name + "_manifest.json")));
      const json mb = json::parse(slurp(dir / "b" / (name + "_manifest.json")));
      CHECK(ma["resolved"] == mb["resolved"]);
      CHECK(ma["inputs"].size() == 3);
      CHECK(ma["content_hash"].get<std::string>().size() == 40);
    }
    const json m = json::parse(slurp(dir / "a" / "fl_metrics.json"));
    CHECK(m["windows"].size() == 1);
    CHECK(m["windows"][0].contains("reduction_percent"));

    // a different seed changes only the seed-dependent parts of the manifest
    const Result c = run_cli({"simulate", "--scenario", sc.string(), "--controller", "baseline", "--seed", "7", "--out",
                              (dir / "c").string()});
    REQUIRE(c.code == cli::kOk);
    const json mc = json::parse(slurp(dir / "c" / "baseline_manifest.json"));
    CHECK(mc["seed"] == 7);
    CHECK(mc["content_hash"] != json::parse(slurp(dir / "a" / "baseline_manifest.json"))["content_hash"]);
  }

  TEST_CASE("manifest records measurement corruption") {
    const fs::path dir = scratch("corruption");
    const fs::path sc = short_scenario(dir);
    const Result r = run_cli({"simulate", "--scenario", sc.string(), "--controller", "fl", "--noise", "0.05",
                              "--calibration", "0.1", "--seed", "4", "--out", (dir / "o").string()});
    REQUIRE(r.code == cli::kOk);
    const json m = json::parse(slurp(dir / "o" / "fl_manifest.json"));
    const json& c = m["resolved"]["controller"]["corruption"];
    CHECK(c["noise"] == 0.05);
    CHECK(c["calibration"] == 0.1);
    CHECK(c["seed"] == 4);
  }

  TEST_CASE("simulate falls back to the output-root variable") {
    const fs::path dir = scratch("root");
    const fs::path sc = short_scenario(dir);
    setenv(cli::kOutputRootEnv, (dir / "runs").c_str(), 1);
    const Result r = run_cli({"simulate", "--scenario", sc.string(), "--controller", "gs"});
    unsetenv(cli::kOutputRootEnv);
    REQUIRE(r.code == cli::kOk);
    CHECK(fs::exists(dir / "runs" / "short" / "gs.csv"));
  }

  TEST_CASE("simulate input errors") {
    const fs::path dir = scratch("simulate_errors");
    CHECK(run_cli({"simulate", "--scenario", "/nonexistent.json"}).code == cli::kUsageOrIo);
    const fs::path sc = short_scenario(dir);
    CHECK(run_cli({"simulate", "--scenario", sc.string(), "--controller", "pid", "--out", dir.string()}).code ==
          cli::kUsageOrIo);
    json j = json::parse(slurp(sc));
    j["plant_dt"] = 0.003;
    write(dir / "bad.json", j.dump());
    CHECK(run_cli({"simulate", "--scenario", (dir / "bad.json").string(), "--out", dir.string()}).code ==
          cli::kValidation);
  }

  TEST_CASE("compare") {
    const fs::path dir = scratch("compare");
    write_log_file((dir / "base.csv").string(), constructed_log(0.75));
    write_log_file((dir / "cand.csv").string(), constructed_log(0.0375));
    SUBCASE("log against itself") {
      const Result r = run_cli({"compare", "--baseline", (dir / "base.csv").string(), "--candidate",
                                (dir / "base.csv").string(), "--out", (dir / "r.json").string()});
      REQUIRE(r.code == cli::kOk);
      CHECK(json::parse(slurp(dir / "r.json"))["windows"][0]["reduction_percent"] == 0.0);
    }
    SUBCASE("headline ratio") {
      const Result r = run_cli({"compare", "--baseline", (dir / "base.csv").string(), "--candidate",
                                (dir / "cand.csv").string(), "--out", (dir / "r.json").string()});
      REQUIRE(r.code == cli::kOk);
      const double red = json::parse(slurp(dir / "r.json"))["windows"][0]["reduction_percent"];
      CHECK(red == doctest::Approx(95.0).epsilon(1e-12));
    }
    SUBCASE("missing gust-window metadata") {
      std::string text = slurp(dir / "cand.csv"), stripped;
      std::istringstream lines(text);
      for (std::string line; std::getline(lines, line);)
        if (line.rfind("# gust_window", 0) != 0) stripped += line + '\n';
      write(dir / "stripped.csv", stripped);
      const Result r =
          run_cli({"compare", "--baseline", (dir / "base.csv").string(), "--candidate", (dir / "stripped.csv").string()});
      CHECK(r.code == cli::kUsageOrIo);
      CHECK(r.err.find("gust_window") != std::string::npos);
    }
    SUBCASE("misaligned logs") {
      SimLog shifted = constructed_log(0.1);
      shifted.windows[0].end = 0.9;
      write_log_file((dir / "shifted.csv").string(), shifted);
      const Result r =
          run_cli({"compare", "--baseline", (dir / "base.csv").string(), "--candidate", (dir / "shifted.csv").string()});
      CHECK(r.code == cli::kValidation);
    }
  }

  TEST_CASE("audit") {
    const fs::path dir = scratch("audit");
    const fs::path sc = short_scenario(dir);
    REQUIRE(run_cli({"simulate", "--scenario", sc.string(), "--controller", "baseline", "--out", dir.string()}).code ==
            cli::kOk);
    const std::string model = oracle::data_path("models/default_robot.json");
    const Result ok = run_cli({"audit", "--log", (dir / "baseline.csv").string(), "--model", model});
    CHECK(ok.code == cli::kOk);
    CHECK(json::parse(ok.out)["passed"] == true);

    SimLog log = read_log_file((dir / "baseline.csv").string());
    log.records[100].h[0] += 10.0;
    write_log_file((dir / "broken.csv").string(), log);
    const Result bad = run_cli({"audit", "--log", (dir / "broken.csv").string(), "--model", model});
    CHECK(bad.code == cli::kValidation);
    const json j = json::parse(bad.out);
    CHECK(j["passed"] == false);
    const int worst = j["worst_interval"];
    CHECK((worst == 99 || worst == 100));
  }
}
