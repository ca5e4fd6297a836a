#include "jetflight/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "jetflight/cfd_fit.hpp"
#include "jetflight/errors.hpp"
#include "jetflight/manifest.hpp"
#include "jetflight/scenario.hpp"
#include "jetflight/simulator.hpp"

namespace jetflight::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int exit_code_for(const std::exception_ptr& ep, std::ostream& err) {
  try {
    std::rethrow_exception(ep);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageOrIo;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const BlowUpError& e) {
    err << "simulation blow-up: " << e.what() << '\n';
    return kBlowUp;
  } catch (const InfeasibleError& e) {
    err << "infeasible control problem: " << e.what() << '\n';
    return kInfeasible;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageOrIo;
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("error while writing '" + path + "'");
}

std::string fit_date() {
  std::time_t now = std::time(nullptr);
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long v = std::strtoll(sde, &end, 10);
    if (end && *end == '\0' && end != sde) now = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------

struct FitOptions {
  std::string input;
  std::string out;
  double grid_step = 1.0;
};

int cmd_fit(const FitOptions& o, std::ostream& out) {
  const std::string bytes = read_file_bytes(o.input);
  const CfdDataset data = load_dataset(bytes);
  const DragFit drag = fit_drag(data);
  const NormalFit normal = fit_normal(data);
  const AeroCoefficients c = combine(drag, normal);
  const PositivityScan scan = positivity_scan(c, o.grid_step);

  CoefficientProvenance prov{fit_date(), git_blob_hash(bytes), data.source.empty() ? o.input : data.source};
  json doc = json::parse(serialize_coefficients(c, prov));
  doc["fit"] = {{"samples", data.samples.size()},
                {"drag_residual_rms", drag.residual_rms},
                {"normal_residual_rms", normal.residual_rms}};
  doc["positivity"] = {{"grid_step_deg", o.grid_step},
                       {"min_drag", scan.min_value},
                       {"alpha_deg", scan.alpha_deg},
                       {"beta_deg", scan.beta_deg},
                       {"positive", scan.positive}};
  write_text(o.out, doc.dump(2) + "\n");
  out << "fitted " << data.samples.size() << " samples -> " << o.out << '\n';
  out << "min C_D = " << scan.min_value << " at alpha = " << scan.alpha_deg << " deg, beta = " << scan.beta_deg
      << " deg\n";
  if (!scan.positive) {
    std::ostringstream os;
    os << "fitted drag coefficient is not positive: min C_D = " << scan.min_value << " at (alpha, beta) = ("
       << scan.alpha_deg << ", " << scan.beta_deg << ") deg";
    throw ValidationError(os.str());
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct SimulateOptions {
  std::string scenario;
  std::string controller = "all";
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 1;
  std::optional<double> noise;
  std::optional<double> calibration;
};

json vec_json(const Eigen::Ref<const VecX>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json resolved_settings(const Scenario& sc, const ControllerConfig& c, std::uint64_t seed,
                       const std::vector<std::string>& cli_overrides) {
  json j;
  j["scenario"] = sc.name;
  j["seed"] = seed;
  j["duration"] = sc.duration;
  j["plant_dt"] = sc.plant_dt;
  j["control_dt"] = sc.control_dt;
  j["joint_lag"] = sc.joint_lag;
  j["aero_enabled"] = sc.aero_enabled;
  j["metrics_tail"] = sc.metrics_tail;
  j["coefficients"] = json::parse(serialize_coefficients(sc.coefficients, {}));
  j["coefficients"].erase("provenance");
  j["wind"] = wind_to_json(sc.wind);
  j["waypoints"] = json::array();
  for (const auto& w : sc.waypoints)
    j["waypoints"].push_back({{"t", w.t}, {"position", vec_json(w.position)}, {"velocity", vec_json(w.velocity)}});
  j["initial"] = {{"position", vec_json(sc.initial.base.translation)},
                  {"rotation", vec_json(log_so3(sc.initial.base.rotation))},
                  {"joints", vec_json(sc.initial.joints)}};
  j["controller"] = controller_config_to_json(c);
  j["cli_overrides"] = cli_overrides;
  return j;
}

int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  const Scenario sc = load_scenario_file(o.scenario);

  std::vector<ControllerVariant> variants;
  if (o.controller == "all") {
    variants = {ControllerVariant::kBaseline, ControllerVariant::kGainScheduling,
                ControllerVariant::kFeedbackLinearization};
  } else {
    variants = {parse_variant(o.controller)};
  }

  std::vector<std::string> overrides;
  std::uint64_t seed = sc.seed;
  if (o.seed) {
    seed = *o.seed;
    overrides.push_back("seed");
  }
  overrides.push_back("controller");
  ControllerConfig base = sc.controller;
  if (o.noise || o.calibration) {
    MeasurementCorruption mc = base.corruption.value_or(MeasurementCorruption{});
    if (o.noise) {
      mc.noise = *o.noise;
      overrides.push_back("noise");
    }
    if (o.calibration) {
      mc.calibration = *o.calibration;
      overrides.push_back("calibration");
    }
    if (mc.noise < 0.0 || mc.calibration < 0.0) throw ValidationError("corruption amplitudes must be non-negative");
    mc.seed = seed;
    base.corruption = mc;
  }

  std::string dir = o.out;
  if (dir.empty()) {
    const char* root = std::getenv(kOutputRootEnv);
    dir = (fs::path(root && *root ? root : "runs") / sc.name).string();
  } else {
    overrides.push_back("out");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());

  const std::size_t nv = variants.size();
  std::vector<ControllerConfig> configs(nv, base);
  for (std::size_t i = 0; i < nv; ++i) configs[i].variant = variants[i];
  std::vector<SimLog> logs(nv);
  std::vector<std::exception_ptr> errors(nv);

  auto work = [&](std::size_t i) {
    try {
      logs[i] = run_scenario(sc, configs[i], seed);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t jobs = static_cast<std::size_t>(std::max(1, o.jobs));
  for (std::size_t first = 0; first < nv; first += jobs) {
    std::vector<std::thread> pool;
    const std::size_t last = std::min(nv, first + jobs);
    if (last - first == 1) {
      work(first);
      continue;
    }
    for (std::size_t i = first; i < last; ++i) pool.emplace_back(work, i);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < nv; ++i)
    if (errors[i]) {
      err << "variant " << variant_name(variants[i]) << " failed\n";
      return exit_code_for(errors[i], err);
    }

  const SimLog* baseline = nullptr;
  for (std::size_t i = 0; i < nv; ++i)
    if (variants[i] == ControllerVariant::kBaseline) baseline = &logs[i];

  for (std::size_t i = 0; i < nv; ++i) {
    const std::string name = variant_name(variants[i]);
    const fs::path stem = fs::path(dir) / name;
    write_log_file(stem.string() + ".csv", logs[i]);

    const SimLog* ref = (baseline && baseline != &logs[i]) ? baseline : nullptr;
    const Metrics m = compute_metrics(logs[i], ref);
    json mj = metrics_to_json(m);
    mj["joint_limit_warnings"] = logs[i].joint_limit_warnings;
    write_text(stem.string() + "_metrics.json", mj.dump(2) + "\n");

    RunManifest man;
    man.scenario_path = o.scenario;
    man.variant = name;
    man.seed = seed;
    man.output_dir = dir;
    for (const auto& f : sc.input_files) man.inputs.push_back({f, ""});
    man.resolved = resolved_settings(sc, configs[i], seed, overrides);
    man.seal();
    write_text(stem.string() + "_manifest.json", man.to_json().dump(2) + "\n");

    out << name << ":";
    for (const auto& w : m.windows) {
      out << "  peak[" << w.window.start << "-" << w.window.end << "] = " << w.peak << " m";
      if (w.reduction_percent) out << " (" << std::fixed << std::setprecision(1) << *w.reduction_percent
                                   << "% vs baseline)" << std::defaultfloat << std::setprecision(6);
    }
    out << '\n';
  }
  out << "outputs written to " << dir << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct CompareOptions {
  std::string baseline;
  std::string candidate;
  std::string out;
};

int cmd_compare(const CompareOptions& o, std::ostream& out) {
  const SimLog b = read_log_file(o.baseline);
  const SimLog c = read_log_file(o.candidate);
  if (b.windows.empty() || c.windows.empty())
    throw IoError("log has no gust windows to compare; expected '# gust_windows=N' with N > 0 and matching "
                  "'# gust_window=start,end,dx,dy,dz' lines");
  const Metrics m = compute_metrics(c, &b);
  json j = metrics_to_json(m);
  j["baseline"] = o.baseline;
  j["candidate"] = o.candidate;
  if (!o.out.empty()) write_text(o.out, j.dump(2) + "\n");
  for (std::size_t i = 0; i < m.windows.size(); ++i) {
    const auto& w = m.windows[i];
    out << "window " << i << " [" << w.window.start << ", " << w.window.end << "]: baseline " << *w.baseline_peak
        << " m, candidate " << w.peak << " m, reduction " << *w.reduction_percent << "%"
        << (w.degenerate ? " (degenerate)" : "") << '\n';
  }
  out << "rms linear momentum error: baseline " << *m.baseline_rms_linear_momentum_error << ", candidate "
      << m.rms_linear_momentum_error << '\n';
  out << "rms angular momentum error: baseline " << *m.baseline_rms_angular_momentum_error << ", candidate "
      << m.rms_angular_momentum_error << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct AuditOptions {
  std::string log;
  std::string model;
};

int cmd_audit(const AuditOptions& o, std::ostream& out, std::ostream& err) {
  const SimLog log = read_log_file(o.log);
  const RobotModel model = load_model_file(o.model);
  const AuditReport rep = consistency_audit(log, model);
  json j;
  j["max_residual"] = rep.max_residual;
  j["worst_interval"] = rep.worst_interval;
  j["worst_time"] = log.records.empty() ? 0.0 : log.records[rep.worst_interval].t;
  j["bound"] = rep.bound;
  j["audit_constant"] = kAuditConstant;
  j["passed"] = rep.passed;
  out << j.dump(2) << '\n';
  if (!rep.passed) {
    err << "audit failed: max residual " << rep.max_residual << " exceeds bound " << rep.bound << '\n';
    return kValidation;
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Jet-powered humanoid flight: coefficient fitting, simulation and analysis", "jetflight"};
  app.require_subcommand(1);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit aerodynamic coefficients to a CFD dataset");
  fit_cmd->add_option("--input", fit.input, "CFD dataset CSV")->required();
  fit_cmd->add_option("--out", fit.out, "Coefficient JSON to write")->required();
  fit_cmd->add_option("--grid-step", fit.grid_step, "Positivity scan grid step (deg)")->check(CLI::PositiveNumber);

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a flight scenario");
  sim_cmd->add_option("--scenario", sim.scenario, "Scenario JSON")->required();
  sim_cmd->add_option("--controller", sim.controller, "baseline | fl | gs | all")
      ->check(CLI::IsMember({"baseline", "fl", "gs", "all"}));
  sim_cmd->add_option("--seed", sim.seed, "Random seed (overrides the scenario)");
  sim_cmd->add_option("--out", sim.out, std::string("Output directory (default $") + kOutputRootEnv + "/<scenario>)");
  sim_cmd->add_option("--jobs", sim.jobs, "Variants simulated in parallel")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--noise", sim.noise, "Relative airspeed noise amplitude for the FL measurement");
  sim_cmd->add_option("--calibration", sim.calibration, "Relative flow-angle calibration error for FL");

  CompareOptions cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Peak-error reductions of a candidate log vs a baseline log");
  cmp_cmd->add_option("--baseline", cmp.baseline, "Baseline log CSV")->required();
  cmp_cmd->add_option("--candidate", cmp.candidate, "Candidate log CSV")->required();
  cmp_cmd->add_option("--out", cmp.out, "Report JSON");

  AuditOptions aud;
  auto* aud_cmd = app.add_subcommand("audit", "Check a log against the momentum balance");
  aud_cmd->add_option("--log", aud.log, "Log CSV")->required();
  aud_cmd->add_option("--model", aud.model, "Robot model JSON")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kUsageOrIo;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit, out);
    if (sim_cmd->parsed()) return cmd_simulate(sim, out, err);
    if (cmp_cmd->parsed()) return cmd_compare(cmp, out);
    if (aud_cmd->parsed()) return cmd_audit(aud, out, err);
  } catch (...) {
    return exit_code_for(std::current_exception(), err);
  }
  return kUsageOrIo;
}

}  // namespace jetflight::cli
