#include "jetflight/sim_log.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "jetflight/errors.hpp"

namespace jetflight {

namespace {

constexpr const char* kMagic = "# jetflight_log v1";
constexpr const char* kSchemaHint =
    "expected '# gust_windows=N' followed by N lines '# gust_window=start,end,dx,dy,dz'";

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const char* what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw ValidationError(std::string("log: bad number in ") + what);
  return v;
}

int parse_int(const std::string& s, const char* what) {
  const double v = parse_double(s, what);
  if (v != static_cast<int>(v) || v < 0) throw ValidationError(std::string("log: bad integer in ") + what);
  return static_cast<int>(v);
}

}  // namespace

std::vector<std::string> log_columns(int jets, int dof) {
  std::vector<std::string> c{"t", "com_x", "com_y", "com_z", "com_ref_x", "com_ref_y", "com_ref_z"};
  for (int i = 0; i < 6; ++i) c.push_back("h_" + std::to_string(i));
  for (int i = 0; i < 6; ++i) c.push_back("h_d_" + std::to_string(i));
  for (int i = 0; i < jets; ++i) c.push_back("T_" + std::to_string(i));
  for (int i = 0; i < dof; ++i) c.push_back("s_" + std::to_string(i));
  for (const char* n : {"wind_x", "wind_y", "wind_z", "Fa_x", "Fa_y", "Fa_z", "sigma", "base_x", "base_y", "base_z",
                        "base_rx", "base_ry", "base_rz"})
    c.emplace_back(n);
  return c;
}

void write_log(std::ostream& out, const SimLog& log) {
  out << kMagic << '\n';
  out << "# scenario=" << log.scenario << '\n';
  out << "# variant=" << log.variant << '\n';
  out << "# mass=" << fmt(log.mass) << '\n';
  out << "# control_dt=" << fmt(log.control_dt) << '\n';
  out << "# jets=" << log.jets << '\n';
  out << "# dof=" << log.dof << '\n';
  out << "# joint_limit_warnings=" << log.joint_limit_warnings << '\n';
  out << "# gust_windows=" << log.windows.size() << '\n';
  for (const auto& w : log.windows)
    out << "# gust_window=" << fmt(w.start) << ',' << fmt(w.end) << ',' << fmt(w.direction.x()) << ','
        << fmt(w.direction.y()) << ',' << fmt(w.direction.z()) << '\n';
  const auto cols = log_columns(log.jets, log.dof);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';

  std::string row;
  auto put = [&row](double x) {
    if (!row.empty()) row += ',';
    row += fmt(x);
  };
  for (const auto& r : log.records) {
    row.clear();
    put(r.t);
    for (int i = 0; i < 3; ++i) put(r.com[i]);
    for (int i = 0; i < 3; ++i) put(r.com_ref[i]);
    for (int i = 0; i < 6; ++i) put(r.h[i]);
    for (int i = 0; i < 6; ++i) put(r.h_ref[i]);
    for (Eigen::Index i = 0; i < r.thrust.size(); ++i) put(r.thrust[i]);
    for (Eigen::Index i = 0; i < r.joints.size(); ++i) put(r.joints[i]);
    for (int i = 0; i < 3; ++i) put(r.wind[i]);
    for (int i = 0; i < 3; ++i) put(r.aero[i]);
    put(r.sigma);
    for (int i = 0; i < 3; ++i) put(r.base_position[i]);
    for (int i = 0; i < 3; ++i) put(r.base_rotation[i]);
    out << row << '\n';
  }
}

void write_log_file(const std::string& path, const SimLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write log '" + path + "'");
  write_log(out, log);
  if (!out) throw IoError("error while writing log '" + path + "'");
}

SimLog read_log(std::istream& in) {
  SimLog log;
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw IoError("log: missing header line '" + std::string(kMagic) + "'");
  int declared_windows = -1;
  bool have_jets = false, have_dof = false;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) != 0) {
      header = split(line, ',');
      break;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(2, eq - 2);
    const std::string value = line.substr(eq + 1);
    if (key == "scenario") {
      log.scenario = value;
    } else if (key == "variant") {
      log.variant = value;
    } else if (key == "mass") {
      log.mass = parse_double(value, "mass");
    } else if (key == "control_dt") {
      log.control_dt = parse_double(value, "control_dt");
    } else if (key == "jets") {
      log.jets = parse_int(value, "jets");
      have_jets = true;
    } else if (key == "dof") {
      log.dof = parse_int(value, "dof");
      have_dof = true;
    } else if (key == "joint_limit_warnings") {
      log.joint_limit_warnings = parse_int(value, "joint_limit_warnings");
    } else if (key == "gust_windows") {
      declared_windows = parse_int(value, "gust_windows");
    } else if (key == "gust_window") {
      const auto f = split(value, ',');
      if (f.size() != 5) throw IoError(std::string("log: malformed gust window; ") + kSchemaHint);
      GustWindow w;
      w.start = parse_double(f[0], "gust_window");
      w.end = parse_double(f[1], "gust_window");
      w.direction = {parse_double(f[2], "gust_window"), parse_double(f[3], "gust_window"),
                     parse_double(f[4], "gust_window")};
      log.windows.push_back(w);
    }
  }
  if (declared_windows < 0 || static_cast<int>(log.windows.size()) != declared_windows)
    throw IoError(std::string("log: missing gust-window metadata; ") + kSchemaHint);
  if (!have_jets || !have_dof) throw IoError("log: missing '# jets=' or '# dof=' metadata");
  const auto expected = log_columns(log.jets, log.dof);
  if (header != expected) throw ValidationError("log: column header does not match the declared jets/dof");

  const std::size_t ncols = expected.size();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != ncols) throw ValidationError("log: row with " + std::to_string(f.size()) + " fields, expected " +
                                                 std::to_string(ncols));
    std::size_t k = 0;
    auto next = [&]() { return parse_double(f[k++], "row"); };
    LogRecord r;
    r.t = next();
    for (int i = 0; i < 3; ++i) r.com[i] = next();
    for (int i = 0; i < 3; ++i) r.com_ref[i] = next();
    for (int i = 0; i < 6; ++i) r.h[i] = next();
    for (int i = 0; i < 6; ++i) r.h_ref[i] = next();
    r.thrust.resize(log.jets);
    for (int i = 0; i < log.jets; ++i) r.thrust[i] = next();
    r.joints.resize(log.dof);
    for (int i = 0; i < log.dof; ++i) r.joints[i] = next();
    for (int i = 0; i < 3; ++i) r.wind[i] = next();
    for (int i = 0; i < 3; ++i) r.aero[i] = next();
    r.sigma = next();
    for (int i = 0; i < 3; ++i) r.base_position[i] = next();
    for (int i = 0; i < 3; ++i) r.base_rotation[i] = next();
    if (!log.records.empty() && !(r.t > log.records.back().t))
      throw ValidationError("log: timestamps are not strictly increasing");
    log.records.push_back(std::move(r));
  }
  return log;
}

SimLog read_log_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open log '" + path + "'");
  return read_log(in);
}

}  // namespace jetflight
