#include "jetflight/cfd_fit.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "jetflight/aero_kernels.hpp"
#include "jetflight/errors.hpp"

namespace jetflight {

namespace {

constexpr std::string_view kHeader = "alpha_deg,beta_deg,CD,CS,CN";
constexpr double kRankThreshold = 1e-10;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& field, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size() || !std::isfinite(v)) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw IoError("dataset line " + std::to_string(line) + ": cannot parse number '" + field + "'");
  }
}

template <typename Basis>
Eigen::VectorXd solve_ols(const CfdDataset& ds, int columns, Basis basis, bool normal_target,
                          const char* what, double& residual_rms) {
  const auto rows = static_cast<Eigen::Index>(ds.samples.size());
  if (rows < columns)
    throw RankDeficientError(std::string(what) + ": needs at least " + std::to_string(columns) +
                             " samples, got " + std::to_string(rows));
  Eigen::MatrixXd design(rows, columns);
  Eigen::VectorXd target(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const CfdSample& s = ds.samples[r];
    const auto row = basis(deg_to_rad(s.alpha_deg), deg_to_rad(s.beta_deg));
    for (int c = 0; c < columns; ++c) design(r, c) = row[c];
    target[r] = normal_target ? s.normal : s.drag;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < columns)
    throw RankDeficientError(std::string(what) + ": design matrix is rank deficient (rank " +
                             std::to_string(qr.rank()) + " of " + std::to_string(columns) + ")");
  const Eigen::VectorXd x = qr.solve(target);
  const Eigen::VectorXd residual = target - design * x;
  residual_rms = std::sqrt(residual.squaredNorm() / static_cast<double>(rows));
  return x;
}

}  // namespace

double deg_to_rad(double deg) { return deg * (kPi / 180.0); }

const std::vector<double>& reference_alpha_grid_deg() {
  static const std::vector<double> grid{15, 30, 45, 60, 90, 120, 150, 160, 180};
  return grid;
}

const std::vector<double>& reference_beta_grid_deg() {
  static const std::vector<double> grid{90, 135, 180, 225, 270};
  return grid;
}

CfdDataset load_dataset(std::string_view csv_text) {
  CfdDataset ds;
  ds.source.clear();
  std::istringstream in{std::string(csv_text)};
  std::string raw;
  int line_no = 0;
  bool header_seen = false;
  std::set<std::pair<double, double>> seen;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string meta = trim(std::string_view(line).substr(1));
      if (meta.rfind("inlet_speed=", 0) == 0) ds.inlet_speed = parse_number(meta.substr(12), line_no);
      if (meta.rfind("source=", 0) == 0) ds.source = meta.substr(7);
      continue;
    }
    if (!header_seen) {
      if (line != kHeader)
        throw IoError("dataset header must be '" + std::string(kHeader) + "', got '" + line + "'");
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(trim(f));
    if (fields.size() != 5)
      throw IoError("dataset line " + std::to_string(line_no) + ": expected 5 fields, got " +
                    std::to_string(fields.size()));
    CfdSample s{parse_number(fields[0], line_no), parse_number(fields[1], line_no), parse_number(fields[2], line_no),
                parse_number(fields[3], line_no), parse_number(fields[4], line_no)};
    if (s.alpha_deg < 0.0 || s.alpha_deg > 180.0)
      throw ValidationError("dataset line " + std::to_string(line_no) + ": alpha_deg " + fields[0] +
                            " outside [0, 180]");
    if (s.beta_deg < 0.0 || s.beta_deg > 360.0)
      throw ValidationError("dataset line " + std::to_string(line_no) + ": beta_deg " + fields[1] +
                            " outside [0, 360]");
    if (!seen.emplace(s.alpha_deg, s.beta_deg).second)
      throw ValidationError("dataset line " + std::to_string(line_no) + ": duplicate grid point (" + fields[0] +
                            ", " + fields[1] + ")");
    ds.samples.push_back(s);
  }
  if (ds.samples.empty()) throw ValidationError("dataset is empty: insufficient data for a fit");
  return ds;
}

CfdDataset load_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_dataset(ss.str());
}

std::string write_dataset(const CfdDataset& ds) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "# inlet_speed=%.17g\n", ds.inlet_speed);
  out += buf;
  if (!ds.source.empty()) out += "# source=" + ds.source + "\n";
  out += std::string(kHeader) + "\n";
  for (const auto& s : ds.samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", s.alpha_deg, s.beta_deg, s.drag, s.side,
                  s.normal);
    out += buf;
  }
  return out;
}

std::vector<double> drag_basis(double a, double b) {
  const double sa = std::sin(a);
  const double sb = std::sin(b);
  const double sa2 = sa * sa;
  const double sb2 = sb * sb;
  return {1.0, sa2 * sb2, sa2, sb2};
}

std::vector<double> normal_basis(double a, double b) {
  const double sa = std::sin(a);
  const double sb = std::sin(b);
  return {1.0, sa * sa * std::sin(2.0 * a) * sb * sb};
}

DragFit fit_drag(const CfdDataset& ds) {
  DragFit fit;
  const Eigen::VectorXd x = solve_ols(ds, 4, drag_basis, false, "fit_drag", fit.residual_rms);
  fit.c0 = x[0];
  fit.c1 = x[1];
  fit.c2 = x[2];
  fit.c3 = x[3];
  return fit;
}

NormalFit fit_normal(const CfdDataset& ds) {
  NormalFit fit;
  const Eigen::VectorXd x = solve_ols(ds, 2, normal_basis, true, "fit_normal", fit.residual_rms);
  fit.d0 = x[0];
  fit.d1 = x[1];
  return fit;
}

AeroCoefficients combine(const DragFit& d, const NormalFit& n) {
  return {d.c0, d.c1, d.c2, d.c3, n.d0, n.d1};
}

PositivityScan positivity_scan(const AeroCoefficients& c, double step) {
  if (!(step > 0.0)) throw ValidationError("positivity_scan: grid step must be positive");
  const auto alpha_count = static_cast<std::size_t>(std::floor(180.0 / step + 1e-9)) + 1;
  const auto beta_count = static_cast<std::size_t>(std::floor(360.0 / step + 1e-9)) + 1;

  std::vector<double> sin2_beta(beta_count);
  for (std::size_t j = 0; j < beta_count; ++j) {
    const double s = std::sin(deg_to_rad(static_cast<double>(j) * step));
    sin2_beta[j] = s * s;
  }
  std::vector<double> row(beta_count);
  PositivityScan best;
  bool first = true;
  for (std::size_t i = 0; i < alpha_count; ++i) {
    const double alpha_deg = static_cast<double>(i) * step;
    const double sa = std::sin(deg_to_rad(alpha_deg));
    kernels::drag_row(c, sa * sa, sin2_beta, row);
    const kernels::MinLocation m = kernels::row_min(row);
    if (first || m.value < best.min_value) {
      best.min_value = m.value;
      best.alpha_deg = alpha_deg;
      best.beta_deg = static_cast<double>(m.index) * step;
      first = false;
    }
  }
  best.positive = best.min_value > 0.0;
  return best;
}

CfdDataset synth_dataset(const AeroCoefficients& c, const std::vector<double>& alpha_deg,
                         const std::vector<double>& beta_deg, double noise, std::uint64_t seed) {
  if (alpha_deg.empty() || beta_deg.empty()) throw ValidationError("synth_dataset: empty angle list");
  CfdDataset ds;
  ds.source = "synthetic";
  Rng rng(seed);
  for (double a : alpha_deg) {
    for (double b : beta_deg) {
      CfdSample s{a, b, 0.0, 0.0, 0.0};
      const double ar = deg_to_rad(a);
      const double br = deg_to_rad(b);
      s.drag = drag_coefficient(c, ar, br);
      s.normal = normal_coefficient(c, ar, br);
      if (noise > 0.0) {
        s.drag += rng.uniform(-noise, noise);
        s.normal += rng.uniform(-noise, noise);
      }
      ds.samples.push_back(s);
    }
  }
  return ds;
}

}  // namespace jetflight
