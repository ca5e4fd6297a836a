#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "jetflight/math.hpp"

namespace jetflight {

/// One row per controller tick, state sampled before the tick's input is applied.
struct LogRecord {
  double t = 0.0;
  Vec3 com = Vec3::Zero();
  Vec3 com_ref = Vec3::Zero();
  Vec6 h = Vec6::Zero();
  Vec6 h_ref = Vec6::Zero();
  VecX thrust;
  VecX joints;
  Vec3 wind = Vec3::Zero();
  Vec3 aero = Vec3::Zero();  ///< aerodynamic force applied by the plant
  double sigma = 1.0;
  Vec3 base_position = Vec3::Zero();
  Vec3 base_rotation = Vec3::Zero();  ///< rotation vector
};

/// Evaluation window of one gust: [start, end] already includes the tail.
struct GustWindow {
  double start = 0.0;
  double end = 0.0;
  Vec3 direction = Vec3::UnitX();
};

struct SimLog {
  std::string scenario;
  std::string variant;
  double mass = 0.0;
  double control_dt = 0.0;
  int dof = 0;
  int jets = 0;
  std::vector<GustWindow> windows;
  std::vector<LogRecord> records;
  int joint_limit_warnings = 0;
};

/// Column names in file order.
std::vector<std::string> log_columns(int jets, int dof);

void write_log(std::ostream& out, const SimLog& log);
void write_log_file(const std::string& path, const SimLog& log);

/// Throws IoError on unreadable files or missing gust-window metadata and
/// ValidationError on malformed rows.
SimLog read_log(std::istream& in);
SimLog read_log_file(const std::string& path);

}  // namespace jetflight
