#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "jetflight/aero_model.hpp"

namespace jetflight {

/// One CFD run at a fixed flow orientation. Angles stay in degrees as
/// written in the dataset; conversion to radians happens inside the fits.
struct CfdSample {
  double alpha_deg = 0.0;
  double beta_deg = 0.0;
  double drag = 0.0;     ///< C_D
  double side = 0.0;     ///< C_S, recorded but never fitted
  double normal = 0.0;   ///< C_N
};

struct CfdDataset {
  std::vector<CfdSample> samples;
  double inlet_speed = 7.5;
  std::string source;
};

/// The 9 x 5 grid of flow orientations covered by the reference CFD campaign.
const std::vector<double>& reference_alpha_grid_deg();
const std::vector<double>& reference_beta_grid_deg();

/// Parses `alpha_deg,beta_deg,CD,CS,CN` CSV. Lines starting with '#' may carry
/// `# inlet_speed=<m/s>` and `# source=<tag>` metadata.
CfdDataset load_dataset(std::string_view csv_text);
CfdDataset load_dataset_file(const std::string& path);
std::string write_dataset(const CfdDataset& dataset);

struct DragFit {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0, c3 = 0.0;
  double residual_rms = 0.0;
};

struct NormalFit {
  double d0 = 0.0, d1 = 0.0;
  double residual_rms = 0.0;
};

/// Ordinary least squares on [1, sin^2 a sin^2 b, sin^2 a, sin^2 b] via
/// column-pivoted Householder QR. Throws RankDeficientError.
DragFit fit_drag(const CfdDataset& dataset);

/// Ordinary least squares on [1, sin^2 a sin 2a sin^2 b].
NormalFit fit_normal(const CfdDataset& dataset);

AeroCoefficients combine(const DragFit& drag, const NormalFit& normal);

/// Basis rows, exposed so tests can build independent solvers.
std::vector<double> drag_basis(double alpha_rad, double beta_rad);
std::vector<double> normal_basis(double alpha_rad, double beta_rad);

struct PositivityScan {
  double min_value = 0.0;
  double alpha_deg = 0.0;
  double beta_deg = 0.0;
  bool positive = false;
};

/// Exhaustive C_D evaluation on alpha in [0, 180] and beta in [0, 360] degrees.
PositivityScan positivity_scan(const AeroCoefficients& c, double grid_step_deg);

/// Cartesian-product dataset from the analytic models plus seeded uniform
/// noise in [-noise, noise] on C_D and C_N. C_S is zero.
CfdDataset synth_dataset(const AeroCoefficients& c, const std::vector<double>& alpha_deg,
                         const std::vector<double>& beta_deg, double noise_amplitude,
                         std::uint64_t seed);

double deg_to_rad(double deg);

}  // namespace jetflight
