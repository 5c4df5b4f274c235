#pragma once

// Seeded synthetic scenes: Gaussian background with known statistics and
// linearly mixed target pixels x = a t + (1 - a) b + noise.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "hsd/background.hpp"
#include "hsd/cube.hpp"
#include "hsd/region.hpp"

namespace hsd::synth {

struct Plant {
  std::size_t line = 0;
  std::size_t sample = 0;
  double abundance = 1.0;  // in (0, 1]
};

struct SynthSpec {
  std::size_t lines = 64;
  std::size_t samples = 64;
  std::size_t bands = 16;
  std::uint64_t seed = 1;
  // Background covariance is A A^T + delta I. Unset fields are generated
  // from the seed: mean and target as smooth spectra (three Gaussian bumps),
  // A with N(0, 1/L) entries, delta = 0.01 * mean diag(A A^T).
  std::optional<Eigen::VectorXd> background_mean;
  std::optional<Eigen::MatrixXd> covariance_factor;
  std::optional<double> diagonal_loading;
  std::optional<std::vector<double>> target_signature;
  std::vector<Plant> plants;
  // White noise sigma added to every pixel.
  double noise_floor = 0.0;
  // Scales the background deviation of 5% of non-target pixels by 3.
  bool contamination = false;
};

// Throws Error(validation) for empty extents, out-of-range or duplicate
// plants, abundances outside (0, 1], a negative noise floor or mis-sized
// overrides.
void validate(const SynthSpec& spec);

// Seed-derived scene parameters (no pixels drawn).
struct SceneModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd factor;
  double loading = 0.0;
  Eigen::MatrixXd covariance;  // A A^T + delta I + noise^2 I
  std::vector<double> target;
};

SceneModel scene_model(const SynthSpec& spec);

struct Scene {
  SpectralCube cube;
  GroundTruthMask mask;
  Signature target;
  // True mean/covariance; second moment is cov + mean mean^T.
  BackgroundModel truth;
  std::size_t contaminated_pixels = 0;
};

Scene generate(const SynthSpec& spec);

// a * sqrt((t - mu)^T S^-1 (t - mu)) using the true covariance.
double deflection(const SceneModel& model, double abundance);
// Deflection at the smallest planted abundance; 0 without plants.
double snr_of(const SynthSpec& spec);
// Abundance giving the requested deflection.
double abundance_for_deflection(const SynthSpec& spec, double target_deflection);

// `count` distinct random locations with abundances uniform in [lo, hi].
std::vector<Plant> scatter_plants(std::size_t lines, std::size_t samples, std::size_t count,
                                  double abundance_lo, double abundance_hi, std::uint64_t seed);

}  // namespace hsd::synth
