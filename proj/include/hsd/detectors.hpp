#pragma once

// SAM, MF, ACE and CEM detection statistics.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hsd/background.hpp"
#include "hsd/cube.hpp"
#include "hsd/score_map.hpp"

namespace hsd {

// Negated spectral angle, in [-pi, 0]. A zero-norm pixel scores -pi/2.
double sam_score(std::span<const double> x, const Signature& target);

// w = S^-1 (t - mu) / ((t - mu)^T S^-1 (t - mu)), D = w^T (x - mu), with
// S = cov + ridge I. Throws Error(degenerate) when t equals the mean.
double mf_score(std::span<const double> x, const BackgroundModel& model, const Signature& target);

// Squared cosine between x - mu and t - mu in whitened space, in [0, 1].
// x == mu scores 0.
double ace_score(std::span<const double> x, const BackgroundModel& model, const Signature& target);

// Uncentered (default): w = R^-1 t / (t^T R^-1 t), D = w^T x.
// Centered: t - mu and x - mu against the centered second moment.
double cem_score(std::span<const double> x, const BackgroundModel& model, const Signature& target,
                 bool centered = false);

struct DetectOptions {
  bool centered_cem = false;
  // Min-max normalize MF/ACE/CEM to [0, 1].
  bool normalize = true;
  unsigned threads = 1;
};

// Per-pixel kernel with the filter vectors precomputed once. Scoring works on
// row-major pixel blocks; identical input blocks give identical output.
class Detector {
 public:
  Detector(Method method, const BackgroundModel& model, const Signature& target,
           const DetectOptions& options = {});

  Method method() const { return method_; }
  std::size_t bands() const { return bands_; }

  // pixels: rows x bands. Returns the number of pixels scored by convention
  // (zero-norm SAM pixels, ACE pixels equal to the mean).
  std::size_t score(std::span<const double> pixels, std::span<double> out) const;

  // Splits into fixed blocks of kBlockRows so results do not depend on
  // `threads`.
  std::size_t score_parallel(std::span<const double> pixels, std::span<double> out,
                             unsigned threads) const;

  static constexpr std::size_t kBlockRows = 4096;

 private:
  Method method_;
  std::size_t bands_;
  Eigen::VectorXd target_;
  double target_norm_ = 0.0;
  Eigen::VectorXd center_;  // subtracted before the linear/quadratic forms
  Eigen::VectorXd filter_;  // MF/CEM weight vector
  Eigen::VectorXd whitened_target_;
  double whitened_target_norm2_ = 0.0;
  Eigen::MatrixXd factor_;  // ACE whitening (lower Cholesky factor)
};

// Scores every pixel of `cube`, normalizing MF/ACE/CEM per region. SAM keeps
// the negated angle. Non-finite scores raise Error(numeric) naming the pixel.
ScoreMap score_region(const SpectralCube& cube, Method method, const BackgroundModel& model,
                      const Signature& target, const DetectOptions& options = {});

// Records raw_min/raw_max; min-max maps to [0, 1] unless the map is constant,
// in which case `constant` is set and values are left as they are.
void normalize_scores(ScoreMap& map);

// Throws Error(numeric) naming the first non-finite score.
void check_finite(const ScoreMap& map);

}  // namespace hsd
