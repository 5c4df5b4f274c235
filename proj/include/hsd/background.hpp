#pragma once

// Background statistics (mean, covariance, raw second moment), their ridged
// inverses, and whitening.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hsd/scene.hpp"

namespace hsd {

// Target spectrum t.
struct Signature {
  std::vector<double> values;
  std::string label;

  std::size_t bands() const { return values.size(); }
};

// Validates finiteness, non-zero norm and (when expected_bands > 0) length.
Signature make_signature(std::vector<double> values, std::string label,
                         std::size_t expected_bands = 0);

struct BackgroundModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;     // N-1 denominator
  Eigen::MatrixXd second_moment;  // (1/N) sum x x^T over raw spectra
  Eigen::MatrixXd cov_inverse;             // (cov + ridge I)^-1
  Eigen::MatrixXd second_moment_inverse;   // (R + ridge I)^-1
  Eigen::MatrixXd centered_moment_inverse; // ((N-1)/N cov + ridge I)^-1
  // Lower Cholesky factor of cov + ridge I.
  Eigen::MatrixXd cov_factor;
  double ridge = 0.0;
  std::size_t sample_count = 0;

  std::size_t bands() const { return static_cast<std::size_t>(mean.size()); }
};

// 1e-6 * trace(cov) / L, floored at 1e-12.
double default_ridge(const Eigen::MatrixXd& covariance);

// Builds the inverses and factor. A negative ridge selects default_ridge().
BackgroundModel model_from_moments(Eigen::VectorXd mean, Eigen::MatrixXd covariance,
                                   Eigen::MatrixXd second_moment, std::size_t sample_count,
                                   double ridge = -1.0);

// Streaming mean/covariance/second-moment accumulator.
//
// Rows are grouped into fixed blocks of kBlockRows in arrival order; block
// partial sums (shifted by the first row for numerical stability) are merged
// in a binary-counter cascade. The merge tree depends only on the row count,
// so the result is bit-identical for any thread count or feeding pattern.
class MomentAccumulator {
 public:
  static constexpr std::size_t kBlockRows = 256;

  explicit MomentAccumulator(std::size_t bands, unsigned threads = 1);

  // rows.size() must be a multiple of bands().
  void add(std::span<const double> rows);

  std::size_t bands() const { return bands_; }
  std::size_t count() const { return count_; }

  // Requires count() >= min_samples (at least 2). Rank-deficient populations
  // are accepted; the ridge keeps the inverses defined.
  BackgroundModel finish(double ridge = -1.0, std::size_t min_samples = 2);

 private:
  struct Partial {
    Eigen::VectorXd s1;
    Eigen::MatrixXd s2;  // lower triangle only
    std::size_t n = 0;
    int level = 0;
  };

  void flush_pending(bool include_partial_block);
  Partial block_partial(const double* rows, std::size_t n) const;
  static Partial merge(Partial a, Partial b);

  std::size_t bands_;
  unsigned threads_;
  std::size_t count_ = 0;
  Eigen::VectorXd shift_;
  std::vector<double> pending_;
  std::vector<Partial> stack_;
};

// Statistics over all rows of `pixels`, or only label-0 rows when
// exclude_positives is set (the table must then be labelled, and at least
// bands + 1 background rows must remain).
BackgroundModel estimate(const PixelTable& pixels, bool exclude_positives = false,
                         unsigned threads = 1);

// W (x - mean) with W^T W = (cov + ridge I)^-1.
Eigen::VectorXd whiten(const BackgroundModel& model, std::span<const double> x);

// Flat little-endian float64 blob: L, N, ridge, mean, cov, R (row-major);
// L and N stored as uint64.
std::string encode_model(const BackgroundModel& model);
void save_model(const BackgroundModel& model, const std::filesystem::path& path);
BackgroundModel load_model(const std::filesystem::path& path);

}  // namespace hsd
