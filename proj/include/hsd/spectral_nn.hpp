#pragma once

// Fully connected spectral classifier: two PMish hidden layers and a sigmoid
// output, trained with class-weighted binary cross-entropy and Adam.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hsd/cube.hpp"
#include "hsd/scene.hpp"
#include "hsd/score_map.hpp"

namespace hsd::nn {

inline constexpr std::size_t kHidden1 = 128;
inline constexpr std::size_t kHidden2 = 64;

// log(1 + e^x) without overflow.
double softplus(double x);
double sigmoid(double x);

// x * tanh(beta * softplus(x)); beta = 1 is Mish.
double pmish(double x, double beta);
double pmish_dx(double x, double beta);
double pmish_dbeta(double x, double beta);

struct MlpParams {
  Eigen::MatrixXd w1;  // h1 x L
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // h2 x h1
  Eigen::VectorXd b2;
  Eigen::RowVectorXd w3;  // 1 x h2
  double b3 = 0.0;
  double beta1 = 1.0;  // PMish shape, hidden layer 1
  double beta2 = 1.0;  // PMish shape, hidden layer 2

  std::size_t bands() const { return static_cast<std::size_t>(w1.cols()); }
  std::size_t parameter_count() const;

  static MlpParams zeros(std::size_t bands, std::size_t h1 = kHidden1, std::size_t h2 = kHidden2);
  // Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases, beta = 1.
  static MlpParams glorot(std::size_t bands, std::uint64_t seed, std::size_t h1 = kHidden1,
                          std::size_t h2 = kHidden2);
};

// Flat views in the order w1, b1, w2, b2, w3, b3, beta1, beta2 (matrices
// row-major). Used by the optimizer and by gradient checks.
std::vector<double> pack(const MlpParams& p);
void unpack(std::span<const double> flat, MlpParams& p);

// sigma(W3 h2 + b3) for one standardized pixel.
double forward(const MlpParams& params, std::span<const double> x);
// rows x bands; each output is computed exactly as forward() would.
std::vector<double> forward_batch(const MlpParams& params, std::span<const double> rows,
                                  unsigned threads = 1);

inline constexpr double kProbabilityClamp = 1e-12;

// -[w_pos y log p + (1 - y) log(1 - p)], p clamped to [1e-12, 1 - 1e-12].
double weighted_bce(double p, int y, double w_pos);

// Mean weighted BCE over the batch and its gradient with respect to every
// parameter (including both betas); pixels whose p lies outside the clamp
// range contribute no gradient. Rows are processed in fixed blocks of
// kGradientBlock and block sums are tree-reduced, so the result does not
// depend on `threads`.
inline constexpr std::size_t kGradientBlock = 256;
double loss_and_gradient(const MlpParams& params, std::span<const double> rows,
                         std::span<const std::uint8_t> labels, double w_pos, MlpParams* grad,
                         unsigned threads = 1);

struct TrainConfig {
  std::size_t epochs = 50;
  double learning_rate = 0.0002;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 1024;
  // Unset: N_neg / N_pos of the training pixels.
  std::optional<double> positive_weight;
  std::uint64_t seed = 0;
  bool standardize = true;
  unsigned threads = 1;
};

// Network plus the per-band standardization applied before the first layer.
struct SpectralModel {
  MlpParams params;
  Eigen::VectorXd band_mean;
  Eigen::VectorXd band_std;

  std::size_t bands() const { return params.bands(); }
};

struct TrainResult {
  SpectralModel model;
  std::vector<double> epoch_loss;
  double positive_weight = 1.0;
};

TrainResult train(const PixelTable& pixels, const TrainConfig& config);

// Per-pixel target probability; values stay in (0, 1) and are not normalized.
ScoreMap nn_score_region(const SpectralCube& cube, const SpectralModel& model,
                         unsigned threads = 1);

// Binary layout: "HSDSNN01", L, h1, h2, 1 (uint64), beta1, beta2, band mean,
// band std, then w1, b1, w2, b2, w3, b3 row-major, all little-endian float64.
std::string encode_model(const SpectralModel& model);
SpectralModel decode_model(std::string_view bytes);
void save_model(const SpectralModel& model, const std::filesystem::path& path);
SpectralModel load_model(const std::filesystem::path& path);

// "epoch,mean_loss" rows, epochs numbered from 1.
std::string loss_csv(const std::vector<double>& epoch_loss);

}  // namespace hsd::nn
