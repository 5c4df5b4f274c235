#include "hsd/spectral_nn.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "binary_io.hpp"
#include "hsd/envi.hpp"
#include "hsd/error.hpp"
#include "hsd/parallel.hpp"
#include "hsd/random.hpp"

namespace hsd::nn {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr char kMagic[] = "HSDSNN01";
constexpr double kMinBeta = 1e-3;

// Fixed-order dot product; every caller gets bit-identical sums.
double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

// Inference copy of the network with row-major weights.
class InferenceNet {
 public:
  explicit InferenceNet(const MlpParams& p)
      : w1_(p.w1), b1_(p.b1), w2_(p.w2), b2_(p.b2), w3_(p.w3), b3_(p.b3), beta1_(p.beta1),
        beta2_(p.beta2) {}

  std::size_t bands() const { return static_cast<std::size_t>(w1_.cols()); }

  [[gnu::noinline]] double eval(const double* x, std::vector<double>& h1,
                                std::vector<double>& h2) const {
    const auto n1 = static_cast<std::size_t>(w1_.rows());
    const auto n2 = static_cast<std::size_t>(w2_.rows());
    h1.resize(n1);
    h2.resize(n2);
    for (std::size_t i = 0; i < n1; ++i)
      h1[i] = pmish(dot(w1_.row(static_cast<Eigen::Index>(i)).data(), x, bands()) + b1_(static_cast<Eigen::Index>(i)), beta1_);
    for (std::size_t i = 0; i < n2; ++i)
      h2[i] = pmish(dot(w2_.row(static_cast<Eigen::Index>(i)).data(), h1.data(), n1) + b2_(static_cast<Eigen::Index>(i)), beta2_);
    return sigmoid(dot(w3_.data(), h2.data(), n2) + b3_);
  }

 private:
  RowMatrix w1_;
  VectorXd b1_;
  RowMatrix w2_;
  VectorXd b2_;
  Eigen::RowVectorXd w3_;
  double b3_, beta1_, beta2_;
};

// PMish value and both partial derivatives for every element of z, sharing
// one exp, log1p and tanh per element.
struct Activation {
  MatrixXd value, dx, dbeta;
};

Activation activate(const MatrixXd& z, double beta) {
  Activation a{MatrixXd(z.rows(), z.cols()), MatrixXd(z.rows(), z.cols()), MatrixXd(z.rows(), z.cols())};
  const Eigen::Index n = z.size();
  const double* zp = z.data();
  double *v = a.value.data(), *dx = a.dx.data(), *db = a.dbeta.data();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = zp[i];
    const double e = std::exp(-std::abs(x));
    const double sp = std::max(x, 0.0) + std::log1p(e);
    const double sig = x >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
    const double t = std::tanh(beta * sp);
    const double sech2 = 1.0 - t * t;
    v[i] = x * t;
    dx[i] = t + x * beta * sig * sech2;
    db[i] = x * sp * sech2;
  }
  return a;
}

// Sum (not mean) of losses and gradients over one block of rows.
double block_loss_and_gradient(const MlpParams& p, const double* rows, const std::uint8_t* labels,
                               std::size_t n, double w_pos, MlpParams& g) {
  const auto L = p.w1.cols();
  const auto B = static_cast<Eigen::Index>(n);
  Eigen::Map<const MatrixXd> x(rows, L, B);

  const MatrixXd z1 = (p.w1 * x).colwise() + p.b1;
  const Activation a1 = activate(z1, p.beta1);
  const MatrixXd z2 = (p.w2 * a1.value).colwise() + p.b2;
  const Activation a2 = activate(z2, p.beta2);
  const Eigen::RowVectorXd z3 = (p.w3 * a2.value).array() + p.b3;

  double loss = 0.0;
  Eigen::RowVectorXd d3(B);
  for (Eigen::Index i = 0; i < B; ++i) {
    const double prob = sigmoid(z3(i));
    const int y = labels[i];
    loss += weighted_bce(prob, y, w_pos);
    // The clamped loss is flat once p leaves [clamp, 1 - clamp].
    const bool clamped = prob < kProbabilityClamp || prob > 1.0 - kProbabilityClamp;
    d3(i) = clamped ? 0.0 : y ? w_pos * (prob - 1.0) : prob;
  }

  g.w3 = d3 * a2.value.transpose();
  g.b3 = d3.sum();
  const MatrixXd dh2 = p.w3.transpose() * d3;
  g.beta2 = dh2.cwiseProduct(a2.dbeta).sum();
  const MatrixXd dz2 = dh2.cwiseProduct(a2.dx);
  g.w2 = dz2 * a1.value.transpose();
  g.b2 = dz2.rowwise().sum();
  const MatrixXd dh1 = p.w2.transpose() * dz2;
  g.beta1 = dh1.cwiseProduct(a1.dbeta).sum();
  const MatrixXd dz1 = dh1.cwiseProduct(a1.dx);
  g.w1 = dz1 * x.transpose();
  g.b1 = dz1.rowwise().sum();
  return loss;
}

struct BlockResult {
  double loss = 0.0;
  MlpParams grad;
};

BlockResult add(BlockResult a, BlockResult b) {
  a.loss += b.loss;
  a.grad.w1 += b.grad.w1;
  a.grad.b1 += b.grad.b1;
  a.grad.w2 += b.grad.w2;
  a.grad.b2 += b.grad.b2;
  a.grad.w3 += b.grad.w3;
  a.grad.b3 += b.grad.b3;
  a.grad.beta1 += b.grad.beta1;
  a.grad.beta2 += b.grad.beta2;
  return a;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open model " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_label_counts(const PixelTable& pixels, std::size_t* pos, std::size_t* neg) {
  if (!pixels.labels) fail(ErrorKind::validation, "training pixels need labels");
  *pos = pixels.positive_count();
  *neg = pixels.size() - *pos;
  if (*pos == 0) fail(ErrorKind::validation, "training pixels contain no positives");
  if (*neg == 0) fail(ErrorKind::validation, "training pixels contain no negatives");
}

}  // namespace

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double pmish(double x, double beta) { return x * std::tanh(beta * softplus(x)); }

double pmish_dx(double x, double beta) {
  const double t = std::tanh(beta * softplus(x));
  return t + x * beta * sigmoid(x) * (1.0 - t * t);
}

double pmish_dbeta(double x, double beta) {
  const double s = softplus(x);
  const double t = std::tanh(beta * s);
  return x * s * (1.0 - t * t);
}

std::size_t MlpParams::parameter_count() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size() + w3.size()) + 3;
}

MlpParams MlpParams::zeros(std::size_t bands, std::size_t h1, std::size_t h2) {
  const auto L = static_cast<Eigen::Index>(bands);
  const auto n1 = static_cast<Eigen::Index>(h1);
  const auto n2 = static_cast<Eigen::Index>(h2);
  MlpParams p;
  p.w1 = MatrixXd::Zero(n1, L);
  p.b1 = VectorXd::Zero(n1);
  p.w2 = MatrixXd::Zero(n2, n1);
  p.b2 = VectorXd::Zero(n2);
  p.w3 = Eigen::RowVectorXd::Zero(n2);
  return p;
}

MlpParams MlpParams::glorot(std::size_t bands, std::uint64_t seed, std::size_t h1, std::size_t h2) {
  MlpParams p = zeros(bands, h1, h2);
  Rng rng(seed);
  auto fill = [&](auto& m) {
    const double limit = std::sqrt(6.0 / static_cast<double>(m.cols() + m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-limit, limit);
  };
  fill(p.w1);
  fill(p.w2);
  fill(p.w3);
  return p;
}

std::vector<double> pack(const MlpParams& p) {
  std::vector<double> flat;
  flat.reserve(p.parameter_count());
  auto put = [&](const auto& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  };
  put(p.w1);
  put(p.b1);
  put(p.w2);
  put(p.b2);
  put(p.w3);
  flat.push_back(p.b3);
  flat.push_back(p.beta1);
  flat.push_back(p.beta2);
  return flat;
}

void unpack(std::span<const double> flat, MlpParams& p) {
  if (flat.size() != p.parameter_count())
    fail(ErrorKind::validation, "flat parameter vector has the wrong length");
  std::size_t k = 0;
  auto get = [&](auto& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat[k++];
  };
  get(p.w1);
  get(p.b1);
  get(p.w2);
  get(p.b2);
  get(p.w3);
  p.b3 = flat[k++];
  p.beta1 = flat[k++];
  p.beta2 = flat[k++];
}

double forward(const MlpParams& params, std::span<const double> x) {
  if (x.size() != params.bands())
    fail(ErrorKind::validation, "pixel has " + std::to_string(x.size()) + " bands, network expects " +
                                    std::to_string(params.bands()));
  std::vector<double> h1, h2;
  return InferenceNet(params).eval(x.data(), h1, h2);
}

std::vector<double> forward_batch(const MlpParams& params, std::span<const double> rows,
                                  unsigned threads) {
  const std::size_t L = params.bands();
  if (L == 0 || rows.size() % L)
    fail(ErrorKind::validation, "pixel rows do not match the network band count");
  const InferenceNet net(params);
  std::vector<double> out(rows.size() / L);
  parallel_for(out.size(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> h1, h2;
    for (std::size_t i = begin; i < end; ++i) out[i] = net.eval(rows.data() + i * L, h1, h2);
  });
  return out;
}

double weighted_bce(double p, int y, double w_pos) {
  const double q = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return y ? -w_pos * std::log(q) : -std::log(1.0 - q);
}

double loss_and_gradient(const MlpParams& params, std::span<const double> rows,
                         std::span<const std::uint8_t> labels, double w_pos, MlpParams* grad,
                         unsigned threads) {
  const std::size_t L = params.bands();
  const std::size_t n = labels.size();
  if (n == 0) fail(ErrorKind::validation, "empty training batch");
  if (rows.size() != n * L) fail(ErrorKind::validation, "batch rows do not match labels and bands");

  const std::size_t blocks = (n + kGradientBlock - 1) / kGradientBlock;
  std::vector<BlockResult> partial(blocks);
  parallel_for(blocks, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) {
      const std::size_t r0 = b * kGradientBlock;
      const std::size_t count = std::min(kGradientBlock, n - r0);
      partial[b].loss = block_loss_and_gradient(params, rows.data() + r0 * L, labels.data() + r0,
                                                count, w_pos, partial[b].grad);
    }
  });
  BlockResult total = tree_reduce(std::move(partial), add);
  const double scale = 1.0 / static_cast<double>(n);
  if (grad) {
    *grad = std::move(total.grad);
    grad->w1 *= scale;
    grad->b1 *= scale;
    grad->w2 *= scale;
    grad->b2 *= scale;
    grad->w3 *= scale;
    grad->b3 *= scale;
    grad->beta1 *= scale;
    grad->beta2 *= scale;
  }
  return total.loss * scale;
}

// ---------------------------------------------------------------------------

TrainResult train(const PixelTable& pixels, const TrainConfig& config) {
  if (config.epochs == 0) fail(ErrorKind::validation, "epochs must be positive");
  if (!(config.learning_rate > 0.0)) fail(ErrorKind::validation, "learning rate must be positive");
  if (config.batch_size == 0) fail(ErrorKind::validation, "batch size must be positive");
  std::size_t pos = 0, neg = 0;
  check_label_counts(pixels, &pos, &neg);

  const std::size_t L = pixels.bands;
  const std::size_t N = pixels.size();
  const auto Li = static_cast<Eigen::Index>(L);

  TrainResult result;
  result.positive_weight = config.positive_weight.value_or(static_cast<double>(neg) / static_cast<double>(pos));
  if (!(result.positive_weight > 0.0) || !std::isfinite(result.positive_weight))
    fail(ErrorKind::validation, "positive weight must be positive and finite");

  SpectralModel& model = result.model;
  model.band_mean = VectorXd::Zero(Li);
  model.band_std = VectorXd::Ones(Li);
  if (config.standardize) {
    Eigen::Map<const MatrixXd> all(pixels.spectra.data(), Li, static_cast<Eigen::Index>(N));
    model.band_mean = all.rowwise().mean();
    for (Eigen::Index b = 0; b < Li; ++b) {
      const double var = (all.row(b).array() - model.band_mean(b)).square().mean();
      const double sd = std::sqrt(var);
      model.band_std(b) = sd > 1e-12 * (1.0 + std::abs(model.band_mean(b))) ? sd : 1.0;
    }
  }
  std::vector<double> standardized(pixels.spectra.size());
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t b = 0; b < L; ++b)
      standardized[i * L + b] = (pixels.spectra[i * L + b] - model.band_mean(static_cast<Eigen::Index>(b))) /
                                model.band_std(static_cast<Eigen::Index>(b));

  Rng rng(config.seed);
  model.params = MlpParams::glorot(L, rng.next());
  std::vector<double> theta = pack(model.params);
  std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0);
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<double> batch_rows;
  std::vector<std::uint8_t> batch_labels;
  MlpParams grad;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < N; start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, N - start);
      batch_rows.resize(count * L);
      batch_labels.resize(count);
      for (std::size_t k = 0; k < count; ++k) {
        const std::size_t src = order[start + k];
        std::copy_n(standardized.data() + src * L, L, batch_rows.data() + k * L);
        batch_labels[k] = (*pixels.labels)[src];
      }
      const double loss = loss_and_gradient(model.params, batch_rows, batch_labels,
                                            result.positive_weight, &grad, config.threads);
      if (!std::isfinite(loss))
        fail(ErrorKind::numeric, "training loss became non-finite in epoch " + std::to_string(epoch + 1));
      epoch_loss += loss * static_cast<double>(count);

      ++step;
      const std::vector<double> g = pack(grad);
      const double c1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < theta.size(); ++k) {
        m[k] = config.adam_beta1 * m[k] + (1.0 - config.adam_beta1) * g[k];
        v[k] = config.adam_beta2 * v[k] + (1.0 - config.adam_beta2) * g[k] * g[k];
        theta[k] -= config.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + config.adam_eps);
      }
      // PMish shape parameters stay positive.
      theta[theta.size() - 2] = std::max(theta[theta.size() - 2], kMinBeta);
      theta[theta.size() - 1] = std::max(theta[theta.size() - 1], kMinBeta);
      unpack(theta, model.params);
    }
    epoch_loss /= static_cast<double>(N);
    if (!std::isfinite(epoch_loss))
      fail(ErrorKind::numeric, "training loss became non-finite in epoch " + std::to_string(epoch + 1));
    result.epoch_loss.push_back(epoch_loss);
  }
  return result;
}

ScoreMap nn_score_region(const SpectralCube& cube, const SpectralModel& model, unsigned threads) {
  const std::size_t L = model.bands();
  if (cube.bands() != L)
    fail(ErrorKind::validation, "cube has " + std::to_string(cube.bands()) + " bands, model expects " +
                                    std::to_string(L));
  if (static_cast<std::size_t>(model.band_mean.size()) != L ||
      static_cast<std::size_t>(model.band_std.size()) != L)
    fail(ErrorKind::validation, "model is missing its standardization statistics");

  const InferenceNet net(model.params);
  ScoreMap map;
  map.region = extent_of(cube);
  map.method = Method::nn;
  map.scores.resize(cube.pixel_count());
  parallel_for(cube.pixel_count(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> x(L), h1, h2;
    for (std::size_t i = begin; i < end; ++i) {
      const auto px = cube.pixel(i);
      for (std::size_t b = 0; b < L; ++b)
        x[b] = (px[b] - model.band_mean(static_cast<Eigen::Index>(b))) / model.band_std(static_cast<Eigen::Index>(b));
      map.scores[i] = net.eval(x.data(), h1, h2);
    }
  });
  for (std::size_t i = 0; i < map.scores.size(); ++i)
    if (!std::isfinite(map.scores[i]))
      fail(ErrorKind::numeric, "nn score is not finite at pixel " + std::to_string(i));
  const auto [lo, hi] = std::minmax_element(map.scores.begin(), map.scores.end());
  map.raw_min = *lo;
  map.raw_max = *hi;
  map.constant = *lo == *hi;
  return map;
}

// ---------------------------------------------------------------------------

std::string encode_model(const SpectralModel& model) {
  const MlpParams& p = model.params;
  std::string out(kMagic, 8);
  detail::put_u64(out, p.bands());
  detail::put_u64(out, static_cast<std::uint64_t>(p.w1.rows()));
  detail::put_u64(out, static_cast<std::uint64_t>(p.w2.rows()));
  detail::put_u64(out, 1);
  detail::put_f64(out, p.beta1);
  detail::put_f64(out, p.beta2);
  for (Eigen::Index i = 0; i < model.band_mean.size(); ++i) detail::put_f64(out, model.band_mean(i));
  for (Eigen::Index i = 0; i < model.band_std.size(); ++i) detail::put_f64(out, model.band_std(i));
  auto put = [&](const auto& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) detail::put_f64(out, m(r, c));
  };
  put(p.w1);
  put(p.b1);
  put(p.w2);
  put(p.b2);
  put(p.w3);
  detail::put_f64(out, p.b3);
  return out;
}

SpectralModel decode_model(std::string_view bytes) {
  detail::Reader rd(bytes, "spectral model");
  if (rd.raw(8) != std::string_view(kMagic, 8))
    fail(ErrorKind::validation, "not a spectral model file (bad magic)");
  const auto L = rd.u64(), h1 = rd.u64(), h2 = rd.u64(), out = rd.u64();
  if (L == 0 || h1 == 0 || h2 == 0 || out != 1 || L > 100000 || h1 > 100000 || h2 > 100000)
    fail(ErrorKind::validation, "spectral model has invalid layer dimensions");
  SpectralModel model;
  model.params = MlpParams::zeros(L, h1, h2);
  MlpParams& p = model.params;
  p.beta1 = rd.f64();
  p.beta2 = rd.f64();
  model.band_mean.resize(static_cast<Eigen::Index>(L));
  model.band_std.resize(static_cast<Eigen::Index>(L));
  for (auto& v : model.band_mean) v = rd.f64();
  for (auto& v : model.band_std) v = rd.f64();
  auto get = [&](auto& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rd.f64();
  };
  get(p.w1);
  get(p.b1);
  get(p.w2);
  get(p.b2);
  get(p.w3);
  p.b3 = rd.f64();
  if (!rd.done()) fail(ErrorKind::validation, "spectral model has trailing bytes");
  const auto flat = pack(p);
  if (!std::all_of(flat.begin(), flat.end(), [](double v) { return std::isfinite(v); }) ||
      !model.band_mean.allFinite() || !(model.band_std.array() > 0.0).all())
    fail(ErrorKind::validation, "spectral model contains invalid values");
  if (!(p.beta1 > 0.0) || !(p.beta2 > 0.0))
    fail(ErrorKind::validation, "spectral model has a non-positive PMish beta");
  return model;
}

void save_model(const SpectralModel& model, const std::filesystem::path& path) {
  envi::write_file_atomic(path, encode_model(model));
}

SpectralModel load_model(const std::filesystem::path& path) { return decode_model(read_file(path)); }

std::string loss_csv(const std::vector<double>& epoch_loss) {
  std::string out = "epoch,mean_loss\n";
  for (std::size_t i = 0; i < epoch_loss.size(); ++i) {
    char buf[40];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, epoch_loss[i]);
    out += std::to_string(i + 1) + "," + std::string(buf, ptr) + "\n";
  }
  return out;
}

}  // namespace hsd::nn
