#include "hsd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hsd/error.hpp"
#include "hsd/random.hpp"
#include "hsd/scene.hpp"

namespace hsd::synth {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Independent generator streams derived from the scene seed.
constexpr std::uint64_t kModelStream = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kPixelStream = 0xD1B54A32D192ED03ull;
constexpr std::uint64_t kContaminationStream = 0x8CB92BA72F3D8DD7ull;

std::vector<double> smooth_spectrum(std::size_t bands, Rng& rng, double baseline) {
  std::vector<double> out(bands, baseline);
  const double L = static_cast<double>(bands);
  for (int bump = 0; bump < 3; ++bump) {
    const double amplitude = rng.uniform(0.5, 1.5);
    const double center = rng.uniform(0.0, L);
    const double width = rng.uniform(L / 10.0, L / 3.0) + 0.5;
    for (std::size_t b = 0; b < bands; ++b) {
      const double u = (static_cast<double>(b) - center) / width;
      out[b] += amplitude * std::exp(-0.5 * u * u);
    }
  }
  return out;
}

}  // namespace

void validate(const SynthSpec& spec) {
  if (spec.lines == 0 || spec.samples == 0 || spec.bands == 0)
    fail(ErrorKind::validation, "synthetic scene extents must be positive");
  const auto L = static_cast<Eigen::Index>(spec.bands);
  if (spec.background_mean && spec.background_mean->size() != L)
    fail(ErrorKind::validation, "background mean length does not match bands");
  if (spec.covariance_factor && (spec.covariance_factor->rows() != L || spec.covariance_factor->cols() < 1))
    fail(ErrorKind::validation, "covariance factor must have one row per band");
  if (spec.diagonal_loading && !(*spec.diagonal_loading >= 0.0))
    fail(ErrorKind::validation, "diagonal loading must be non-negative");
  if (spec.target_signature && spec.target_signature->size() != spec.bands)
    fail(ErrorKind::validation, "target signature length does not match bands");
  if (!(spec.noise_floor >= 0.0)) fail(ErrorKind::validation, "noise floor must be non-negative");
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& p : spec.plants) {
    if (p.line >= spec.lines || p.sample >= spec.samples)
      fail(ErrorKind::validation, "plant at (" + std::to_string(p.line) + ", " + std::to_string(p.sample) +
                                      ") lies outside the scene");
    if (!(p.abundance > 0.0 && p.abundance <= 1.0))
      fail(ErrorKind::validation, "plant abundance must lie in (0, 1]");
    if (!seen.emplace(p.line, p.sample).second)
      fail(ErrorKind::validation, "duplicate plant at (" + std::to_string(p.line) + ", " +
                                      std::to_string(p.sample) + ")");
  }
}

SceneModel scene_model(const SynthSpec& spec) {
  validate(spec);
  const auto L = static_cast<Eigen::Index>(spec.bands);
  Rng rng(spec.seed ^ kModelStream);
  SceneModel m;

  // Always draw every generated quantity so overrides do not shift streams.
  const auto mean = smooth_spectrum(spec.bands, rng, 1.0);
  MatrixXd factor(L, L);
  const double scale = 1.0 / std::sqrt(static_cast<double>(L));
  for (Eigen::Index r = 0; r < L; ++r)
    for (Eigen::Index c = 0; c < L; ++c) factor(r, c) = scale * rng.normal();
  const auto target = smooth_spectrum(spec.bands, rng, 0.5);

  m.mean = spec.background_mean.value_or(Eigen::Map<const VectorXd>(mean.data(), L));
  m.factor = spec.covariance_factor.value_or(factor);
  const MatrixXd aat = m.factor * m.factor.transpose();
  m.loading = spec.diagonal_loading.value_or(0.01 * aat.diagonal().mean());
  m.covariance = aat;
  m.covariance.diagonal().array() += m.loading + spec.noise_floor * spec.noise_floor;
  m.target = spec.target_signature.value_or(target);
  return m;
}

Scene generate(const SynthSpec& spec) {
  const SceneModel m = scene_model(spec);
  const std::size_t L = spec.bands;
  const auto Li = static_cast<Eigen::Index>(L);
  const auto K = m.factor.cols();

  std::vector<double> abundance(spec.lines * spec.samples, 0.0);
  for (const auto& p : spec.plants) abundance[p.line * spec.samples + p.sample] = p.abundance;

  Scene scene;
  scene.cube = SpectralCube(spec.lines, spec.samples, L);
  std::vector<std::uint8_t> labels(spec.lines * spec.samples, 0);

  Rng rng(spec.seed ^ kPixelStream);
  Rng contamination_rng(spec.seed ^ kContaminationStream);
  const double root_loading = std::sqrt(m.loading);
  VectorXd z(K), dev(Li);
  for (std::size_t i = 0; i < spec.lines * spec.samples; ++i) {
    for (Eigen::Index k = 0; k < K; ++k) z(k) = rng.normal();
    dev.noalias() = m.factor * z;
    for (Eigen::Index b = 0; b < Li; ++b) dev(b) += root_loading * rng.normal();
    const bool contaminate = contamination_rng.uniform() < 0.05;

    auto px = scene.cube.pixel(i);
    const double a = abundance[i];
    if (a > 0.0) {
      labels[i] = 1;
      for (std::size_t b = 0; b < L; ++b)
        px[b] = a * m.target[b] + (1.0 - a) * (m.mean(static_cast<Eigen::Index>(b)) + dev(static_cast<Eigen::Index>(b)));
    } else {
      const double s = spec.contamination && contaminate ? 3.0 : 1.0;
      if (s != 1.0) ++scene.contaminated_pixels;
      for (std::size_t b = 0; b < L; ++b)
        px[b] = m.mean(static_cast<Eigen::Index>(b)) + s * dev(static_cast<Eigen::Index>(b));
    }
    for (std::size_t b = 0; b < L; ++b) {
      const double n = rng.normal();
      if (spec.noise_floor > 0.0) px[b] += spec.noise_floor * n;
    }
  }

  scene.mask = make_mask(extent_of(scene.cube), std::move(labels));
  scene.target = make_signature(m.target, "synthetic target");
  const MatrixXd second = m.covariance + m.mean * m.mean.transpose();
  scene.truth = model_from_moments(m.mean, m.covariance, second, spec.lines * spec.samples);
  return scene;
}

double deflection(const SceneModel& model, double abundance) {
  const auto L = static_cast<Eigen::Index>(model.target.size());
  const VectorXd d = Eigen::Map<const VectorXd>(model.target.data(), L) - model.mean;
  Eigen::LLT<MatrixXd> llt(model.covariance);
  if (llt.info() != Eigen::Success)
    fail(ErrorKind::degenerate, "synthetic covariance is not positive definite");
  return abundance * std::sqrt(d.dot(llt.solve(d)));
}

double snr_of(const SynthSpec& spec) {
  if (spec.plants.empty()) return 0.0;
  double a = 1.0;
  for (const auto& p : spec.plants) a = std::min(a, p.abundance);
  return deflection(scene_model(spec), a);
}

double abundance_for_deflection(const SynthSpec& spec, double target_deflection) {
  const double unit = deflection(scene_model(spec), 1.0);
  if (!(unit > 0.0)) fail(ErrorKind::degenerate, "target equals the background mean");
  return target_deflection / unit;
}

std::vector<Plant> scatter_plants(std::size_t lines, std::size_t samples, std::size_t count,
                                  double abundance_lo, double abundance_hi, std::uint64_t seed) {
  if (count > lines * samples) fail(ErrorKind::validation, "more plants than pixels");
  Rng rng(seed);
  std::set<std::pair<std::size_t, std::size_t>> used;
  std::vector<Plant> plants;
  while (plants.size() < count) {
    const std::size_t l = rng.below(lines), s = rng.below(samples);
    if (!used.emplace(l, s).second) continue;
    plants.push_back({l, s, rng.uniform(abundance_lo, abundance_hi)});
  }
  return plants;
}

}  // namespace hsd::synth
