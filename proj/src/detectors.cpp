#include "hsd/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "hsd/error.hpp"
#include "hsd/parallel.hpp"
#include "hsd/scene.hpp"

namespace hsd {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Eigen::Map<const VectorXd> as_vector(std::span<const double> x) {
  return {x.data(), static_cast<Eigen::Index>(x.size())};
}

// Angle between x and t from their cosine. arccos is ill-conditioned near 1,
// so small angles come from the chord between the unit vectors instead.
double spectral_angle(const double* x, const double* t, std::size_t L, double x_norm, double t_norm,
                      double cosine) {
  if (cosine < 0.9) return std::acos(std::max(cosine, -1.0));
  double chord2 = 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    const double d = x[i] / x_norm - t[i] / t_norm;
    chord2 += d * d;
  }
  return 2.0 * std::asin(std::min(1.0, 0.5 * std::sqrt(chord2)));
}

void check_bands(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    fail(ErrorKind::validation, std::string(what) + " has " + std::to_string(got) +
                                    " bands, expected " + std::to_string(want));
}

// (t - mu), rejecting t == mu.
VectorXd centered_target(const BackgroundModel& model, const Signature& target) {
  check_bands(target.bands(), model.bands(), "signature");
  VectorXd d = as_vector(target.values) - model.mean;
  if (d.isZero(0.0))
    fail(ErrorKind::degenerate, "target signature equals the background mean");
  return d;
}

double positive_form(double q, const char* what) {
  if (!(q > 0.0) || !std::isfinite(q))
    fail(ErrorKind::degenerate, std::string("degenerate target: ") + what + " is not positive");
  return q;
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::sam: return "sam";
    case Method::mf: return "mf";
    case Method::ace: return "ace";
    case Method::cem: return "cem";
    case Method::nn: return "nn";
  }
  return "sam";
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : {Method::sam, Method::mf, Method::ace, Method::cem, Method::nn})
    if (to_string(m) == name) return m;
  return std::nullopt;
}

double sam_score(std::span<const double> x, const Signature& target) {
  check_bands(x.size(), target.bands(), "pixel");
  double xt = 0.0, xx = 0.0, tt = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xt += x[i] * target.values[i];
    xx += x[i] * x[i];
    tt += target.values[i] * target.values[i];
  }
  if (xx == 0.0 || tt == 0.0) return -std::numbers::pi / 2.0;
  const double xn = std::sqrt(xx), tn = std::sqrt(tt);
  return -spectral_angle(x.data(), target.values.data(), x.size(), xn, tn, xt / (xn * tn));
}

double mf_score(std::span<const double> x, const BackgroundModel& model, const Signature& target) {
  check_bands(x.size(), model.bands(), "pixel");
  const VectorXd d = centered_target(model, target);
  const VectorXd q = model.cov_inverse * d;
  const double norm = positive_form(d.dot(q), "(t-mu)' S^-1 (t-mu)");
  return q.dot(as_vector(x) - model.mean) / norm;
}

double ace_score(std::span<const double> x, const BackgroundModel& model, const Signature& target) {
  check_bands(x.size(), model.bands(), "pixel");
  const VectorXd d = centered_target(model, target);
  const VectorXd xc = as_vector(x) - model.mean;
  const VectorXd q = model.cov_inverse * d;
  const double tt = positive_form(d.dot(q), "(t-mu)' S^-1 (t-mu)");
  const double xx = xc.dot(model.cov_inverse * xc);
  if (!(xx > 0.0)) return 0.0;
  const double tx = q.dot(xc);
  return std::clamp(tx * tx / (tt * xx), 0.0, 1.0);
}

double cem_score(std::span<const double> x, const BackgroundModel& model, const Signature& target,
                 bool centered) {
  check_bands(x.size(), model.bands(), "pixel");
  if (centered) {
    const VectorXd d = centered_target(model, target);
    const VectorXd q = model.centered_moment_inverse * d;
    const double norm = positive_form(d.dot(q), "(t-mu)' C^-1 (t-mu)");
    return q.dot(as_vector(x) - model.mean) / norm;
  }
  check_bands(target.bands(), model.bands(), "signature");
  const VectorXd t = as_vector(target.values);
  const VectorXd q = model.second_moment_inverse * t;
  const double norm = positive_form(t.dot(q), "t' R^-1 t");
  return q.dot(as_vector(x)) / norm;
}

// ---------------------------------------------------------------------------

Detector::Detector(Method method, const BackgroundModel& model, const Signature& target,
                   const DetectOptions& options)
    : method_(method), bands_(target.bands()) {
  target_ = as_vector(target.values);
  target_norm_ = target_.norm();
  switch (method) {
    case Method::sam:
      if (target_norm_ == 0.0) fail(ErrorKind::degenerate, "signature is the zero vector");
      return;
    case Method::nn:
      fail(ErrorKind::validation, "the nn method is scored by the spectral network, not a detector kernel");
    default:
      break;
  }
  check_bands(target.bands(), model.bands(), "signature");
  if (method == Method::cem && !options.centered_cem) {
    center_ = VectorXd::Zero(static_cast<Eigen::Index>(bands_));
    const VectorXd q = model.second_moment_inverse * target_;
    filter_ = q / positive_form(target_.dot(q), "t' R^-1 t");
    return;
  }
  center_ = model.mean;
  const VectorXd d = centered_target(model, target);
  if (method == Method::mf) {
    const VectorXd q = model.cov_inverse * d;
    filter_ = q / positive_form(d.dot(q), "(t-mu)' S^-1 (t-mu)");
  } else if (method == Method::cem) {
    const VectorXd q = model.centered_moment_inverse * d;
    filter_ = q / positive_form(d.dot(q), "(t-mu)' C^-1 (t-mu)");
  } else {  // ace
    factor_ = model.cov_factor;
    whitened_target_ = factor_.triangularView<Eigen::Lower>().solve(d);
    whitened_target_norm2_ = positive_form(whitened_target_.squaredNorm(), "whitened target norm");
  }
}

std::size_t Detector::score(std::span<const double> pixels, std::span<double> out) const {
  if (pixels.size() != out.size() * bands_)
    fail(ErrorKind::validation, "pixel block does not match output size and band count");
  const auto L = static_cast<Eigen::Index>(bands_);
  const auto n = static_cast<Eigen::Index>(out.size());
  if (n == 0) return 0;
  Eigen::Map<const MatrixXd> x(pixels.data(), L, n);
  Eigen::Map<Eigen::RowVectorXd> y(out.data(), n);
  std::size_t dead = 0;

  switch (method_) {
    case Method::sam: {
      const Eigen::RowVectorXd dots = target_.transpose() * x;
      const Eigen::RowVectorXd norms = x.colwise().norm();
      for (Eigen::Index i = 0; i < n; ++i) {
        if (norms(i) == 0.0) {
          y(i) = -std::numbers::pi / 2.0;
          ++dead;
          continue;
        }
        y(i) = -spectral_angle(x.col(i).data(), target_.data(), bands_, norms(i), target_norm_,
                               dots(i) / (norms(i) * target_norm_));
      }
      break;
    }
    case Method::mf:
    case Method::cem: {
      const MatrixXd xc = x.colwise() - center_;
      y = filter_.transpose() * xc;
      break;
    }
    case Method::ace: {
      MatrixXd w = x.colwise() - center_;
      factor_.triangularView<Eigen::Lower>().solveInPlace(w);
      const Eigen::RowVectorXd num = whitened_target_.transpose() * w;
      const Eigen::RowVectorXd den = w.colwise().squaredNorm();
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!(den(i) > 0.0)) {
          y(i) = 0.0;
          ++dead;
          continue;
        }
        y(i) = std::clamp(num(i) * num(i) / (whitened_target_norm2_ * den(i)), 0.0, 1.0);
      }
      break;
    }
    case Method::nn:
      break;
  }
  return dead;
}

std::size_t Detector::score_parallel(std::span<const double> pixels, std::span<double> out,
                                     unsigned threads) const {
  const std::size_t n = out.size();
  const std::size_t blocks = (n + kBlockRows - 1) / kBlockRows;
  std::vector<std::size_t> dead(blocks, 0);
  parallel_for(blocks, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) {
      const std::size_t r0 = b * kBlockRows;
      const std::size_t rows = std::min(kBlockRows, n - r0);
      dead[b] = score(pixels.subspan(r0 * bands_, rows * bands_), out.subspan(r0, rows));
    }
  });
  std::size_t total = 0;
  for (auto d : dead) total += d;
  return total;
}

// ---------------------------------------------------------------------------

void normalize_scores(ScoreMap& map) {
  if (map.scores.empty()) return;
  const auto [lo, hi] = std::minmax_element(map.scores.begin(), map.scores.end());
  map.raw_min = *lo;
  map.raw_max = *hi;
  if (map.raw_max == map.raw_min) {
    map.constant = true;
    map.normalized = false;
    return;
  }
  const double range = map.raw_max - map.raw_min;
  for (double& v : map.scores) v = (v - map.raw_min) / range;
  map.normalized = true;
}

void check_finite(const ScoreMap& map) {
  for (std::size_t i = 0; i < map.scores.size(); ++i) {
    if (!std::isfinite(map.scores[i])) {
      const std::size_t line = map.region.line_offset + i / map.region.samples;
      const std::size_t sample = map.region.sample_offset + i % map.region.samples;
      fail(ErrorKind::numeric, std::string(to_string(map.method)) + " score is not finite at line " +
                                   std::to_string(line) + ", sample " + std::to_string(sample));
    }
  }
}

ScoreMap score_region(const SpectralCube& cube, Method method, const BackgroundModel& model,
                      const Signature& target, const DetectOptions& options) {
  check_bands(cube.bands(), target.bands(), "cube");
  const Detector detector(method, model, target, options);
  ScoreMap map;
  map.region = extent_of(cube);
  map.method = method;
  map.scores.assign(cube.pixel_count(), 0.0);
  map.dead_pixels = detector.score_parallel(cube.values(), map.scores, options.threads);
  check_finite(map);
  if (method == Method::sam || !options.normalize) {
    const auto [lo, hi] = std::minmax_element(map.scores.begin(), map.scores.end());
    map.raw_min = *lo;
    map.raw_max = *hi;
    map.constant = *lo == *hi;
  } else {
    normalize_scores(map);
  }
  return map;
}

}  // namespace hsd
