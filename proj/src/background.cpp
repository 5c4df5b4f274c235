#include "hsd/background.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "hsd/envi.hpp"
#include "hsd/error.hpp"
#include "hsd/parallel.hpp"

namespace hsd {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd symmetric_from_lower(const MatrixXd& lower) {
  MatrixXd out = lower.selfadjointView<Eigen::Lower>();
  return out;
}

// Inverse of a symmetric positive definite matrix through Cholesky.
MatrixXd spd_inverse(const MatrixXd& m, const char* what) {
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    fail(ErrorKind::degenerate, std::string(what) + " is not positive definite after ridge");
  MatrixXd inv = llt.solve(MatrixXd::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace

Signature make_signature(std::vector<double> values, std::string label,
                         std::size_t expected_bands) {
  if (values.empty()) fail(ErrorKind::validation, "signature is empty");
  if (expected_bands && values.size() != expected_bands)
    fail(ErrorKind::validation, "signature has " + std::to_string(values.size()) +
                                    " values, cube has " + std::to_string(expected_bands) +
                                    " bands");
  double norm2 = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorKind::validation, "signature contains a non-finite value");
    norm2 += v * v;
  }
  if (norm2 == 0.0) fail(ErrorKind::validation, "signature is the zero vector");
  return Signature{std::move(values), std::move(label)};
}

double default_ridge(const MatrixXd& covariance) {
  const double bands = static_cast<double>(covariance.rows());
  return std::max(1e-6 * covariance.trace() / bands, 1e-12);
}

BackgroundModel model_from_moments(VectorXd mean, MatrixXd covariance, MatrixXd second_moment,
                                   std::size_t sample_count, double ridge) {
  const auto L = mean.size();
  if (covariance.rows() != L || covariance.cols() != L || second_moment.rows() != L ||
      second_moment.cols() != L)
    fail(ErrorKind::validation, "background moment dimensions disagree");
  if (!mean.allFinite() || !covariance.allFinite() || !second_moment.allFinite())
    fail(ErrorKind::numeric, "background statistics are not finite");

  BackgroundModel m;
  m.sample_count = sample_count;
  m.ridge = ridge < 0.0 ? default_ridge(covariance) : ridge;
  const MatrixXd eye = MatrixXd::Identity(L, L);

  const MatrixXd cov_ridged = covariance + m.ridge * eye;
  Eigen::LLT<MatrixXd> llt(cov_ridged);
  if (llt.info() != Eigen::Success)
    fail(ErrorKind::degenerate, "background covariance is not positive definite after ridge");
  m.cov_factor = llt.matrixL();
  m.cov_inverse = llt.solve(eye);
  m.cov_inverse = 0.5 * (m.cov_inverse + m.cov_inverse.transpose()).eval();
  m.second_moment_inverse = spd_inverse(second_moment + m.ridge * eye, "background second moment");

  const double n = static_cast<double>(sample_count);
  const double centered_scale = sample_count > 1 ? (n - 1.0) / n : 1.0;
  m.centered_moment_inverse =
      spd_inverse(centered_scale * covariance + m.ridge * eye, "centered background moment");

  m.mean = std::move(mean);
  m.covariance = std::move(covariance);
  m.second_moment = std::move(second_moment);
  return m;
}

// ---------------------------------------------------------------------------

MomentAccumulator::MomentAccumulator(std::size_t bands, unsigned threads)
    : bands_(bands), threads_(std::max(1u, threads)) {
  if (bands == 0) fail(ErrorKind::validation, "moment accumulator needs at least one band");
}

void MomentAccumulator::add(std::span<const double> rows) {
  if (rows.size() % bands_)
    fail(ErrorKind::validation, "row data is not a multiple of the band count");
  for (double v : rows)
    if (!std::isfinite(v)) fail(ErrorKind::numeric, "non-finite pixel value in background population");
  if (rows.empty()) return;
  if (count_ == 0) shift_ = Eigen::Map<const VectorXd>(rows.data(), static_cast<Eigen::Index>(bands_));
  count_ += rows.size() / bands_;
  pending_.insert(pending_.end(), rows.begin(), rows.end());
  if (pending_.size() >= kBlockRows * bands_ * std::max(4u, 2 * threads_)) flush_pending(false);
}

MomentAccumulator::Partial MomentAccumulator::block_partial(const double* rows,
                                                            std::size_t n) const {
  const auto L = static_cast<Eigen::Index>(bands_);
  Eigen::Map<const MatrixXd> raw(rows, L, static_cast<Eigen::Index>(n));
  const MatrixXd centered = raw.colwise() - shift_;
  Partial p;
  p.n = n;
  p.s1 = centered.rowwise().sum();
  p.s2 = MatrixXd::Zero(L, L);
  p.s2.selfadjointView<Eigen::Lower>().rankUpdate(centered);
  return p;
}

MomentAccumulator::Partial MomentAccumulator::merge(Partial a, Partial b) {
  a.s1 += b.s1;
  a.s2 += b.s2;
  a.n += b.n;
  a.level = std::max(a.level, b.level) + 1;
  return a;
}

void MomentAccumulator::flush_pending(bool include_partial_block) {
  const std::size_t block_len = kBlockRows * bands_;
  std::size_t blocks = pending_.size() / block_len;
  const bool tail = include_partial_block && pending_.size() % block_len;
  const std::size_t jobs = blocks + (tail ? 1 : 0);
  if (jobs == 0) return;

  std::vector<Partial> partials(jobs);
  parallel_for(jobs, threads_, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      const std::size_t offset = j * block_len;
      const std::size_t rows = std::min(block_len, pending_.size() - offset) / bands_;
      partials[j] = block_partial(pending_.data() + offset, rows);
    }
  });

  for (auto& p : partials) {
    stack_.push_back(std::move(p));
    while (stack_.size() >= 2 && stack_[stack_.size() - 1].level == stack_[stack_.size() - 2].level) {
      Partial b = std::move(stack_.back());
      stack_.pop_back();
      Partial a = std::move(stack_.back());
      stack_.pop_back();
      stack_.push_back(merge(std::move(a), std::move(b)));
    }
  }
  const std::size_t consumed = std::min(pending_.size(), jobs * block_len);
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(consumed));
}

BackgroundModel MomentAccumulator::finish(double ridge, std::size_t min_samples) {
  min_samples = std::max<std::size_t>(min_samples, 2);
  if (count_ < min_samples)
    fail(ErrorKind::degenerate, "insufficient background samples: " + std::to_string(count_) +
                                    " pixels for " + std::to_string(bands_) + " bands (need at least " +
                                    std::to_string(min_samples) + ")");
  flush_pending(true);
  while (stack_.size() > 1) {
    Partial b = std::move(stack_.back());
    stack_.pop_back();
    Partial a = std::move(stack_.back());
    stack_.pop_back();
    stack_.push_back(merge(std::move(a), std::move(b)));
  }
  const Partial& total = stack_.front();
  const double n = static_cast<double>(total.n);
  const MatrixXd s2 = symmetric_from_lower(total.s2);

  VectorXd mean = shift_ + total.s1 / n;
  MatrixXd cov = (s2 - total.s1 * total.s1.transpose() / n) / (n - 1.0);
  MatrixXd second =
      (s2 + shift_ * total.s1.transpose() + total.s1 * shift_.transpose()) / n +
      shift_ * shift_.transpose();
  cov = 0.5 * (cov + cov.transpose()).eval();
  second = 0.5 * (second + second.transpose()).eval();
  return model_from_moments(std::move(mean), std::move(cov), std::move(second), total.n, ridge);
}

BackgroundModel estimate(const PixelTable& pixels, bool exclude_positives, unsigned threads) {
  if (pixels.bands == 0) fail(ErrorKind::validation, "pixel table has no bands");
  MomentAccumulator acc(pixels.bands, threads);
  if (!exclude_positives) {
    acc.add(pixels.spectra);
  } else {
    if (!pixels.labels) fail(ErrorKind::validation, "exclude-positives needs a labelled pixel table");
    // Feed contiguous runs of background rows.
    std::size_t i = 0;
    const std::size_t n = pixels.size();
    while (i < n) {
      while (i < n && (*pixels.labels)[i]) ++i;
      std::size_t j = i;
      while (j < n && !(*pixels.labels)[j]) ++j;
      if (j > i)
        acc.add(std::span<const double>(pixels.spectra).subspan(i * pixels.bands, (j - i) * pixels.bands));
      i = j;
    }
    return acc.finish(-1.0, pixels.bands + 1);
  }
  return acc.finish();
}

VectorXd whiten(const BackgroundModel& model, std::span<const double> x) {
  if (x.size() != model.bands())
    fail(ErrorKind::validation, "pixel has " + std::to_string(x.size()) + " bands, model has " +
                                    std::to_string(model.bands()));
  VectorXd centered = Eigen::Map<const VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())) - model.mean;
  model.cov_factor.triangularView<Eigen::Lower>().solveInPlace(centered);
  return centered;
}

std::string encode_model(const BackgroundModel& model) {
  std::string out;
  const auto L = model.bands();
  detail::put_u64(out, L);
  detail::put_u64(out, model.sample_count);
  detail::put_f64(out, model.ridge);
  for (std::size_t i = 0; i < L; ++i) detail::put_f64(out, model.mean(i));
  for (const MatrixXd* m : {&model.covariance, &model.second_moment})
    for (std::size_t r = 0; r < L; ++r)
      for (std::size_t c = 0; c < L; ++c) detail::put_f64(out, (*m)(r, c));
  return out;
}

void save_model(const BackgroundModel& model, const std::filesystem::path& path) {
  envi::write_file_atomic(path, encode_model(model));
}

BackgroundModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open background model " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  detail::Reader rd(bytes, "background model " + path.string());
  const auto L = static_cast<Eigen::Index>(rd.u64());
  const auto n = static_cast<std::size_t>(rd.u64());
  const double ridge = rd.f64();
  if (L <= 0 || static_cast<std::size_t>(L) > 100000)
    fail(ErrorKind::validation, "background model has an invalid band count");
  VectorXd mean(L);
  for (Eigen::Index i = 0; i < L; ++i) mean(i) = rd.f64();
  MatrixXd cov(L, L), second(L, L);
  for (MatrixXd* m : {&cov, &second})
    for (Eigen::Index r = 0; r < L; ++r)
      for (Eigen::Index c = 0; c < L; ++c) (*m)(r, c) = rd.f64();
  if (!rd.done()) fail(ErrorKind::validation, "background model " + path.string() + " has trailing bytes");
  return model_from_moments(std::move(mean), std::move(cov), std::move(second), n, ridge);
}

}  // namespace hsd
