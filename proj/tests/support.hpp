#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "hsd/spectral_nn.hpp"
#include "oracles.hpp"

namespace testing_support {

// Directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("hsd_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

inline oracle::Net to_oracle(const hsd::nn::MlpParams& p) {
  oracle::Net n;
  n.L = p.bands();
  n.h1 = static_cast<std::size_t>(p.w1.rows());
  n.h2 = static_cast<std::size_t>(p.w2.rows());
  for (Eigen::Index r = 0; r < p.w1.rows(); ++r)
    for (Eigen::Index c = 0; c < p.w1.cols(); ++c) n.w1.push_back(p.w1(r, c));
  n.b1.assign(p.b1.data(), p.b1.data() + p.b1.size());
  for (Eigen::Index r = 0; r < p.w2.rows(); ++r)
    for (Eigen::Index c = 0; c < p.w2.cols(); ++c) n.w2.push_back(p.w2(r, c));
  n.b2.assign(p.b2.data(), p.b2.data() + p.b2.size());
  n.w3.assign(p.w3.data(), p.w3.data() + p.w3.size());
  n.b3 = p.b3;
  n.beta1 = p.beta1;
  n.beta2 = p.beta2;
  return n;
}

// Parameters with N(0, scale) weights and betas in [0.5, 2].
inline hsd::nn::MlpParams random_params(std::size_t bands, std::mt19937_64& rng, double scale = 0.3,
                                        std::size_t h1 = hsd::nn::kHidden1,
                                        std::size_t h2 = hsd::nn::kHidden2) {
  auto p = hsd::nn::MlpParams::zeros(bands, h1, h2);
  std::normal_distribution<double> n(0.0, scale);
  std::uniform_real_distribution<double> b(0.5, 2.0);
  auto fill = [&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  };
  fill(p.w1);
  fill(p.b1);
  fill(p.w2);
  fill(p.b2);
  fill(p.w3);
  p.b3 = n(rng);
  p.beta1 = b(rng);
  p.beta2 = b(rng);
  return p;
}

struct GradientCheck {
  double worst_relative = 0.0;  // over coordinates larger than the floor
  double worst_absolute = 0.0;
  std::size_t failures = 0;
  std::size_t checked = 0;
};

// Central differences (step h) of the oracle loss against the library's
// analytic gradient. A coordinate passes if |a - n| <= abs_floor or the
// relative error is below rel_tol.
inline GradientCheck check_gradient(const hsd::nn::MlpParams& params, const std::vector<double>& rows,
                                    const std::vector<std::uint8_t>& labels, double w_pos,
                                    double h = 1e-5, double rel_tol = 1e-4, double abs_floor = 1e-7) {
  hsd::nn::MlpParams grad;
  hsd::nn::loss_and_gradient(params, rows, labels, w_pos, &grad);
  const std::vector<double> analytic = hsd::nn::pack(grad);
  oracle::Net net = to_oracle(params);
  net.bind(rows, labels, w_pos);
  GradientCheck out;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    const double numeric = (net.loss_with(k, h) - net.loss_with(k, -h)) / (2 * h);
    const double diff = std::abs(analytic[k] - numeric);
    const double mag = std::max(std::abs(analytic[k]), std::abs(numeric));
    const double rel = mag > 0 ? diff / mag : 0.0;
    ++out.checked;
    out.worst_absolute = std::max(out.worst_absolute, diff);
    if (mag > abs_floor) out.worst_relative = std::max(out.worst_relative, rel);
    if (diff > abs_floor && rel >= rel_tol) ++out.failures;
  }
  return out;
}

}  // namespace testing_support
