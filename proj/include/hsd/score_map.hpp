#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hsd/region.hpp"

namespace hsd {

enum class Method { sam, mf, ace, cem, nn };

std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view name);

// Per-pixel detection statistic over a region, line-major.
struct ScoreMap {
  Region region;
  Method method = Method::sam;
  std::vector<double> scores;
  bool normalized = false;
  // Set when min == max and normalization was skipped.
  bool constant = false;
  double raw_min = 0.0;
  double raw_max = 0.0;
  // Pixels scored by convention rather than formula (zero-norm for SAM,
  // x == mean for ACE).
  std::size_t dead_pixels = 0;

  double at(std::size_t line, std::size_t sample) const {
    return scores[line * region.samples + sample];
  }
};

}  // namespace hsd
