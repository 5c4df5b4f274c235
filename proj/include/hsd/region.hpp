#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace hsd {

// Rectangle in full-scene pixel coordinates.
struct Region {
  std::string name;
  std::size_t line_offset = 0;
  std::size_t sample_offset = 0;
  std::size_t lines = 0;
  std::size_t samples = 0;

  std::size_t line_end() const { return line_offset + lines; }
  std::size_t sample_end() const { return sample_offset + samples; }
  std::size_t pixel_count() const { return lines * samples; }

  bool contains(const Region& other) const {
    return other.line_offset >= line_offset && other.sample_offset >= sample_offset &&
           other.line_end() <= line_end() && other.sample_end() <= sample_end();
  }
  bool intersects(const Region& other) const {
    return line_offset < other.line_end() && other.line_offset < line_end() &&
           sample_offset < other.sample_end() && other.sample_offset < sample_end();
  }
  bool same_extent(const Region& other) const {
    return line_offset == other.line_offset && sample_offset == other.sample_offset &&
           lines == other.lines && samples == other.samples;
  }
};

// Binary per-pixel labels (1 target, 0 background), line-major.
struct GroundTruthMask {
  Region region;
  std::vector<std::uint8_t> labels;
  std::size_t positive_count = 0;

  std::uint8_t at(std::size_t line, std::size_t sample) const {
    return labels[line * region.samples + sample];
  }
};

// Builds a mask from labels, validating {0,1} and counting positives.
GroundTruthMask make_mask(Region region, std::vector<std::uint8_t> labels);

}  // namespace hsd
