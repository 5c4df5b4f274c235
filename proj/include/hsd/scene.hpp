#pragma once

// Named scene regions, cropping, train/test splitting and flattening into
// pixel tables.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hsd/cube.hpp"
#include "hsd/region.hpp"

namespace hsd {

// Region covered by a cube, in full-scene coordinates.
Region extent_of(const SpectralCube& cube, std::string name = {});

SpectralCube crop(const SpectralCube& cube, const Region& region);
GroundTruthMask crop(const GroundTruthMask& mask, const Region& region);

// Left part spans samples [0, boundary), right part [boundary, samples).
// Requires 0 < boundary < region.samples.
std::pair<Region, Region> split_train_test(const Region& region, std::size_t boundary_sample,
                                           std::string left_name = "train",
                                           std::string right_name = "test");

// Flattened, line-major view of a cube's pixels.
struct PixelTable {
  Region region;
  std::size_t bands = 0;
  std::vector<double> spectra;  // rows x bands
  std::optional<std::vector<std::uint8_t>> labels;
  // Full-scene (line, sample) of each row.
  std::vector<std::pair<std::size_t, std::size_t>> coords;

  std::size_t size() const { return bands ? spectra.size() / bands : 0; }
  std::span<const double> row(std::size_t i) const { return {spectra.data() + i * bands, bands}; }
  std::size_t positive_count() const;
};

PixelTable flatten(const SpectralCube& cube, const GroundTruthMask* mask = nullptr);

// Keeps rows whose label equals `label`; the table must be labelled.
PixelTable select_label(const PixelTable& table, std::uint8_t label);

// Region presets, one per line:
//   region <name> <line_offset> <sample_offset> <lines> <samples>
//   split <parent> <boundary_sample> <left_name> <right_name>
// '#' starts a comment.
class RegionPresets {
 public:
  void add(Region region);
  // Adds both halves of split_train_test(parent, boundary).
  void add_split(std::string_view parent, std::size_t boundary, std::string left,
                 std::string right);

  const Region* find(std::string_view name) const;
  const Region& get(std::string_view name) const;
  const std::vector<Region>& regions() const { return regions_; }

 private:
  std::vector<Region> regions_;
};

RegionPresets parse_presets(std::string_view text);
// Emits one `region` line per entry (splits are written expanded).
std::string format_presets(const RegionPresets& presets);

// Regions of the PFM-1 benchmark: full (1705 x 3461), pfm1 (500 x 1060),
// and its train (500 x 610) / test (500 x 450) split at sample 610. Offsets
// are placeholders to be set from the released annotations.
RegionPresets pfm1_presets(std::size_t full_line_offset = 0, std::size_t full_sample_offset = 0,
                           std::size_t pfm1_line_offset = 0, std::size_t pfm1_sample_offset = 0);

}  // namespace hsd
