#include "hsd/scene.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "hsd/error.hpp"

namespace hsd {

namespace {

std::string describe(const Region& r) {
  return "'" + r.name + "' [" + std::to_string(r.line_offset) + "+" + std::to_string(r.lines) +
         ", " + std::to_string(r.sample_offset) + "+" + std::to_string(r.samples) + "]";
}

void require_inside(const Region& outer, const Region& inner) {
  if (inner.lines == 0 || inner.samples == 0)
    fail(ErrorKind::validation, "region " + describe(inner) + " is empty");
  if (!outer.contains(inner))
    fail(ErrorKind::validation,
         "region " + describe(inner) + " lies outside " + describe(outer));
}

}  // namespace

GroundTruthMask make_mask(Region region, std::vector<std::uint8_t> labels) {
  if (labels.size() != region.pixel_count())
    fail(ErrorKind::validation, "mask has " + std::to_string(labels.size()) +
                                    " labels for a region of " +
                                    std::to_string(region.pixel_count()) + " pixels");
  GroundTruthMask mask{std::move(region), std::move(labels), 0};
  for (std::size_t i = 0; i < mask.labels.size(); ++i) {
    if (mask.labels[i] > 1)
      fail(ErrorKind::validation, "invalid mask label " + std::to_string(mask.labels[i]) +
                                      " at pixel " + std::to_string(i));
    mask.positive_count += mask.labels[i];
  }
  return mask;
}

Region extent_of(const SpectralCube& cube, std::string name) {
  return Region{std::move(name), cube.line_origin(), cube.sample_origin(), cube.lines(),
                cube.samples()};
}

SpectralCube crop(const SpectralCube& cube, const Region& region) {
  require_inside(extent_of(cube), region);
  SpectralCube out(region.lines, region.samples, cube.bands(), region.line_offset,
                   region.sample_offset);
  out.wavelengths = cube.wavelengths;
  const std::size_t l0 = region.line_offset - cube.line_origin();
  const std::size_t s0 = region.sample_offset - cube.sample_origin();
  for (std::size_t l = 0; l < region.lines; ++l) {
    const auto src = cube.pixel(l0 + l, s0);
    std::copy_n(src.data(), region.samples * cube.bands(), out.pixel(l, 0).data());
  }
  for (double v : out.values())
    if (!std::isfinite(v)) ++out.nonfinite_count;
  return out;
}

GroundTruthMask crop(const GroundTruthMask& mask, const Region& region) {
  require_inside(mask.region, region);
  std::vector<std::uint8_t> labels(region.pixel_count());
  const std::size_t l0 = region.line_offset - mask.region.line_offset;
  const std::size_t s0 = region.sample_offset - mask.region.sample_offset;
  for (std::size_t l = 0; l < region.lines; ++l)
    std::copy_n(mask.labels.begin() + static_cast<std::ptrdiff_t>((l0 + l) * mask.region.samples + s0),
                region.samples, labels.begin() + static_cast<std::ptrdiff_t>(l * region.samples));
  return make_mask(region, std::move(labels));
}

std::pair<Region, Region> split_train_test(const Region& region, std::size_t boundary_sample,
                                           std::string left_name, std::string right_name) {
  if (boundary_sample == 0 || boundary_sample >= region.samples)
    fail(ErrorKind::validation, "split boundary " + std::to_string(boundary_sample) +
                                    " must lie strictly inside (0, " +
                                    std::to_string(region.samples) + ")");
  Region left{std::move(left_name), region.line_offset, region.sample_offset, region.lines,
              boundary_sample};
  Region right{std::move(right_name), region.line_offset, region.sample_offset + boundary_sample,
               region.lines, region.samples - boundary_sample};
  return {left, right};
}

std::size_t PixelTable::positive_count() const {
  if (!labels) return 0;
  return static_cast<std::size_t>(std::count(labels->begin(), labels->end(), std::uint8_t{1}));
}

PixelTable flatten(const SpectralCube& cube, const GroundTruthMask* mask) {
  PixelTable table;
  table.region = extent_of(cube);
  if (mask) {
    if (!mask->region.same_extent(table.region))
      fail(ErrorKind::validation,
           "mask " + describe(mask->region) + " is not aligned with cube " + describe(table.region));
    table.region.name = mask->region.name;
    table.labels = mask->labels;
  }
  table.bands = cube.bands();
  table.spectra.assign(cube.values().begin(), cube.values().end());
  table.coords.reserve(cube.pixel_count());
  for (std::size_t l = 0; l < cube.lines(); ++l)
    for (std::size_t s = 0; s < cube.samples(); ++s)
      table.coords.emplace_back(cube.line_origin() + l, cube.sample_origin() + s);
  return table;
}

PixelTable select_label(const PixelTable& table, std::uint8_t label) {
  if (!table.labels) fail(ErrorKind::validation, "pixel table has no labels");
  PixelTable out;
  out.region = table.region;
  out.bands = table.bands;
  out.labels.emplace();
  for (std::size_t i = 0; i < table.size(); ++i) {
    if ((*table.labels)[i] != label) continue;
    const auto r = table.row(i);
    out.spectra.insert(out.spectra.end(), r.begin(), r.end());
    out.labels->push_back(label);
    out.coords.push_back(table.coords[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------

void RegionPresets::add(Region region) {
  if (region.name.empty()) fail(ErrorKind::validation, "region preset needs a name");
  if (region.lines == 0 || region.samples == 0)
    fail(ErrorKind::validation, "region " + describe(region) + " is empty");
  for (auto& r : regions_) {
    if (r.name == region.name) {
      r = std::move(region);
      return;
    }
  }
  regions_.push_back(std::move(region));
}

void RegionPresets::add_split(std::string_view parent, std::size_t boundary, std::string left,
                              std::string right) {
  auto [l, r] = split_train_test(get(parent), boundary, std::move(left), std::move(right));
  add(std::move(l));
  add(std::move(r));
}

const Region* RegionPresets::find(std::string_view name) const {
  for (const auto& r : regions_)
    if (r.name == name) return &r;
  return nullptr;
}

const Region& RegionPresets::get(std::string_view name) const {
  const Region* r = find(name);
  if (!r) fail(ErrorKind::validation, "unknown region preset '" + std::string(name) + "'");
  return *r;
}

RegionPresets parse_presets(std::string_view text) {
  RegionPresets presets;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string kind;
    if (!(fields >> kind)) continue;
    auto bad = [&](const std::string& why) {
      fail(ErrorKind::validation, "region presets line " + std::to_string(line_no) + ": " + why);
    };
    if (kind == "region") {
      Region r;
      if (!(fields >> r.name >> r.line_offset >> r.sample_offset >> r.lines >> r.samples))
        bad("expected: region <name> <line_offset> <sample_offset> <lines> <samples>");
      presets.add(std::move(r));
    } else if (kind == "split") {
      std::string parent, left, right;
      std::size_t boundary = 0;
      if (!(fields >> parent >> boundary >> left >> right))
        bad("expected: split <parent> <boundary_sample> <left_name> <right_name>");
      presets.add_split(parent, boundary, left, right);
    } else {
      bad("unknown entry '" + kind + "'");
    }
    std::string trailing;
    if (fields >> trailing) bad("unexpected trailing field '" + trailing + "'");
  }
  return presets;
}

std::string format_presets(const RegionPresets& presets) {
  std::ostringstream out;
  out << "# region <name> <line_offset> <sample_offset> <lines> <samples>\n";
  for (const auto& r : presets.regions())
    out << "region " << r.name << " " << r.line_offset << " " << r.sample_offset << " " << r.lines
        << " " << r.samples << "\n";
  return out.str();
}

RegionPresets pfm1_presets(std::size_t full_line_offset, std::size_t full_sample_offset,
                           std::size_t pfm1_line_offset, std::size_t pfm1_sample_offset) {
  RegionPresets presets;
  presets.add(Region{"full", full_line_offset, full_sample_offset, 1705, 3461});
  presets.add(Region{"pfm1", full_line_offset + pfm1_line_offset,
                     full_sample_offset + pfm1_sample_offset, 500, 1060});
  presets.add_split("pfm1", 610, "train", "test");
  return presets;
}

}  // namespace hsd
