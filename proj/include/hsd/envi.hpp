#pragma once

// ENVI raster I/O: text header (.hdr) plus a raw binary raster.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hsd/cube.hpp"
#include "hsd/region.hpp"
#include "hsd/score_map.hpp"

namespace hsd::envi {

enum class DataType : int { u8 = 1, i16 = 2, f32 = 4, f64 = 5, u16 = 12 };
enum class Interleave { bsq, bil, bip };
enum class ByteOrder : int { little = 0, big = 1 };

std::size_t bytes_per_element(DataType type);
std::string_view to_string(Interleave interleave);

struct Header {
  std::size_t samples = 0;
  std::size_t lines = 0;
  std::size_t bands = 0;
  DataType data_type = DataType::f32;
  Interleave interleave = Interleave::bsq;
  ByteOrder byte_order = ByteOrder::little;
  std::size_t header_offset = 0;
  std::vector<double> wavelengths;
  // Keys this library does not interpret, in file order, lower-cased key and
  // verbatim value text (braces included for lists).
  std::vector<std::pair<std::string, std::string>> extra;

  std::size_t element_count() const { return samples * lines * bands; }
  // header_offset + payload bytes.
  std::size_t file_size() const;

  const std::string* find_extra(std::string_view key) const;
  void set_extra(std::string key, std::string value);
};

// Keys are case-insensitive; `{...}` values may span lines. Throws
// Error(validation) naming the offending key.
Header parse_header(std::string_view text);
std::string format_header(const Header& header);
Header read_header(const std::filesystem::path& path);

// Half-open window [line_begin, line_end) x [sample_begin, sample_end).
struct Window {
  std::size_t line_begin = 0;
  std::size_t line_end = 0;
  std::size_t sample_begin = 0;
  std::size_t sample_end = 0;
};

// Reads the raster (or only the bytes covering `window`) into a cube whose
// origin is the window's top-left corner. The stream must be seekable.
SpectralCube read_cube(const Header& header, std::istream& raster,
                       const std::optional<Window>& window = std::nullopt);

struct FilePair {
  std::filesystem::path header;
  std::filesystem::path raster;
};

// "scene.hdr" -> {"scene.hdr", first existing of scene, scene.img, scene.raw,
// scene.dat, scene.bsq}. For output paths the raster defaults to "scene.img".
FilePair locate(const std::filesystem::path& header_path);
FilePair output_pair(const std::filesystem::path& header_path);

SpectralCube load_cube(const FilePair& files,
                       const std::optional<Window>& window = std::nullopt);

struct WriteOptions {
  DataType data_type = DataType::f32;
  Interleave interleave = Interleave::bsq;
  ByteOrder byte_order = ByteOrder::little;
};

// Integer types round to nearest and saturate.
void write_cube(const SpectralCube& cube, const FilePair& files,
                const WriteOptions& options = {});
std::string encode_raster(const SpectralCube& cube, const WriteOptions& options);

// Header text and raster bytes of an encoded image.
struct Encoded {
  std::string header;
  std::string raster;
};

Encoded encode_cube(const SpectralCube& cube, const WriteOptions& options = {});

// Single-band float32 BSQ little-endian. Rejects non-finite scores before
// touching the filesystem.
Encoded encode_scoremap(const ScoreMap& scores);
void write_scoremap(const ScoreMap& scores, const FilePair& files);
ScoreMap load_scoremap(const FilePair& files);

// Single-band u8 raster with values in {0,1}.
GroundTruthMask read_mask(const Header& header, std::istream& raster);
GroundTruthMask load_mask(const FilePair& files);
Encoded encode_mask(const GroundTruthMask& mask);
void write_mask(const GroundTruthMask& mask, const FilePair& files);

// One value per line, or `wavelength,value` rows. Blank lines and lines
// starting with '#' are skipped; so is a non-numeric first line.
std::vector<double> read_signature_csv(const std::filesystem::path& path);
std::string signature_csv(const std::vector<double>& values,
                          const std::vector<double>& wavelengths = {});
void write_signature_csv(const std::filesystem::path& path, const std::vector<double>& values,
                         const std::vector<double>& wavelengths = {});

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace hsd::envi
