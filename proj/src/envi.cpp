#include "hsd/envi.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "hsd/error.hpp"

namespace hsd::envi {

namespace {

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n\v\f";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Lower-case and collapse internal whitespace runs to one space.
std::string normalize_key(std::string_view raw) {
  std::string out;
  bool space = false;
  for (char c : trim(raw)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

[[noreturn]] void header_error(const std::string& key, const std::string& what) {
  fail(ErrorKind::validation, "ENVI header key '" + key + "': " + what);
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  std::size_t out = 0;
  const auto* first = value.data();
  const auto* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) header_error(key, "expected a non-negative integer, got '" + value + "'");
  return out;
}

double parse_double(std::string_view text, bool* ok) {
  const std::string s = trim(text);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  *ok = !s.empty() && ec == std::errc() && ptr == s.data() + s.size();
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<double> parse_number_list(const std::string& key, const std::string& value) {
  if (value.size() < 2 || value.front() != '{' || value.back() != '}')
    header_error(key, "malformed brace list");
  std::vector<double> out;
  std::string_view body(value.data() + 1, value.size() - 2);
  if (trim(body).empty()) return out;
  std::size_t start = 0;
  while (start <= body.size()) {
    const auto comma = body.find(',', start);
    const auto item = body.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                         : comma - start);
    bool ok = false;
    const double v = parse_double(item, &ok);
    if (!ok) header_error(key, "malformed brace list entry '" + trim(item) + "'");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

DataType parse_data_type(const std::string& key, const std::string& value) {
  const auto code = parse_size(key, value);
  switch (code) {
    case 1: return DataType::u8;
    case 2: return DataType::i16;
    case 4: return DataType::f32;
    case 5: return DataType::f64;
    case 12: return DataType::u16;
    default: header_error(key, "unsupported data type " + std::to_string(code));
  }
}

// ---------------------------------------------------------------------------
// Element codecs

template <typename U>
U byteswap(U v) {
  U out = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out = static_cast<U>((out << 8) | (v & 0xFF));
    v = static_cast<U>(v >> 8);
  }
  return out;
}

template <typename T>
using uint_of = std::conditional_t<sizeof(T) == 1, std::uint8_t,
                std::conditional_t<sizeof(T) == 2, std::uint16_t,
                std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;

template <typename T>
double decode_one(const char* p, bool swap) {
  uint_of<T> bits;
  std::memcpy(&bits, p, sizeof bits);
  if (swap) bits = byteswap(bits);
  return static_cast<double>(std::bit_cast<T>(bits));
}

template <typename T>
void encode_one(double v, char* p, bool swap) {
  T typed;
  if constexpr (std::is_integral_v<T>) {
    const double lo = static_cast<double>(std::numeric_limits<T>::lowest());
    const double hi = static_cast<double>(std::numeric_limits<T>::max());
    typed = static_cast<T>(std::clamp(std::nearbyint(v), lo, hi));
  } else {
    typed = static_cast<T>(v);
  }
  auto bits = std::bit_cast<uint_of<T>>(typed);
  if (swap) bits = byteswap(bits);
  std::memcpy(p, &bits, sizeof bits);
}

bool needs_swap(ByteOrder order) {
  return (order == ByteOrder::big) != (std::endian::native == std::endian::big);
}

// Decodes `count` elements from `src` into dst[0], dst[stride], ...
void decode_run(DataType type, bool swap, const char* src, std::size_t count, double* dst,
                std::size_t stride) {
  const auto bpe = bytes_per_element(type);
  for (std::size_t i = 0; i < count; ++i, src += bpe, dst += stride) {
    switch (type) {
      case DataType::u8: *dst = static_cast<unsigned char>(*src); break;
      case DataType::i16: *dst = decode_one<std::int16_t>(src, swap); break;
      case DataType::u16: *dst = decode_one<std::uint16_t>(src, swap); break;
      case DataType::f32: *dst = decode_one<float>(src, swap); break;
      case DataType::f64: *dst = decode_one<double>(src, swap); break;
    }
  }
}

void encode_value(DataType type, bool swap, double v, char* dst) {
  switch (type) {
    case DataType::u8: encode_one<std::uint8_t>(v, dst, swap); break;
    case DataType::i16: encode_one<std::int16_t>(v, dst, swap); break;
    case DataType::u16: encode_one<std::uint16_t>(v, dst, swap); break;
    case DataType::f32: encode_one<float>(v, dst, swap); break;
    case DataType::f64: encode_one<double>(v, dst, swap); break;
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Header header_for(std::size_t lines, std::size_t samples, std::size_t bands,
                  const WriteOptions& options) {
  Header h;
  h.lines = lines;
  h.samples = samples;
  h.bands = bands;
  h.data_type = options.data_type;
  h.interleave = options.interleave;
  h.byte_order = options.byte_order;
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t bytes_per_element(DataType type) {
  switch (type) {
    case DataType::u8: return 1;
    case DataType::i16: return 2;
    case DataType::u16: return 2;
    case DataType::f32: return 4;
    case DataType::f64: return 8;
  }
  return 0;
}

std::string_view to_string(Interleave interleave) {
  switch (interleave) {
    case Interleave::bsq: return "bsq";
    case Interleave::bil: return "bil";
    case Interleave::bip: return "bip";
  }
  return "bsq";
}

std::size_t Header::file_size() const {
  return header_offset + element_count() * bytes_per_element(data_type);
}

const std::string* Header::find_extra(std::string_view key) const {
  for (const auto& [k, v] : extra)
    if (k == key) return &v;
  return nullptr;
}

void Header::set_extra(std::string key, std::string value) {
  for (auto& [k, v] : extra) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  extra.emplace_back(std::move(key), std::move(value));
}

Header parse_header(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (first && lower(t) == "envi") {
      first = false;
      continue;
    }
    first = false;
    if (t.empty() || t.front() == ';') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail(ErrorKind::validation, "ENVI header: malformed line '" + t + "'");
    const std::string key = normalize_key(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (!value.empty() && value.front() == '{') {
      while (value.find('}') == std::string::npos) {
        std::string more;
        if (!std::getline(in, more)) header_error(key, "malformed brace list (missing '}')");
        value += "\n" + trim(more);
      }
      if (value.back() != '}') header_error(key, "malformed brace list (text after '}')");
    }
    entries.emplace_back(key, value);
  }

  Header h;
  bool seen_samples = false, seen_lines = false, seen_bands = false;
  bool seen_type = false, seen_interleave = false, seen_order = false;
  for (auto& [key, value] : entries) {
    if (key == "samples") {
      h.samples = parse_size(key, value);
      seen_samples = true;
    } else if (key == "lines") {
      h.lines = parse_size(key, value);
      seen_lines = true;
    } else if (key == "bands") {
      h.bands = parse_size(key, value);
      seen_bands = true;
    } else if (key == "data type") {
      h.data_type = parse_data_type(key, value);
      seen_type = true;
    } else if (key == "interleave") {
      const auto v = lower(value);
      if (v == "bsq") h.interleave = Interleave::bsq;
      else if (v == "bil") h.interleave = Interleave::bil;
      else if (v == "bip") h.interleave = Interleave::bip;
      else header_error(key, "unknown interleave '" + value + "'");
      seen_interleave = true;
    } else if (key == "byte order") {
      const auto v = parse_size(key, value);
      if (v > 1) header_error(key, "expected 0 or 1, got " + value);
      h.byte_order = static_cast<ByteOrder>(v);
      seen_order = true;
    } else if (key == "header offset") {
      h.header_offset = parse_size(key, value);
    } else if (key == "wavelength") {
      h.wavelengths = parse_number_list(key, value);
    } else {
      h.extra.emplace_back(key, value);
    }
  }
  if (!seen_samples) header_error("samples", "missing required key");
  if (!seen_lines) header_error("lines", "missing required key");
  if (!seen_bands) header_error("bands", "missing required key");
  if (!seen_type) header_error("data type", "missing required key");
  if (!seen_interleave) header_error("interleave", "missing required key");
  if (!seen_order) header_error("byte order", "missing required key");
  if (h.samples == 0) header_error("samples", "must be positive");
  if (h.lines == 0) header_error("lines", "must be positive");
  if (h.bands == 0) header_error("bands", "must be positive");
  if (!h.wavelengths.empty()) {
    if (h.wavelengths.size() != h.bands)
      header_error("wavelength", "has " + std::to_string(h.wavelengths.size()) + " entries for " +
                                     std::to_string(h.bands) + " bands");
    for (std::size_t i = 1; i < h.wavelengths.size(); ++i)
      if (!(h.wavelengths[i] > h.wavelengths[i - 1]))
        header_error("wavelength", "not strictly increasing at band " + std::to_string(i));
  }
  return h;
}

std::string format_header(const Header& h) {
  std::ostringstream out;
  out << "ENVI\n";
  out << "samples = " << h.samples << "\n";
  out << "lines = " << h.lines << "\n";
  out << "bands = " << h.bands << "\n";
  out << "header offset = " << h.header_offset << "\n";
  out << "data type = " << static_cast<int>(h.data_type) << "\n";
  out << "interleave = " << to_string(h.interleave) << "\n";
  out << "byte order = " << static_cast<int>(h.byte_order) << "\n";
  if (!h.wavelengths.empty()) {
    out << "wavelength = {";
    for (std::size_t i = 0; i < h.wavelengths.size(); ++i)
      out << (i ? ", " : "") << format_double(h.wavelengths[i]);
    out << "}\n";
  }
  for (const auto& [k, v] : h.extra) out << k << " = " << v << "\n";
  return out.str();
}

Header read_header(const std::filesystem::path& path) { return parse_header(read_text_file(path)); }

// ---------------------------------------------------------------------------

SpectralCube read_cube(const Header& header, std::istream& raster,
                       const std::optional<Window>& window) {
  raster.clear();
  raster.seekg(0, std::ios::end);
  const auto end_pos = raster.tellg();
  if (end_pos < 0) fail(ErrorKind::io, "raster stream is not seekable");
  const auto actual = static_cast<std::size_t>(end_pos);
  if (actual != header.file_size())
    fail(ErrorKind::validation, "raster size " + std::to_string(actual) +
                                    " bytes does not match header (expected " +
                                    std::to_string(header.file_size()) + ")");

  Window w = window.value_or(Window{0, header.lines, 0, header.samples});
  if (w.line_begin >= w.line_end || w.sample_begin >= w.sample_end || w.line_end > header.lines ||
      w.sample_end > header.samples)
    fail(ErrorKind::validation,
         "window lines [" + std::to_string(w.line_begin) + "," + std::to_string(w.line_end) +
             ") samples [" + std::to_string(w.sample_begin) + "," + std::to_string(w.sample_end) +
             ") outside raster " + std::to_string(header.lines) + "x" + std::to_string(header.samples));

  const std::size_t wl = w.line_end - w.line_begin;
  const std::size_t ws = w.sample_end - w.sample_begin;
  const std::size_t nb = header.bands;
  const std::size_t bpe = bytes_per_element(header.data_type);
  const bool swap = needs_swap(header.byte_order);
  const bool full_width = ws == header.samples;

  SpectralCube cube(wl, ws, nb, w.line_begin, w.sample_begin);
  cube.wavelengths = header.wavelengths;
  double* out = cube.values().data();

  std::vector<char> buf;
  auto read_at = [&](std::size_t element_offset, std::size_t count) {
    buf.resize(count * bpe);
    raster.seekg(static_cast<std::streamoff>(header.header_offset + element_offset * bpe));
    raster.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!raster) fail(ErrorKind::io, "short read from raster");
    return buf.data();
  };

  switch (header.interleave) {
    case Interleave::bsq:
      for (std::size_t b = 0; b < nb; ++b) {
        if (full_width) {
          const char* src = read_at((b * header.lines + w.line_begin) * header.samples, wl * ws);
          decode_run(header.data_type, swap, src, wl * ws, out + b, nb);
        } else {
          for (std::size_t l = 0; l < wl; ++l) {
            const char* src = read_at(
                (b * header.lines + w.line_begin + l) * header.samples + w.sample_begin, ws);
            decode_run(header.data_type, swap, src, ws, out + l * ws * nb + b, nb);
          }
        }
      }
      break;
    case Interleave::bil:
      for (std::size_t l = 0; l < wl; ++l) {
        if (full_width) {
          const char* src = read_at((w.line_begin + l) * nb * header.samples, nb * ws);
          for (std::size_t b = 0; b < nb; ++b)
            decode_run(header.data_type, swap, src + b * ws * bpe, ws, out + l * ws * nb + b, nb);
        } else {
          for (std::size_t b = 0; b < nb; ++b) {
            const char* src =
                read_at(((w.line_begin + l) * nb + b) * header.samples + w.sample_begin, ws);
            decode_run(header.data_type, swap, src, ws, out + l * ws * nb + b, nb);
          }
        }
      }
      break;
    case Interleave::bip:
      if (full_width) {
        const char* src = read_at(w.line_begin * header.samples * nb, wl * ws * nb);
        decode_run(header.data_type, swap, src, wl * ws * nb, out, 1);
      } else {
        for (std::size_t l = 0; l < wl; ++l) {
          const char* src =
              read_at(((w.line_begin + l) * header.samples + w.sample_begin) * nb, ws * nb);
          decode_run(header.data_type, swap, src, ws * nb, out + l * ws * nb, 1);
        }
      }
      break;
  }

  cube.nonfinite_count = static_cast<std::size_t>(
      std::count_if(cube.values().begin(), cube.values().end(),
                    [](double v) { return !std::isfinite(v); }));
  return cube;
}

FilePair locate(const std::filesystem::path& header_path) {
  namespace fs = std::filesystem;
  FilePair pair;
  if (header_path.extension() == ".hdr") {
    pair.header = header_path;
    fs::path base = header_path;
    base.replace_extension();
    pair.raster = base;
    pair.raster += ".img";
    for (const char* ext : {"", ".img", ".raw", ".dat", ".bsq", ".bil", ".bip"}) {
      fs::path candidate = base;
      candidate += ext;
      if (fs::is_regular_file(candidate)) {
        pair.raster = candidate;
        break;
      }
    }
  } else {
    pair.raster = header_path;
    fs::path hdr = header_path;
    hdr.replace_extension(".hdr");
    if (!fs::exists(hdr)) {
      hdr = header_path;
      hdr += ".hdr";
    }
    pair.header = hdr;
  }
  return pair;
}

FilePair output_pair(const std::filesystem::path& header_path) {
  FilePair pair;
  pair.header = header_path;
  if (pair.header.extension() != ".hdr") pair.header += ".hdr";
  pair.raster = pair.header;
  pair.raster.replace_extension(".img");
  return pair;
}

SpectralCube load_cube(const FilePair& files, const std::optional<Window>& window) {
  const Header header = read_header(files.header);
  std::ifstream raster(files.raster, std::ios::binary);
  if (!raster) fail(ErrorKind::io, "cannot open raster " + files.raster.string());
  return read_cube(header, raster, window);
}

std::string encode_raster(const SpectralCube& cube, const WriteOptions& options) {
  const std::size_t nl = cube.lines(), ns = cube.samples(), nb = cube.bands();
  const std::size_t bpe = bytes_per_element(options.data_type);
  const bool swap = needs_swap(options.byte_order);
  std::string bytes(nl * ns * nb * bpe, '\0');
  char* dst = bytes.data();
  for (std::size_t l = 0; l < nl; ++l)
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t b = 0; b < nb; ++b) {
        std::size_t index = 0;
        switch (options.interleave) {
          case Interleave::bsq: index = (b * nl + l) * ns + s; break;
          case Interleave::bil: index = (l * nb + b) * ns + s; break;
          case Interleave::bip: index = (l * ns + s) * nb + b; break;
        }
        encode_value(options.data_type, swap, cube.at(l, s, b), dst + index * bpe);
      }
  return bytes;
}

Encoded encode_cube(const SpectralCube& cube, const WriteOptions& options) {
  Header h = header_for(cube.lines(), cube.samples(), cube.bands(), options);
  h.wavelengths = cube.wavelengths;
  return {format_header(h), encode_raster(cube, options)};
}

void write_cube(const SpectralCube& cube, const FilePair& files, const WriteOptions& options) {
  const Encoded e = encode_cube(cube, options);
  write_file_atomic(files.raster, e.raster);
  write_file_atomic(files.header, e.header);
}

Encoded encode_scoremap(const ScoreMap& scores) {
  for (std::size_t i = 0; i < scores.scores.size(); ++i)
    if (!std::isfinite(scores.scores[i]))
      fail(ErrorKind::numeric, "score map has a non-finite value at pixel " + std::to_string(i));
  if (scores.scores.size() != scores.region.pixel_count())
    fail(ErrorKind::validation, "score map size does not match its region");

  Header h = header_for(scores.region.lines, scores.region.samples, 1, WriteOptions{});
  h.set_extra("description", "{detection scores}");
  h.set_extra("score method", std::string(to_string(scores.method)));
  h.set_extra("score normalized", scores.normalized ? "1" : "0");
  h.set_extra("score constant", scores.constant ? "1" : "0");
  h.set_extra("raw min", format_double(scores.raw_min));
  h.set_extra("raw max", format_double(scores.raw_max));
  h.set_extra("dead pixels", std::to_string(scores.dead_pixels));
  if (!scores.region.name.empty()) h.set_extra("region name", scores.region.name);
  h.set_extra("line origin", std::to_string(scores.region.line_offset));
  h.set_extra("sample origin", std::to_string(scores.region.sample_offset));

  std::string bytes(scores.scores.size() * 4, '\0');
  const bool swap = needs_swap(ByteOrder::little);
  for (std::size_t i = 0; i < scores.scores.size(); ++i)
    encode_value(DataType::f32, swap, scores.scores[i], bytes.data() + i * 4);
  return {format_header(h), std::move(bytes)};
}

void write_scoremap(const ScoreMap& scores, const FilePair& files) {
  const Encoded e = encode_scoremap(scores);
  write_file_atomic(files.raster, e.raster);
  write_file_atomic(files.header, e.header);
}

ScoreMap load_scoremap(const FilePair& files) {
  const Header h = read_header(files.header);
  if (h.bands != 1) fail(ErrorKind::validation, files.header.string() + ": score map must have 1 band");
  std::ifstream raster(files.raster, std::ios::binary);
  if (!raster) fail(ErrorKind::io, "cannot open raster " + files.raster.string());
  const SpectralCube cube = read_cube(h, raster);

  ScoreMap map;
  map.region = Region{"", 0, 0, h.lines, h.samples};
  if (const auto* v = h.find_extra("region name")) map.region.name = *v;
  if (const auto* v = h.find_extra("line origin")) map.region.line_offset = parse_size("line origin", *v);
  if (const auto* v = h.find_extra("sample origin"))
    map.region.sample_offset = parse_size("sample origin", *v);
  if (const auto* v = h.find_extra("score method")) {
    const auto m = parse_method(*v);
    if (!m) header_error("score method", "unknown method '" + *v + "'");
    map.method = *m;
  }
  bool ok = true;
  if (const auto* v = h.find_extra("score normalized")) map.normalized = *v == "1";
  if (const auto* v = h.find_extra("score constant")) map.constant = *v == "1";
  if (const auto* v = h.find_extra("raw min")) map.raw_min = parse_double(*v, &ok);
  if (const auto* v = h.find_extra("raw max")) map.raw_max = parse_double(*v, &ok);
  if (const auto* v = h.find_extra("dead pixels")) map.dead_pixels = parse_size("dead pixels", *v);
  map.scores.assign(cube.values().begin(), cube.values().end());
  return map;
}

GroundTruthMask read_mask(const Header& header, std::istream& raster) {
  if (header.bands != 1)
    fail(ErrorKind::validation, "mask must have 1 band, header has " + std::to_string(header.bands));
  if (header.data_type != DataType::u8)
    fail(ErrorKind::validation, "mask must be data type 1 (unsigned 8-bit)");
  const SpectralCube cube = read_cube(header, raster);
  std::vector<std::uint8_t> labels(cube.pixel_count());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double v = cube.values()[i];
    if (v != 0.0 && v != 1.0)
      fail(ErrorKind::validation, "invalid mask label " + format_double(v) + " at line " +
                                      std::to_string(i / header.samples) + ", sample " +
                                      std::to_string(i % header.samples));
    labels[i] = static_cast<std::uint8_t>(v);
  }
  return make_mask(Region{"", 0, 0, header.lines, header.samples}, std::move(labels));
}

GroundTruthMask load_mask(const FilePair& files) {
  const Header header = read_header(files.header);
  std::ifstream raster(files.raster, std::ios::binary);
  if (!raster) fail(ErrorKind::io, "cannot open raster " + files.raster.string());
  return read_mask(header, raster);
}

Encoded encode_mask(const GroundTruthMask& mask) {
  const Header h = header_for(mask.region.lines, mask.region.samples, 1, WriteOptions{DataType::u8});
  return {format_header(h), std::string(mask.labels.begin(), mask.labels.end())};
}

void write_mask(const GroundTruthMask& mask, const FilePair& files) {
  const Encoded e = encode_mask(mask);
  write_file_atomic(files.raster, e.raster);
  write_file_atomic(files.header, e.header);
}

std::vector<double> read_signature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open signature file " + path.string());
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  int columns = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = t.find(',', start);
      fields.push_back(trim(std::string_view(t).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() > 2)
      fail(ErrorKind::validation, path.string() + ":" + std::to_string(line_no) + ": expected 1 or 2 columns");
    bool ok = false;
    const double v = parse_double(fields.back(), &ok);
    if (!ok) {
      if (values.empty() && columns == 0) continue;  // column header row
      fail(ErrorKind::validation, path.string() + ":" + std::to_string(line_no) + ": not a number");
    }
    if (columns == 0) columns = static_cast<int>(fields.size());
    if (columns != static_cast<int>(fields.size()))
      fail(ErrorKind::validation, path.string() + ":" + std::to_string(line_no) + ": inconsistent column count");
    if (!std::isfinite(v))
      fail(ErrorKind::validation, path.string() + ":" + std::to_string(line_no) + ": non-finite value");
    values.push_back(v);
  }
  if (values.empty()) fail(ErrorKind::validation, path.string() + ": empty signature");
  return values;
}

std::string signature_csv(const std::vector<double>& values, const std::vector<double>& wavelengths) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (wavelengths.size() == values.size()) out += format_double(wavelengths[i]) + ",";
    out += format_double(values[i]) + "\n";
  }
  return out;
}

void write_signature_csv(const std::filesystem::path& path, const std::vector<double>& values,
                         const std::vector<double>& wavelengths) {
  write_file_atomic(path, signature_csv(values, wavelengths));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  namespace fs = std::filesystem;
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      fail(ErrorKind::io, "write failed for " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorKind::io, "cannot rename into " + path.string());
  }
}

}  // namespace hsd::envi
