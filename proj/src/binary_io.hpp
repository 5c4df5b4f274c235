#pragma once

// Little-endian scalar encoding shared by the model blobs.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "hsd/error.hpp"

namespace hsd::detail {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(std::string_view bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  std::uint64_t u64() {
    if (pos_ + 8 > bytes_.size()) fail(ErrorKind::validation, what_ + ": truncated");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes_[pos_ + i]);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }

  std::string_view raw(std::size_t n) {
    if (pos_ + n > bytes_.size()) fail(ErrorKind::validation, what_ + ": truncated");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace hsd::detail
