#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hsd {

// Dense lines x samples x bands array held band-interleaved-by-pixel, so each
// pixel spectrum is contiguous. Values are 64-bit regardless of the source
// file's data type.
//
// line_origin/sample_origin locate the cube inside the full scene it was cut
// from; regions are always expressed in full-scene coordinates.
class SpectralCube {
 public:
  SpectralCube() = default;
  SpectralCube(std::size_t lines, std::size_t samples, std::size_t bands,
               std::size_t line_origin = 0, std::size_t sample_origin = 0)
      : lines_(lines),
        samples_(samples),
        bands_(bands),
        line_origin_(line_origin),
        sample_origin_(sample_origin),
        values_(lines * samples * bands, 0.0) {}

  std::size_t lines() const { return lines_; }
  std::size_t samples() const { return samples_; }
  std::size_t bands() const { return bands_; }
  std::size_t pixel_count() const { return lines_ * samples_; }
  std::size_t line_origin() const { return line_origin_; }
  std::size_t sample_origin() const { return sample_origin_; }

  std::span<const double> pixel(std::size_t line, std::size_t sample) const {
    return {values_.data() + (line * samples_ + sample) * bands_, bands_};
  }
  std::span<double> pixel(std::size_t line, std::size_t sample) {
    return {values_.data() + (line * samples_ + sample) * bands_, bands_};
  }
  // Pixel by line-major flat index.
  std::span<const double> pixel(std::size_t index) const {
    return {values_.data() + index * bands_, bands_};
  }
  std::span<double> pixel(std::size_t index) {
    return {values_.data() + index * bands_, bands_};
  }

  double at(std::size_t line, std::size_t sample, std::size_t band) const {
    return values_[(line * samples_ + sample) * bands_ + band];
  }
  double& at(std::size_t line, std::size_t sample, std::size_t band) {
    return values_[(line * samples_ + sample) * bands_ + band];
  }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  // Band centers in nanometers, empty when the source carried none.
  std::vector<double> wavelengths;
  // Number of NaN/Inf values found when the cube was loaded.
  std::size_t nonfinite_count = 0;

 private:
  std::size_t lines_ = 0;
  std::size_t samples_ = 0;
  std::size_t bands_ = 0;
  std::size_t line_origin_ = 0;
  std::size_t sample_origin_ = 0;
  std::vector<double> values_;
};

}  // namespace hsd
