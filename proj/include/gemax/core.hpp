#pragma once

// Shared value types: depth grids, depth histograms, mapping functions and
// low-dynamic-range images, plus the entropy measures every stage reports.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gemax/error.hpp"

namespace gemax {

namespace detail {

inline std::size_t level_index(double depth, double origin, double width,
                               std::size_t levels) noexcept {
  const double t = std::floor((depth - origin) / width);
  if (!(t > 0.0)) return 0;
  return t >= static_cast<double>(levels - 1) ? levels - 1 : static_cast<std::size_t>(t);
}

}  // namespace detail

/// Raw depth scan in millimeters. A sample only carries meaning where its
/// mask entry is set.
class DepthGrid {
 public:
  DepthGrid(std::size_t width, std::size_t height, std::vector<double> samples,
            std::vector<std::uint8_t> valid)
      : width_(width), height_(height), samples_(std::move(samples)), valid_(std::move(valid)) {
    if (width_ == 0 || height_ == 0)
      throw Error(ErrorCode::InvalidArgument, "depth grid must be at least 1x1");
    if (samples_.size() != width_ * height_ || valid_.size() != width_ * height_)
      throw Error(ErrorCode::LengthMismatch, "depth grid buffers must hold width*height entries");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (valid_[i] && !(std::isfinite(samples_[i]) && samples_[i] >= 0.0))
        throw Error(ErrorCode::InvalidArgument,
                    "valid depth sample " + std::to_string(i) + " is negative or not finite");
    }
  }

  /// Every sample valid.
  DepthGrid(std::size_t width, std::size_t height, std::vector<double> samples)
      : DepthGrid(width, height, std::move(samples),
                  std::vector<std::uint8_t>(width * height, 1)) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return samples_.size(); }

  std::span<const double> samples() const noexcept { return samples_; }
  std::span<const std::uint8_t> valid_mask() const noexcept { return valid_; }

  double at(std::size_t x, std::size_t y) const { return samples_.at(y * width_ + x); }
  bool is_valid(std::size_t i) const { return valid_.at(i) != 0; }

  std::size_t valid_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(valid_.begin(), valid_.end(),
                                                  [](std::uint8_t v) { return v != 0; }));
  }

  /// Same samples, different mask. The new mask may only clear entries.
  DepthGrid with_mask(std::vector<std::uint8_t> mask) const {
    if (mask.size() != valid_.size())
      throw Error(ErrorCode::LengthMismatch, "mask size differs from grid size");
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = (mask[i] && valid_[i]) ? 1 : 0;
    return DepthGrid(width_, height_, samples_, std::move(mask));
  }

  friend bool operator==(const DepthGrid&, const DepthGrid&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<double> samples_;
  std::vector<std::uint8_t> valid_;
};

/// Probability over N input depth levels. Level i covers depths
/// [origin + i*bin_width, origin + (i+1)*bin_width); the last level is closed.
class Histogram {
 public:
  Histogram(std::vector<double> bins, double range_origin = 0.0, double bin_width = 1.0)
      : bins_(std::move(bins)), origin_(range_origin), bin_width_(bin_width) {
    if (bins_.size() < 2) throw Error(ErrorCode::InvalidArgument, "histogram needs N >= 2 levels");
    if (!(bin_width_ > 0.0) || !std::isfinite(bin_width_))
      throw Error(ErrorCode::InvalidArgument, "bin width must be positive");
    double total = 0.0;
    for (double b : bins_) {
      if (!(b >= 0.0) || !std::isfinite(b))
        throw Error(ErrorCode::InvalidArgument, "histogram bins must be finite and >= 0");
      total += b;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw Error(ErrorCode::InvalidArgument, "histogram bins must sum to 1");
  }

  /// Normalizes arbitrary nonnegative weights (e.g. raw counts).
  static Histogram from_weights(std::span<const double> weights, double range_origin = 0.0,
                                double bin_width = 1.0) {
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w))
        throw Error(ErrorCode::InvalidArgument, "histogram weights must be finite and >= 0");
      total += w;
    }
    if (!(total > 0.0)) throw Error(ErrorCode::EmptyGrid, "histogram weights sum to zero");
    std::vector<double> bins(weights.begin(), weights.end());
    for (double& b : bins) b /= total;
    return Histogram(std::move(bins), range_origin, bin_width);
  }

  std::size_t levels() const noexcept { return bins_.size(); }
  std::span<const double> bins() const noexcept { return bins_; }
  double operator[](std::size_t i) const { return bins_[i]; }
  double range_origin() const noexcept { return origin_; }
  double bin_width() const noexcept { return bin_width_; }

  /// Input level of a depth value; values outside the range clamp to the ends.
  std::size_t level_of(double depth_mm) const noexcept {
    return detail::level_index(depth_mm, origin_, bin_width_, bins_.size());
  }

 private:
  std::vector<double> bins_;
  double origin_;
  double bin_width_;
};

/// Breakpoints d_0 = 0 < d_1 < ... < d_K = N. Output level k collects input
/// levels [d_k, d_{k+1}).
class MappingFunction {
 public:
  explicit MappingFunction(std::vector<int> breakpoints) : d_(std::move(breakpoints)) {
    if (d_.size() < 2)
      throw Error(ErrorCode::InvalidArgument, "mapping needs at least two breakpoints");
    if (d_.front() != 0) throw Error(ErrorCode::InvalidArgument, "mapping must start at level 0");
    for (std::size_t k = 1; k < d_.size(); ++k) {
      if (d_[k] <= d_[k - 1])
        throw Error(ErrorCode::InvalidArgument, "mapping breakpoints must strictly increase");
    }
  }

  std::span<const int> breakpoints() const noexcept { return d_; }
  int operator[](std::size_t k) const { return d_[k]; }
  /// Number of output levels.
  int levels() const noexcept { return static_cast<int>(d_.size()) - 1; }
  /// Number of input levels covered.
  int input_levels() const noexcept { return d_.back(); }
  int max_span() const noexcept {
    int span = 0;
    for (std::size_t k = 1; k < d_.size(); ++k) span = std::max(span, d_[k] - d_[k - 1]);
    return span;
  }

  /// lut[b] = output level of input level b.
  std::vector<int> level_table() const {
    std::vector<int> lut(static_cast<std::size_t>(d_.back()));
    for (std::size_t k = 0; k + 1 < d_.size(); ++k)
      std::fill(lut.begin() + d_[k], lut.begin() + d_[k + 1], static_cast<int>(k));
    return lut;
  }

  friend bool operator==(const MappingFunction&, const MappingFunction&) = default;

 private:
  std::vector<int> d_;
};

/// K-level image. Invalid pixels hold background_level and are ignored by
/// image statistics.
struct LdrImage {
  std::size_t width = 0;
  std::size_t height = 0;
  int levels_count = 0;  // K
  int background_level = 0;
  std::vector<int> levels;
  std::vector<std::uint8_t> valid;

  friend bool operator==(const LdrImage&, const LdrImage&) = default;
};

struct EnhanceConfig {
  int input_levels = 4096;   // N
  int output_levels = 256;   // K
  int tau = 20;
  double block_depth_mm = 60.0;
  double anchor_percentile = 0.001;
  int background_level = 0;

  void validate() const {
    if (input_levels < 2 || output_levels < 1 || output_levels > input_levels)
      throw Error(ErrorCode::InvalidArgument, "need 1 <= K <= N and N >= 2");
    if (tau < 1) throw Error(ErrorCode::InvalidTau, "tau must be >= 1");
    if (static_cast<long long>(tau) * output_levels < input_levels)
      throw Error(ErrorCode::Infeasible, "K·tau < N");
    if (tau > input_levels) throw Error(ErrorCode::InvalidTau, "tau must not exceed N");
    if (!(block_depth_mm > 0.0)) throw Error(ErrorCode::InvalidArgument, "block depth must be > 0");
  }
};

/// Quantizes the valid samples of a grid into N levels spanning min..max.
inline Histogram build_histogram(const DepthGrid& grid, int input_levels) {
  if (input_levels < 2) throw Error(ErrorCode::InvalidArgument, "N must be >= 2");
  const auto samples = grid.samples();
  const auto mask = grid.valid_mask();
  double lo = 0.0, hi = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!mask[i]) continue;
    if (count == 0) {
      lo = hi = samples[i];
    } else {
      lo = std::min(lo, samples[i]);
      hi = std::max(hi, samples[i]);
    }
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::EmptyGrid, "no valid pixels to build a histogram from");

  const double width = hi > lo ? (hi - lo) / input_levels : 1.0;
  const auto n = static_cast<std::size_t>(input_levels);
  std::vector<double> counts(n, 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (mask[i]) counts[detail::level_index(samples[i], lo, width, n)] += 1.0;
  }
  for (double& c : counts) c /= static_cast<double>(count);
  return Histogram(std::move(counts), lo, width);
}

/// -sum p log2 p, with 0 log 0 = 0.
inline double shannon_entropy(std::span<const double> probabilities) noexcept {
  double h = 0.0;
  for (double p : probabilities) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

/// Entropy of the valid-pixel level histogram of an LDR image.
inline double image_entropy(const LdrImage& image) {
  std::vector<double> counts(static_cast<std::size_t>(std::max(image.levels_count, 1)), 0.0);
  std::size_t n = 0;
  for (std::size_t i = 0; i < image.levels.size(); ++i) {
    if (!image.valid[i]) continue;
    const int level = image.levels[i];
    if (level < 0 || level >= image.levels_count)
      throw Error(ErrorCode::IndexOutOfRange, "pixel level outside [0, K)");
    counts[static_cast<std::size_t>(level)] += 1.0;
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::EmptyImage, "image has no valid pixels");
  for (double& c : counts) c /= static_cast<double>(n);
  return shannon_entropy(counts);
}

}  // namespace gemax
