#pragma once

// Facial-attention operators: pooling that turns a feature volume into
// attention maps, the attention loss with its analytic gradient, and the crop
// and resize helpers used to cut part patches out of the input.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "gemax/error.hpp"

namespace gemax {

/// Row-major height x width array.
template <typename T>
struct Plane {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<T> values;

  Plane() = default;
  Plane(std::size_t h, std::size_t w, T fill = T{}) : height(h), width(w), values(h * w, fill) {}
  Plane(std::size_t h, std::size_t w, std::vector<T> v) : height(h), width(w), values(std::move(v)) {
    if (values.size() != h * w) throw Error(ErrorCode::LengthMismatch, "plane needs height*width values");
  }

  T& operator()(std::size_t y, std::size_t x) { return values[y * width + x]; }
  const T& operator()(std::size_t y, std::size_t x) const { return values[y * width + x]; }

  friend bool operator==(const Plane&, const Plane&) = default;
};

using AttentionMap = Plane<double>;

/// C x H x W features, channel-major.
class FeatureVolume {
 public:
  FeatureVolume(std::size_t channels, std::size_t height, std::size_t width, std::vector<double> values)
      : c_(channels), h_(height), w_(width), values_(std::move(values)) {
    if (c_ == 0 || h_ == 0 || w_ == 0) throw Error(ErrorCode::BadSizes, "feature volume dims must be >= 1");
    if (values_.size() != c_ * h_ * w_)
      throw Error(ErrorCode::LengthMismatch, "feature volume needs C*H*W values");
    for (double v : values_)
      if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "feature values must be finite");
  }

  std::size_t channels() const noexcept { return c_; }
  std::size_t height() const noexcept { return h_; }
  std::size_t width() const noexcept { return w_; }
  double operator()(std::size_t c, std::size_t y, std::size_t x) const { return values_[(c * h_ + y) * w_ + x]; }
  std::span<const double> channel(std::size_t c) const {
    return std::span<const double>(values_).subspan(c * h_ * w_, h_ * w_);
  }

 private:
  std::size_t c_, h_, w_;
  std::vector<double> values_;
};

/// Per-channel spatial mean.
inline std::vector<double> spatial_average_pool(const FeatureVolume& f) {
  std::vector<double> out(f.channels(), 0.0);
  const auto area = static_cast<double>(f.height() * f.width());
  for (std::size_t c = 0; c < f.channels(); ++c) {
    double sum = 0.0;
    for (double v : f.channel(c)) sum += v;
    out[c] = sum / area;
  }
  return out;
}

/// Reweights channel c by query[c] and averages over channels.
inline AttentionMap channel_reweight_pool(const FeatureVolume& f, std::span<const double> query) {
  if (query.size() != f.channels())
    throw Error(ErrorCode::LengthMismatch, "query length must equal channel count");
  AttentionMap m(f.height(), f.width(), 0.0);
  for (std::size_t c = 0; c < f.channels(); ++c) {
    const auto ch = f.channel(c);
    for (std::size_t i = 0; i < ch.size(); ++i) m.values[i] += query[c] * ch[i];
  }
  const auto channels = static_cast<double>(f.channels());
  for (double& v : m.values) v /= channels;
  return m;
}

struct AffineLayer {
  std::size_t rows = 0;  // outputs
  std::size_t cols = 0;  // inputs
  std::vector<double> weights;  // rows x cols, row-major
  std::vector<double> bias;     // rows

  std::vector<double> apply(std::span<const double> in) const {
    if (in.size() != cols) throw Error(ErrorCode::LengthMismatch, "affine layer input size mismatch");
    std::vector<double> out(bias);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) out[r] += weights[r * cols + c] * in[c];
    return out;
  }
};

/// Pooled features -> query vector through encoder and decoder affine maps
/// with a ReLU between them. The decoder output is used unsquashed.
struct QueryProjection {
  AffineLayer encoder;
  AffineLayer decoder;

  std::vector<double> operator()(std::span<const double> pooled) const {
    auto hidden = encoder.apply(pooled);
    for (double& h : hidden) h = std::max(h, 0.0);
    return decoder.apply(hidden);
  }
};

inline AttentionMap attention_map(const FeatureVolume& f, const QueryProjection& projection) {
  const auto query = projection(spatial_average_pool(f));
  return channel_reweight_pool(f, query);
}

struct Peak {
  std::size_t x = 0;
  std::size_t y = 0;
  friend bool operator==(const Peak&, const Peak&) = default;
};

/// Argmax with ties going to the first cell in row-major order.
inline Peak find_peak(std::span<const double> values, std::size_t width) {
  std::size_t arg = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[arg]) arg = i;
  return {arg % width, arg / width};
}

/// N_M nonnegative maps of one size, with their peaks.
class AttentionStack {
 public:
  explicit AttentionStack(std::vector<AttentionMap> maps) : maps_(std::move(maps)) {
    if (maps_.empty()) throw Error(ErrorCode::TooFewMaps, "attention stack is empty");
    const auto h = maps_.front().height, w = maps_.front().width;
    if (h == 0 || w == 0) throw Error(ErrorCode::BadSizes, "attention maps must be at least 1x1");
    for (const auto& m : maps_) {
      if (m.height != h || m.width != w) throw Error(ErrorCode::BadSizes, "attention maps differ in size");
      if (m.values.size() != h * w) throw Error(ErrorCode::LengthMismatch, "attention map buffer size");
      for (double v : m.values)
        if (!(v >= 0.0) || !std::isfinite(v))
          throw Error(ErrorCode::InvalidArgument, "attention maps must be finite and >= 0");
      peaks_.push_back(find_peak(m.values, w));
    }
  }

  std::size_t size() const noexcept { return maps_.size(); }
  std::size_t height() const noexcept { return maps_.front().height; }
  std::size_t width() const noexcept { return maps_.front().width; }
  const std::vector<AttentionMap>& maps() const noexcept { return maps_; }
  const std::vector<Peak>& peaks() const noexcept { return peaks_; }

 private:
  std::vector<AttentionMap> maps_;
  std::vector<Peak> peaks_;
};

struct FaLossParams {
  double alpha = 1e3;
  double beta = 1e2;
  double margin = 0.1;
};

namespace detail {

// Loss over raw, possibly unvalidated maps. Peaks are recomputed from the
// values, which is what a finite-difference probe needs.
inline double fa_loss_raw(const std::vector<AttentionMap>& maps, const FaLossParams& p) {
  if (maps.size() < 2) throw Error(ErrorCode::TooFewMaps, "attention loss needs at least two maps");
  const std::size_t h = maps.front().height, w = maps.front().width;
  double loss = 0.0;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const Peak peak = find_peak(maps[i].values, w);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double m = maps[i](y, x);
        double cross = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < maps.size(); ++j)
          if (j != i) cross = std::max(cross, maps[j](y, x));
        const double dx = static_cast<double>(x) - static_cast<double>(peak.x);
        const double dy = static_cast<double>(y) - static_cast<double>(peak.y);
        loss += p.alpha * m * (cross - p.margin) + p.beta * m * (dx * dx + dy * dy);
      }
    }
  }
  return loss;
}

}  // namespace detail

/// Diversity term (alpha) pushing maps apart plus concentration term (beta)
/// pulling each map toward its own peak.
inline double fa_loss(const AttentionStack& stack, const FaLossParams& params) {
  return detail::fa_loss_raw(stack.maps(), params);
}

/// d loss / d M_i(x, y). Peaks are held fixed; the cross-map max routes its
/// derivative to the lowest-index winner.
inline std::vector<AttentionMap> fa_loss_grad(const AttentionStack& stack, const FaLossParams& p) {
  const auto& maps = stack.maps();
  const std::size_t count = maps.size();
  if (count < 2) throw Error(ErrorCode::TooFewMaps, "attention loss needs at least two maps");
  const std::size_t h = stack.height(), w = stack.width();
  std::vector<AttentionMap> grad(count, AttentionMap(h, w, 0.0));

  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t i = 0; i < count; ++i) {
        std::size_t winner = i == 0 ? 1 : 0;
        for (std::size_t j = 0; j < count; ++j)
          if (j != i && maps[j](y, x) > maps[winner](y, x)) winner = j;
        const double m = maps[i](y, x);
        const Peak& peak = stack.peaks()[i];
        const double dx = static_cast<double>(x) - static_cast<double>(peak.x);
        const double dy = static_cast<double>(y) - static_cast<double>(peak.y);
        grad[i](y, x) += p.alpha * (maps[winner](y, x) - p.margin) + p.beta * (dx * dx + dy * dy);
        grad[winner](y, x) += p.alpha * m;
      }
    }
  }
  return grad;
}

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t probes = 0;
};

/// Central differences of fa_loss against fa_loss_grad at every cell. The
/// relative error divides by max(|analytic|, |numeric|, floor).
inline GradientCheck fa_gradient_check(const AttentionStack& stack, const FaLossParams& params,
                                       double step = 1e-5, double floor = 1e-8) {
  const auto analytic = fa_loss_grad(stack, params);
  std::vector<AttentionMap> probe = stack.maps();
  GradientCheck out;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    for (std::size_t c = 0; c < probe[i].values.size(); ++c) {
      const double original = probe[i].values[c];
      probe[i].values[c] = original + step;
      const double up = detail::fa_loss_raw(probe, params);
      probe[i].values[c] = original - step;
      const double down = detail::fa_loss_raw(probe, params);
      probe[i].values[c] = original;
      const double numeric = (up - down) / (2.0 * step);
      const double exact = analytic[i].values[c];
      const double scale = std::max({std::abs(exact), std::abs(numeric), floor});
      out.max_relative_error = std::max(out.max_relative_error, std::abs(numeric - exact) / scale);
      ++out.probes;
    }
  }
  return out;
}

struct CropBox {
  long x0 = 0;
  long y0 = 0;
  long side = 0;
  friend bool operator==(const CropBox&, const CropBox&) = default;
};

/// Square crop of side crop_size centered on the map's peak, with the peak
/// cell's center scaled to input pixels, clamped inside the input.
inline CropBox peak_crop_box(const AttentionMap& map, long input_size, long crop_size) {
  if (map.height == 0 || map.width == 0 || input_size < 1 || crop_size < 1 || crop_size > input_size)
    throw Error(ErrorCode::BadSizes, "need 1 <= crop_size <= input_size and a non-empty map");
  const Peak peak = find_peak(map.values, map.width);
  const double cx = (static_cast<double>(peak.x) + 0.5) * static_cast<double>(input_size) / static_cast<double>(map.width);
  const double cy = (static_cast<double>(peak.y) + 0.5) * static_cast<double>(input_size) / static_cast<double>(map.height);
  const long limit = input_size - crop_size;
  const long x0 = std::clamp(std::lround(cx - static_cast<double>(crop_size) / 2.0), 0L, limit);
  const long y0 = std::clamp(std::lround(cy - static_cast<double>(crop_size) / 2.0), 0L, limit);
  return {x0, y0, crop_size};
}

/// Bilinear resampling with corner-aligned sample grids: the first and last
/// rows and columns of source and target coincide.
template <typename T>
Plane<T> bilinear_resize(const Plane<T>& src, std::size_t target_height, std::size_t target_width) {
  if (src.height == 0 || src.width == 0 || target_height == 0 || target_width == 0)
    throw Error(ErrorCode::BadSizes, "resize needs non-empty source and target");
  auto coord = [](std::size_t i, std::size_t target, std::size_t source) {
    if (target == 1 || source == 1) return 0.5 * static_cast<double>(source - 1);
    return static_cast<double>(i) * static_cast<double>(source - 1) / static_cast<double>(target - 1);
  };
  Plane<T> out(target_height, target_width);
  for (std::size_t y = 0; y < target_height; ++y) {
    const double sy = coord(y, target_height, src.height);
    const auto y0 = std::min(static_cast<std::size_t>(sy), src.height - 1);
    const auto y1 = std::min(y0 + 1, src.height - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t x = 0; x < target_width; ++x) {
      const double sx = coord(x, target_width, src.width);
      const auto x0 = std::min(static_cast<std::size_t>(sx), src.width - 1);
      const auto x1 = std::min(x0 + 1, src.width - 1);
      const double fx = sx - static_cast<double>(x0);
      const auto lerp = [](double a, double b, double t) { return a + t * (b - a); };
      const double top = lerp(static_cast<double>(src(y0, x0)), static_cast<double>(src(y0, x1)), fx);
      const double bottom = lerp(static_cast<double>(src(y1, x0)), static_cast<double>(src(y1, x1)), fx);
      out(y, x) = static_cast<T>(lerp(top, bottom, fy));
    }
  }
  return out;
}

}  // namespace gemax
