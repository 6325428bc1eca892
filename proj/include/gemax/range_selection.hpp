#pragma once

// Depth-block extraction anchored at the nose (closest valid depth).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "gemax/core.hpp"

namespace gemax {

struct BlockSweepConfig {
  double d_min_mm = 50.0;
  double d_max_mm = 140.0;
  double delta_d_mm = 10.0;
  double anchor_percentile = 0.001;

  void validate() const {
    if (!(d_min_mm > 0.0) || !(d_min_mm <= d_max_mm))
      throw Error(ErrorCode::InvalidArgument, "need 0 < d_min <= d_max");
    if (!(delta_d_mm > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta_d must be > 0");
    if (!(anchor_percentile >= 0.0 && anchor_percentile <= 0.05))
      throw Error(ErrorCode::InvalidArgument, "anchor percentile must lie in [0, 0.05]");
  }
};

struct DepthBlock {
  double block_depth_mm;
  DepthGrid grid;
};

/// Low quantile of the valid depths. Percentile 0 returns the exact minimum;
/// the quantile index is floor(p * (n - 1)) into the sorted valid depths.
inline double locate_anchor(const DepthGrid& grid, double anchor_percentile = 0.001) {
  if (!(anchor_percentile >= 0.0 && anchor_percentile <= 0.05))
    throw Error(ErrorCode::InvalidArgument, "anchor percentile must lie in [0, 0.05]");
  std::vector<double> depths;
  depths.reserve(grid.size());
  const auto samples = grid.samples();
  const auto mask = grid.valid_mask();
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (mask[i]) depths.push_back(samples[i]);
  if (depths.empty()) throw Error(ErrorCode::EmptyGrid, "no valid pixels to anchor on");
  const auto index = static_cast<std::size_t>(
      std::floor(anchor_percentile * static_cast<double>(depths.size() - 1)));
  std::nth_element(depths.begin(), depths.begin() + static_cast<std::ptrdiff_t>(index),
                   depths.end());
  return depths[index];
}

/// Keeps the slab anchor <= z <= anchor + block_depth_mm.
inline DepthGrid extract_depth_block(const DepthGrid& grid, double block_depth_mm, double anchor) {
  if (!(block_depth_mm > 0.0)) throw Error(ErrorCode::InvalidArgument, "block depth must be > 0");
  const auto samples = grid.samples();
  const auto mask = grid.valid_mask();
  std::vector<std::uint8_t> kept(mask.size(), 0);
  bool any = false;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!mask[i]) continue;
    const double z = samples[i];
    if (z >= anchor && z - anchor <= block_depth_mm) {
      kept[i] = 1;
      any = true;
    }
  }
  if (!any) throw Error(ErrorCode::EmptyGrid, "depth block contains no pixels");
  return grid.with_mask(std::move(kept));
}

/// One nested block per depth in d_min, d_min + delta, ..., d_max.
inline std::vector<DepthBlock> generate_blocks(const DepthGrid& grid, const BlockSweepConfig& cfg) {
  cfg.validate();
  const double anchor = locate_anchor(grid, cfg.anchor_percentile);
  // Integer step count avoids accumulating delta in floating point.
  const auto steps =
      static_cast<int>(std::floor((cfg.d_max_mm - cfg.d_min_mm) / cfg.delta_d_mm + 1e-9));
  std::vector<DepthBlock> blocks;
  blocks.reserve(static_cast<std::size_t>(steps) + 1);
  for (int s = 0; s <= steps; ++s) {
    const double depth = cfg.d_min_mm + s * cfg.delta_d_mm;
    blocks.push_back({depth, extract_depth_block(grid, depth, anchor)});
  }
  return blocks;
}

}  // namespace gemax
