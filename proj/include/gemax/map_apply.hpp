#pragma once

#include <algorithm>
#include <chrono>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "gemax/core.hpp"
#include "gemax/range_selection.hpp"
#include "gemax/solver.hpp"

namespace gemax {

/// Maps each valid pixel's input level through F; invalid pixels get the
/// background level.
inline LdrImage apply_mapping(const DepthGrid& grid, const Histogram& hist,
                              const MappingFunction& mapping, int background_level = 0) {
  if (mapping.input_levels() != static_cast<int>(hist.levels()))
    throw Error(ErrorCode::MismatchedN, "mapping and histogram disagree on N");
  const auto lut = mapping.level_table();
  const auto samples = grid.samples();
  const auto mask = grid.valid_mask();

  LdrImage image;
  image.width = grid.width();
  image.height = grid.height();
  image.levels_count = mapping.levels();
  image.background_level = background_level;
  image.levels.assign(samples.size(), background_level);
  image.valid.assign(mask.begin(), mask.end());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (mask[i]) image.levels[i] = lut[hist.level_of(samples[i])];
  }
  return image;
}

struct MapEntry {
  int tau = 0;
  LdrImage image;
  double entropy_bits = 0.0;
  SolverResult solve;
  double solve_time_ms = 0.0;
};

struct TauWarning {
  int tau = 0;
  ErrorCode code = ErrorCode::Infeasible;
  std::string message;
};

struct MapCollection {
  std::string source_id;
  std::vector<MapEntry> entries;  // ascending tau
  std::vector<TauWarning> warnings;
};

/// Extracts the depth block once, builds one histogram and produces one map
/// per tau. Infeasible taus are recorded as warnings; the rest still run.
inline MapCollection batch_generate(const DepthGrid& grid, const EnhanceConfig& cfg,
                                    std::vector<int> taus, std::string source_id = {}) {
  if (cfg.input_levels < 2 || cfg.output_levels < 1 || cfg.output_levels > cfg.input_levels)
    throw Error(ErrorCode::InvalidArgument, "need 1 <= K <= N and N >= 2");
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());

  const double anchor = locate_anchor(grid, cfg.anchor_percentile);
  const DepthGrid block = extract_depth_block(grid, cfg.block_depth_mm, anchor);
  const Histogram hist = build_histogram(block, cfg.input_levels);

  struct Outcome {
    std::optional<MapEntry> entry;
    ErrorCode code = ErrorCode::Infeasible;
    std::string error;
  };
  auto run = [&](int tau) -> Outcome {
    try {
      EnhanceConfig c = cfg;
      c.tau = tau;
      c.validate();
      const auto start = std::chrono::steady_clock::now();
      SolverResult solved = solve_gemax(hist, cfg.output_levels, tau);
      const std::chrono::duration<double, std::milli> took = std::chrono::steady_clock::now() - start;
      LdrImage image = apply_mapping(block, hist, solved.mapping, cfg.background_level);
      const double h = image_entropy(image);
      return {MapEntry{tau, std::move(image), h, std::move(solved), took.count()}, {}, {}};
    } catch (const Error& e) {
      return {std::nullopt, e.code(), e.what()};
    }
  };

  std::vector<std::future<Outcome>> pending;
  pending.reserve(taus.size());
  for (int tau : taus) pending.push_back(std::async(std::launch::async, run, tau));

  MapCollection out;
  out.source_id = std::move(source_id);
  for (std::size_t i = 0; i < taus.size(); ++i) {
    Outcome o = pending[i].get();
    if (o.entry)
      out.entries.push_back(std::move(*o.entry));
    else
      out.warnings.push_back({taus[i], o.code, std::move(o.error)});
  }
  return out;
}

}  // namespace gemax
