#pragma once

// Seeded generators and the randomized suites shared by the CLI and tests:
// oracle equivalence, synthetic face scans, non-degenerate attention stacks
// and solver timing.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gemax/attention.hpp"
#include "gemax/core.hpp"
#include "gemax/map_apply.hpp"
#include "gemax/range_selection.hpp"
#include "gemax/solver.hpp"

namespace gemax {

/// mt19937_64 with portable real/integer draws (the standard distributions
/// are implementation-defined, so they are not used).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// [lo, hi]
  int integer(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(engine_() % span);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[engine_() % i]);
  }

 private:
  std::mt19937_64 engine_;
};

/// Random weights in (0, 1]; each bin is zeroed with probability
/// zero_fraction, keeping at least one nonzero bin.
inline Histogram random_histogram(Rng& rng, int levels, double zero_fraction = 0.0) {
  std::vector<double> w(static_cast<std::size_t>(levels));
  for (auto& x : w) x = rng.uniform() < zero_fraction ? 0.0 : 1.0 - rng.uniform();
  if (std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) w[0] = 1.0;
  return Histogram::from_weights(w);
}

struct OracleMismatch {
  std::vector<double> bins;
  int output_levels = 0;
  int tau = 0;
  std::vector<int> solver_breakpoints;
  std::vector<int> oracle_breakpoints;
  double solver_entropy = 0.0;
  double oracle_entropy = 0.0;
};

struct OracleSuiteResult {
  int trials = 0;
  int passed = 0;
  std::uint64_t solves = 0;
  std::vector<OracleMismatch> mismatches;
};

/// Each trial draws N in [4, 12], K in [2, min(5, N)] and a histogram, then
/// compares solver and oracle at every feasible tau. inject_off_by_one
/// deliberately shifts one solver breakpoint to exercise failure reporting.
inline OracleSuiteResult run_oracle_suite(int trials, std::uint64_t seed, bool inject_off_by_one = false) {
  Rng rng(seed);
  OracleSuiteResult result;
  result.trials = trials;
  for (int t = 0; t < trials; ++t) {
    const int n = rng.integer(4, 12);
    const int k = rng.integer(2, std::min(5, n));
    const Histogram hist = random_histogram(rng, n, t % 4 == 3 ? 0.3 : 0.0);
    bool ok = true;
    for (int tau = (n + k - 1) / k; tau <= n; ++tau) {
      const SolverResult solved = solve_gemax(hist, k, tau);
      const SolverResult oracle = brute_force_oracle(hist, k, tau);
      ++result.solves;
      std::vector<int> got(solved.mapping.breakpoints().begin(), solved.mapping.breakpoints().end());
      double got_entropy = solved.entropy_bits;
      if (inject_off_by_one) {
        for (std::size_t i = 1; i + 1 < got.size(); ++i) {
          if (got[i + 1] - got[i] > 1) {
            ++got[i];
            break;
          }
          if (got[i] - got[i - 1] > 1) {
            --got[i];
            break;
          }
        }
        got_entropy = mapping_entropy(hist, MappingFunction(got));
      }
      const std::vector<int> want(oracle.mapping.breakpoints().begin(), oracle.mapping.breakpoints().end());
      if (got != want || std::abs(got_entropy - oracle.entropy_bits) > kTieTolerance) {
        ok = false;
        result.mismatches.push_back({std::vector<double>(hist.bins().begin(), hist.bins().end()), k, tau, got,
                                     want, got_entropy, oracle.entropy_bits});
      }
    }
    if (ok) ++result.passed;
  }
  return result;
}

inline std::string describe(const OracleMismatch& m) {
  std::ostringstream os;
  os.precision(17);
  auto list = [&](const auto& v) {
    os << '{';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << '}';
  };
  os << "N=" << m.bins.size() << " K=" << m.output_levels << " tau=" << m.tau << " hist=";
  list(m.bins);
  os << " solver=";
  list(m.solver_breakpoints);
  os << " (" << m.solver_entropy << ") oracle=";
  list(m.oracle_breakpoints);
  os << " (" << m.oracle_entropy << ")";
  return os.str();
}

/// Frontal face-like scan in millimeters: a sphere of radius 80 mm bulging
/// toward the camera from a flat 200 mm background, with a nose bump, two
/// brow ridges and seeded sensor noise. One pixel is 0.8 mm for size 224.
inline DepthGrid synthetic_face(std::size_t size, std::uint64_t seed) {
  Rng rng(seed);
  const double pixel_mm = 180.0 / static_cast<double>(size);
  const double c = 0.5 * static_cast<double>(size - 1);
  std::vector<double> depth(size * size);
  std::vector<std::uint8_t> valid(size * size, 1);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double px = (static_cast<double>(x) - c) * pixel_mm;
      const double py = (static_cast<double>(y) - c) * pixel_mm;
      double z = 200.0;
      const double r2 = px * px + py * py;
      if (r2 < 80.0 * 80.0) {
        z = 200.0 - std::sqrt(80.0 * 80.0 - r2);
        z -= 18.0 * std::exp(-(px * px / 60.0 + (py - 5.0) * (py - 5.0) / 300.0));
        z -= 6.0 * std::exp(-((px - 25.0) * (px - 25.0) + (py + 25.0) * (py + 25.0)) / 120.0);
        z -= 6.0 * std::exp(-((px + 25.0) * (px + 25.0) + (py + 25.0) * (py + 25.0)) / 120.0);
      }
      z += rng.uniform(-0.4, 0.4);
      depth[y * size + x] = z;
      // Sparse dropouts like a structured-light sensor.
      if (rng.uniform() < 0.01) valid[y * size + x] = 0;
    }
  }
  return DepthGrid(size, size, std::move(depth), std::move(valid));
}

/// Stack of 2-D maps with distinct values inside each map (gaps >= 0.4/cells)
/// and, across maps, every pair of values at one cell more than min_gap apart.
inline AttentionStack random_attention_stack(Rng& rng, std::size_t count, std::size_t height, std::size_t width,
                                             double min_gap = 1e-3) {
  const std::size_t cells = height * width;
  std::vector<AttentionMap> maps;
  std::vector<std::size_t> order(cells);
  for (std::size_t i = 0; i < count; ++i) {
    for (;;) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      rng.shuffle(order);
      AttentionMap m(height, width);
      for (std::size_t c = 0; c < cells; ++c)
        m.values[c] = (static_cast<double>(order[c]) + 0.5 + rng.uniform(-0.3, 0.3)) / static_cast<double>(cells);
      bool separated = true;
      for (const auto& other : maps)
        for (std::size_t c = 0; c < cells && separated; ++c)
          separated = std::abs(other.values[c] - m.values[c]) > min_gap;
      if (separated) {
        maps.push_back(std::move(m));
        break;
      }
    }
  }
  return AttentionStack(std::move(maps));
}

struct BenchRow {
  int tau = 0;
  double mean_solve_ms = 0.0;
  double mean_total_ms = 0.0;
  double entropy_bits = 0.0;
  int max_bin_span = 0;
  std::uint64_t dp_cells_evaluated = 0;
};

/// Times solve-only and end-to-end (block extraction, histogram, solve, apply)
/// per tau on one synthetic scan, averaging over reps runs.
inline std::vector<BenchRow> run_bench(const std::vector<int>& taus, int reps, std::uint64_t seed,
                                       const EnhanceConfig& cfg, std::size_t size = 224) {
  using clock = std::chrono::steady_clock;
  const DepthGrid face = synthetic_face(size, seed);
  std::vector<BenchRow> rows;
  for (int tau : taus) {
    BenchRow row;
    row.tau = tau;
    double solve_ms = 0.0, total_ms = 0.0;
    for (int r = 0; r < std::max(reps, 1); ++r) {
      const auto t0 = clock::now();
      const double anchor = locate_anchor(face, cfg.anchor_percentile);
      const DepthGrid block = extract_depth_block(face, cfg.block_depth_mm, anchor);
      const Histogram hist = build_histogram(block, cfg.input_levels);
      const auto t1 = clock::now();
      SolverResult solved = solve_gemax(hist, cfg.output_levels, tau);
      const auto t2 = clock::now();
      const LdrImage image = apply_mapping(block, hist, solved.mapping, cfg.background_level);
      const auto t3 = clock::now();
      solve_ms += std::chrono::duration<double, std::milli>(t2 - t1).count();
      total_ms += std::chrono::duration<double, std::milli>(t3 - t0).count();
      row.entropy_bits = image_entropy(image);
      row.max_bin_span = solved.max_bin_span;
      row.dp_cells_evaluated = solved.dp_cells_evaluated;
    }
    row.mean_solve_ms = solve_ms / std::max(reps, 1);
    row.mean_total_ms = total_ms / std::max(reps, 1);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace gemax
