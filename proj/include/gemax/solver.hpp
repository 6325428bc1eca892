#pragma once

// Depth-distortion constrained entropy maximization.
//
// A mapping with K output levels over N input levels is a K-edge path
// 0 = d_0 -> d_1 -> ... -> d_K = N in the level DAG, where edge (i, j) carries
// w(i, j) = -P[i, j) log2 P[i, j) and exists only for 1 <= j - i <= tau.
// solve_gemax() finds the maximum-weight path by dynamic programming over
// (vertex, edge count) cells, visiting at most tau predecessors per cell.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "gemax/core.hpp"

namespace gemax {

/// Two candidate totals within this distance are treated as equal.
inline constexpr double kTieTolerance = 1e-12;

struct SolverResult {
  MappingFunction mapping;
  double entropy_bits = 0.0;
  int max_bin_span = 0;
  std::uint64_t dp_cells_evaluated = 0;
};

/// O(1) edge weights from a prefix-sum table over the histogram.
class EdgeWeights {
 public:
  explicit EdgeWeights(const Histogram& hist) : cumulative_(hist.levels() + 1, 0.0) {
    const auto bins = hist.bins();
    for (std::size_t i = 0; i < bins.size(); ++i) cumulative_[i + 1] = cumulative_[i] + bins[i];
    // Rescale so the whole range has mass exactly 1.
    const double total = cumulative_.back();
    for (double& c : cumulative_) c /= total;
  }

  int levels() const noexcept { return static_cast<int>(cumulative_.size()) - 1; }

  /// Probability mass of input levels [i, j).
  double mass(int i, int j) const {
    if (i < 0 || j > levels() || i >= j)
      throw Error(ErrorCode::IndexOutOfRange, "edge requires 0 <= i < j <= N");
    return mass_unchecked(i, j);
  }

  double operator()(int i, int j) const { return weight_of(mass(i, j)); }

  double mass_unchecked(int i, int j) const noexcept {
    const double p = cumulative_[static_cast<std::size_t>(j)] - cumulative_[static_cast<std::size_t>(i)];
    return std::clamp(p, 0.0, 1.0);
  }

  static double weight_of(double p) noexcept { return p > 0.0 ? -p * std::log2(p) : 0.0; }

  std::span<const double> cumulative() const noexcept { return cumulative_; }

 private:
  std::vector<double> cumulative_;
};

inline double edge_weight(const Histogram& hist, int i, int j) { return EdgeWeights(hist)(i, j); }

inline double mapping_entropy(const Histogram& hist, const MappingFunction& mapping) {
  if (mapping.input_levels() != static_cast<int>(hist.levels()))
    throw Error(ErrorCode::MismatchedN, "mapping covers " + std::to_string(mapping.input_levels()) +
                                            " levels, histogram has " +
                                            std::to_string(hist.levels()));
  const EdgeWeights weights(hist);
  const auto d = mapping.breakpoints();
  double h = 0.0;
  for (std::size_t k = 0; k + 1 < d.size(); ++k) h += weights(d[k], d[k + 1]);
  return h;
}

namespace detail {

inline void check_solvable(int input_levels, int output_levels, int tau) {
  if (tau < 1) throw Error(ErrorCode::InvalidTau, "tau must be >= 1");
  if (output_levels < 1) throw Error(ErrorCode::InvalidArgument, "K must be >= 1");
  if (output_levels > input_levels) throw Error(ErrorCode::Infeasible, "K > N");
  if (static_cast<long long>(output_levels) * tau < input_levels)
    throw Error(ErrorCode::Infeasible, "K·tau < N");
}

inline int ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace detail

/// Globally optimal constrained mapping. Among predecessors whose totals tie
/// within kTieTolerance the smallest index wins.
inline SolverResult solve_gemax(const Histogram& hist, int output_levels, int tau) {
  const int n = static_cast<int>(hist.levels());
  const int k_total = output_levels;
  detail::check_solvable(n, k_total, tau);
  const int span = std::min(tau, n);

  const EdgeWeights weights(hist);
  constexpr double kUnset = -std::numeric_limits<double>::infinity();
  const auto stride = static_cast<std::size_t>(n) + 1;
  // best[k * stride + x]: heaviest k-edge path from 0 to x; from[...] its last hop.
  std::vector<double> best(static_cast<std::size_t>(k_total + 1) * stride, kUnset);
  std::vector<std::int32_t> from(best.size(), -1);
  best[0] = 0.0;

  // incoming_rev[span - d] = w(x - d, x) for the vertex x being filled.
  std::vector<double> incoming_rev(static_cast<std::size_t>(span) + 1, 0.0);
  std::uint64_t visited = 0;

  // Vertex-major sweep: each vertex's incoming edge weights are computed once
  // and shared by every edge count k.
  for (int x = 1; x <= n; ++x) {
    // Cell (x, k) is reachable from 0 and can still reach N: k <= x <= k*tau
    // and N - x <= (K - k)*tau.
    const int k_lo = std::max(1, detail::ceil_div(x, span));
    const int k_hi = std::min({k_total, x, k_total - detail::ceil_div(n - x, span)});
    if (k_lo > k_hi) continue;

    const int reach = std::min(span, x);
    for (int d = 1; d <= reach; ++d)
      incoming_rev[static_cast<std::size_t>(span - d)] =
          EdgeWeights::weight_of(weights.mass_unchecked(x - d, x));

    for (int k = k_lo; k <= k_hi; ++k) {
      const int v_lo = std::max(x - span, k - 1);
      const int v_hi = std::min(x - 1, (k - 1) * span);
      if (v_lo > v_hi) continue;
      const double* prev = best.data() + static_cast<std::size_t>(k - 1) * stride;
      const int count = v_hi - v_lo + 1;
      visited += static_cast<std::uint64_t>(count);

      // Reversed weights turn the window into two forward-running arrays.
      const double* hop = incoming_rev.data() + (span - x);
      double lanes[4] = {kUnset, kUnset, kUnset, kUnset};
      int v = v_lo;
      for (; v + 3 <= v_hi; v += 4) {
        for (int l = 0; l < 4; ++l) {
          const double c = prev[v + l] + hop[v + l];
          lanes[l] = c > lanes[l] ? c : lanes[l];
        }
      }
      for (; v <= v_hi; ++v) {
        const double c = prev[v] + hop[v];
        lanes[0] = c > lanes[0] ? c : lanes[0];
      }
      const double top = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
      // Smallest predecessor whose total ties the maximum.
      int arg = v_lo;
      while (prev[arg] + hop[arg] < top - kTieTolerance) ++arg;
      const auto cell = static_cast<std::size_t>(k) * stride + static_cast<std::size_t>(x);
      best[cell] = prev[arg] + hop[arg];
      from[cell] = arg;
    }
  }

  const auto end_cell = static_cast<std::size_t>(k_total) * stride + static_cast<std::size_t>(n);
  if (from[end_cell] < 0)
    throw Error(ErrorCode::Infeasible, "no constrained path reaches level N");

  std::vector<int> breakpoints(static_cast<std::size_t>(k_total) + 1);
  breakpoints.back() = n;
  for (int k = k_total, x = n; k > 0; --k) {
    x = from[static_cast<std::size_t>(k) * stride + static_cast<std::size_t>(x)];
    breakpoints[static_cast<std::size_t>(k - 1)] = x;
  }
  MappingFunction mapping(std::move(breakpoints));
  const double entropy = mapping_entropy(hist, mapping);
  const int max_span = mapping.max_span();
  return SolverResult{std::move(mapping), entropy, max_span, visited};
}

/// Exhaustive search over every admissible breakpoint vector. Probabilities are
/// summed directly from the bins, independent of the prefix-sum table. Ties
/// within kTieTolerance go to the vector that is smaller when compared from
/// d_{K-1} downward, which is the path the DP's smallest-predecessor rule picks.
inline SolverResult brute_force_oracle(const Histogram& hist, int output_levels, int tau) {
  const int n = static_cast<int>(hist.levels());
  detail::check_solvable(n, output_levels, tau);
  if (n > 20 || output_levels > 8)
    throw Error(ErrorCode::TooLarge, "oracle is limited to N <= 20 and K <= 8");
  const auto bins = hist.bins();

  auto segment_weight = [&](int i, int j) {
    double p = 0.0;
    for (int t = i; t < j; ++t) p += bins[static_cast<std::size_t>(t)];
    return p > 0.0 ? -p * std::log2(p) : 0.0;
  };
  auto reverse_lex_less = [](const std::vector<int>& a, const std::vector<int>& b) {
    for (std::size_t k = a.size(); k-- > 0;) {
      if (a[k] != b[k]) return a[k] < b[k];
    }
    return false;
  };

  std::vector<int> current(static_cast<std::size_t>(output_levels) + 1, 0);
  std::vector<int> winner;
  double winner_entropy = -std::numeric_limits<double>::infinity();
  std::uint64_t examined = 0;

  auto consider = [&] {
    ++examined;
    double h = 0.0;
    for (std::size_t k = 0; k + 1 < current.size(); ++k) h += segment_weight(current[k], current[k + 1]);
    if (winner.empty() || h > winner_entropy + kTieTolerance ||
        (std::abs(h - winner_entropy) <= kTieTolerance && reverse_lex_less(current, winner))) {
      winner = current;
      winner_entropy = h;
    }
  };

  auto descend = [&](auto&& self, int k) -> void {
    const int prev = current[static_cast<std::size_t>(k - 1)];
    if (k == output_levels) {
      if (n - prev >= 1 && n - prev <= tau) {
        current[static_cast<std::size_t>(k)] = n;
        consider();
      }
      return;
    }
    for (int next = prev + 1; next <= std::min(prev + tau, n - 1); ++next) {
      current[static_cast<std::size_t>(k)] = next;
      self(self, k + 1);
    }
  };
  descend(descend, 1);

  if (winner.empty()) throw Error(ErrorCode::Infeasible, "no admissible mapping");
  MappingFunction mapping(std::move(winner));
  const int max_span = mapping.max_span();
  return SolverResult{std::move(mapping), winner_entropy, max_span, examined};
}

/// Even split of N levels into K; when K does not divide N the first N mod K
/// levels get the larger gap.
inline MappingFunction uniform_mapping(int input_levels, int output_levels) {
  if (output_levels < 1 || output_levels > input_levels)
    throw Error(ErrorCode::InvalidArgument, "uniform mapping needs 1 <= K <= N");
  const int base = input_levels / output_levels;
  const int wide = input_levels % output_levels;
  std::vector<int> d(static_cast<std::size_t>(output_levels) + 1, 0);
  for (int k = 0; k < output_levels; ++k)
    d[static_cast<std::size_t>(k) + 1] = d[static_cast<std::size_t>(k)] + base + (k < wide ? 1 : 0);
  return MappingFunction(std::move(d));
}

/// Classic histogram equalization: d_k is the first level whose preceding mass
/// reaches k/K, pushed forward to keep breakpoints strictly increasing.
inline MappingFunction he_mapping(const Histogram& hist, int output_levels) {
  const int n = static_cast<int>(hist.levels());
  if (output_levels < 1 || output_levels > n)
    throw Error(ErrorCode::InvalidArgument, "HE mapping needs 1 <= K <= N");
  const EdgeWeights weights(hist);
  const auto cumulative = weights.cumulative();
  std::vector<int> d(static_cast<std::size_t>(output_levels) + 1, 0);
  d.back() = n;
  for (int k = 1; k < output_levels; ++k) {
    const double target = static_cast<double>(k) / output_levels - kTieTolerance;
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), target);
    int level = static_cast<int>(it - cumulative.begin());
    level = std::max(level, d[static_cast<std::size_t>(k - 1)] + 1);
    level = std::min(level, n - (output_levels - k));
    d[static_cast<std::size_t>(k)] = level;
  }
  return MappingFunction(std::move(d));
}

}  // namespace gemax
