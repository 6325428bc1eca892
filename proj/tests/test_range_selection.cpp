#include <gtest/gtest.h>

#include <cmath>

#include "gemax/harness.hpp"
#include "gemax/range_selection.hpp"

namespace gemax {
namespace {

bool subset(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] && !b[i]) return false;
  return true;
}

// Integer depths so shifted comparisons stay exact.
DepthGrid random_grid(Rng& rng) {
  const auto w = static_cast<std::size_t>(rng.integer(1, 24));
  const auto h = static_cast<std::size_t>(rng.integer(1, 24));
  std::vector<double> d(w * h);
  std::vector<std::uint8_t> valid(w * h);
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = rng.integer(0, 400);
    valid[i] = rng.uniform() < 0.8 ? 1 : 0;
  }
  valid[0] = 1;
  return DepthGrid(w, h, d, valid);
}

TEST(LocateAnchor, Examples) {
  EXPECT_EQ(locate_anchor(DepthGrid(3, 1, {3, 7, 9}), 0.0), 3.0);
  EXPECT_EQ(locate_anchor(DepthGrid(2, 2, {5, 5, 5, 5})), 5.0);
  std::vector<double> d(1000, 10.0);
  d[417] = 0.0;
  EXPECT_EQ(locate_anchor(DepthGrid(1000, 1, d), 0.002), 10.0);
  EXPECT_EQ(locate_anchor(DepthGrid(1000, 1, d), 0.0), 0.0);
}

TEST(LocateAnchor, ErrorsAndBounds) {
  EXPECT_THROW(locate_anchor(DepthGrid(1, 1, {1.0}, {0})), Error);
  EXPECT_THROW(locate_anchor(DepthGrid(1, 1, {1.0}), 0.2), Error);
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto g = random_grid(rng);
    std::vector<double> valid;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.is_valid(i)) valid.push_back(g.samples()[i]);
    std::sort(valid.begin(), valid.end());
    EXPECT_LE(locate_anchor(g, 0.05), valid[(valid.size() - 1) / 2]);
  }
}

TEST(ExtractDepthBlock, Examples) {
  const DepthGrid g(3, 1, {0, 30, 70});
  const auto b = extract_depth_block(g, 60, 0);
  EXPECT_EQ(std::vector<std::uint8_t>(b.valid_mask().begin(), b.valid_mask().end()),
            (std::vector<std::uint8_t>{1, 1, 0}));
  const auto all = extract_depth_block(g, 70, 0);
  EXPECT_TRUE(std::equal(all.valid_mask().begin(), all.valid_mask().end(), g.valid_mask().begin()));
  // Pixels nearer than the anchor are dropped.
  const auto shifted = extract_depth_block(g, 60, 30);
  EXPECT_EQ(std::vector<std::uint8_t>(shifted.valid_mask().begin(), shifted.valid_mask().end()),
            (std::vector<std::uint8_t>{0, 1, 1}));
  EXPECT_THROW(extract_depth_block(g, 0, 0), Error);
  EXPECT_THROW(extract_depth_block(g, 10, 100), Error);
}

TEST(ExtractDepthBlock, NestingIdempotenceAndShiftInvariance) {
  Rng rng(9);
  for (int t = 0; t < 100; ++t) {
    const auto g = random_grid(rng);
    const double anchor = locate_anchor(g, 0.0);
    const double da = rng.integer(1, 200), db = da + rng.integer(0, 200);
    const auto a = extract_depth_block(g, da, anchor);
    const auto b = extract_depth_block(g, db, anchor);
    EXPECT_TRUE(subset(a.valid_mask(), b.valid_mask()));
    EXPECT_EQ(extract_depth_block(a, da, anchor), a);

    const double c = rng.integer(1, 500);
    std::vector<double> moved(g.samples().begin(), g.samples().end());
    for (std::size_t i = 0; i < moved.size(); ++i)
      if (g.is_valid(i)) moved[i] += c;
    const DepthGrid gs(g.width(), g.height(), moved, {g.valid_mask().begin(), g.valid_mask().end()});
    const double anchor_s = locate_anchor(gs, 0.001);
    EXPECT_EQ(anchor_s, locate_anchor(g, 0.001) + c);
    const auto bs = extract_depth_block(gs, da, anchor_s);
    const auto bo = extract_depth_block(g, da, locate_anchor(g, 0.001));
    EXPECT_TRUE(std::equal(bs.valid_mask().begin(), bs.valid_mask().end(), bo.valid_mask().begin()));
  }
}

TEST(ExtractDepthBlock, HemisphereCapMatchesAnalyticFraction) {
  // Sphere of radius 80 mm bulging toward the camera from a 200 mm plane,
  // sampled at 0.25 mm. A 60 mm block keeps the cap whose projected radius is
  // sqrt(R^2 - (R - 60)^2), so the masked share of the disk is ((R - 60)/R)^2.
  const double radius = 80.0, pitch = 0.25;
  const auto side = static_cast<std::size_t>(2 * radius / pitch) + 8;
  const double c = 0.5 * static_cast<double>(side - 1);
  std::vector<double> d(side * side, 200.0);
  std::vector<std::uint8_t> on_sphere(side * side, 0);
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x) {
      const double px = (static_cast<double>(x) - c) * pitch, py = (static_cast<double>(y) - c) * pitch;
      const double r2 = px * px + py * py;
      if (r2 < radius * radius) {
        d[y * side + x] = 200.0 - std::sqrt(radius * radius - r2);
        on_sphere[y * side + x] = 1;
      }
    }
  const DepthGrid g(side, side, d);
  const auto block = extract_depth_block(g, 60.0, locate_anchor(g, 0.0));
  std::size_t sphere = 0, masked = 0, background_kept = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (on_sphere[i]) {
      ++sphere;
      masked += block.is_valid(i) ? 0 : 1;
    } else {
      background_kept += block.is_valid(i) ? 1 : 0;
    }
  }
  EXPECT_EQ(background_kept, 0u);
  const double expected = 0.0625;  // tests/oracles/derived_values.py
  const double fraction = static_cast<double>(masked) / static_cast<double>(sphere);
  EXPECT_NEAR(fraction, expected, 0.02 * expected);
}

TEST(GenerateBlocks, DefaultSweepAndSingleBlock) {
  const auto face = synthetic_face(96, 2);
  const auto blocks = generate_blocks(face, BlockSweepConfig{});
  ASSERT_EQ(blocks.size(), 10u);
  EXPECT_EQ(blocks.front().block_depth_mm, 50.0);
  EXPECT_EQ(blocks.back().block_depth_mm, 140.0);
  for (std::size_t i = 0; i + 1 < blocks.size(); ++i)
    EXPECT_TRUE(subset(blocks[i].grid.valid_mask(), blocks[i + 1].grid.valid_mask()));

  BlockSweepConfig one;
  one.d_min_mm = one.d_max_mm = 60;
  EXPECT_EQ(generate_blocks(face, one).size(), 1u);

  BlockSweepConfig bad;
  bad.d_min_mm = 100;
  bad.d_max_mm = 50;
  EXPECT_THROW(generate_blocks(face, bad), Error);
  bad = {};
  bad.delta_d_mm = 0;
  EXPECT_THROW(generate_blocks(face, bad), Error);
}

TEST(GenerateBlocks, NestedOnRandomGrids) {
  Rng rng(21);
  for (int t = 0; t < 50; ++t) {
    const auto g = random_grid(rng);
    BlockSweepConfig cfg;
    cfg.d_min_mm = rng.integer(1, 50);
    cfg.d_max_mm = cfg.d_min_mm + rng.integer(0, 300);
    cfg.delta_d_mm = rng.integer(1, 40);
    const auto blocks = generate_blocks(g, cfg);
    for (std::size_t i = 0; i + 1 < blocks.size(); ++i)
      EXPECT_TRUE(subset(blocks[i].grid.valid_mask(), blocks[i + 1].grid.valid_mask()));
  }
}

}  // namespace
}  // namespace gemax
