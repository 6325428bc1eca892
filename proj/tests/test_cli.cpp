#include <gtest/gtest.h>

#include "cli_support.hpp"

namespace gemax::testing {
namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("gemax_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    face_ = dir_ / "face.pgm";
    write_face_pgm(face_, 96, 4);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunResult run(const std::string& args) { return run_cli(args, dir_ / "io"); }
  std::string q(const fs::path& p) const { return "'" + p.string() + "'"; }

  fs::path dir_, face_;
};

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  for (std::string line; std::getline(ss, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

TEST_F(CliTest, EnhanceHappyPath) {
  const auto r = run("enhance " + q(face_) + " --tau 20 -o " + q(dir_ / "out"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "face_tau20.pgm"));
  const auto records = lines(slurp(dir_ / "out" / "report.jsonl"));
  ASSERT_EQ(records.size(), 1u);
  const auto rec = nlohmann::json::parse(records[0]);
  EXPECT_EQ(rec["tau"], 20);
  EXPECT_EQ(rec["N"], 4096);
  EXPECT_EQ(rec["K"], 256);
  EXPECT_GE(rec["entropy_bits"].get<double>(), 0.0);
  EXPECT_LE(rec["entropy_bits"].get<double>(), 8.0);
  EXPECT_LE(rec["max_bin_span"].get<int>(), 20);
  EXPECT_GE(rec["solve_time_ms"].get<double>(), 0.0);
  const auto img = io::parse_pgm(io::read_bytes(dir_ / "out" / "face_tau20.pgm"));
  EXPECT_EQ(img.width, 96u);
  EXPECT_EQ(img.max_value, 255u);
}

TEST_F(CliTest, EnhanceFiveTaus) {
  const auto r = run("enhance " + q(face_) + " --tau 20,30,40,50,60 -o " + q(dir_ / "out"));
  ASSERT_EQ(r.status, 0) << r.err;
  for (int tau : {20, 30, 40, 50, 60}) EXPECT_TRUE(fs::exists(dir_ / "out" / ("face_tau" + std::to_string(tau) + ".pgm")));
  EXPECT_EQ(lines(slurp(dir_ / "out" / "report.jsonl")).size(), 5u);
}

TEST_F(CliTest, EnhanceInfeasibleTau) {
  const auto r = run("enhance " + q(face_) + " --tau 8 --bins 4096 --levels 256 -o " + q(dir_ / "out"));
  EXPECT_EQ(r.status, 4);
  EXPECT_NE(r.err.find("infeasible: K·tau < N"), std::string::npos) << r.err;
}

TEST_F(CliTest, EnhanceDistinctDiagnostics) {
  const auto missing = run("enhance " + q(dir_ / "nope.pgm") + " -o " + q(dir_ / "out"));
  EXPECT_EQ(missing.status, 2);
  io::write_bytes(dir_ / "bad.pgm", {'P', '2', '\n'});
  const auto bad = run("enhance " + q(dir_ / "bad.pgm") + " -o " + q(dir_ / "out"));
  EXPECT_EQ(bad.status, 3);
  EXPECT_NE(bad.err.find("malformed"), std::string::npos) << bad.err;
}

TEST_F(CliTest, EnhanceBoundaryTauMatchesUniformBaseline) {
  const auto r = run("enhance " + q(face_) + " --tau 16 --baseline uniform -o " + q(dir_ / "out"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(slurp(dir_ / "out" / "face_tau16.pgm"), slurp(dir_ / "out" / "face_uniform.pgm"));
  const auto records = lines(slurp(dir_ / "out" / "report.jsonl"));
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(nlohmann::json::parse(records[0])["entropy_bits"], nlohmann::json::parse(records[1])["entropy_bits"]);
}

TEST_F(CliTest, EnhanceRawInput) {
  const auto face = synthetic_face(48, 9);
  std::vector<float> values;
  for (std::size_t i = 0; i < face.size(); ++i)
    values.push_back(face.is_valid(i) ? static_cast<float>(face.samples()[i]) : -1.0f);
  io::write_raw_depth(dir_ / "scan.f32", dir_ / "scan.json", 48, 48, values, 1.0, std::nullopt);
  const auto r = run("enhance " + q(dir_ / "scan.f32") + " --tau 20 -o " + q(dir_ / "out"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "scan_tau20.pgm"));
}

TEST_F(CliTest, BlocksDefaultSweepIsNested) {
  const auto r = run("blocks " + q(face_) + " -o " + q(dir_ / "blocks"));
  ASSERT_EQ(r.status, 0) << r.err;
  std::vector<io::GrayImage> masks;
  for (int d = 50; d <= 140; d += 10) {
    const auto base = dir_ / "blocks" / ("face_d" + std::to_string(d) + "mm");
    ASSERT_TRUE(fs::exists(base.string() + ".pgm")) << base;
    masks.push_back(io::parse_pgm(io::read_bytes(base.string() + "_mask.pgm")));
  }
  for (std::size_t i = 0; i + 1 < masks.size(); ++i)
    for (std::size_t p = 0; p < masks[i].samples.size(); ++p)
      if (masks[i].samples[p]) {
        EXPECT_TRUE(masks[i + 1].samples[p]) << "block " << i << " pixel " << p;
      }
  EXPECT_EQ(lines(slurp(dir_ / "blocks" / "blocks.jsonl")).size(), 10u);
}

TEST_F(CliTest, BlocksSingle) {
  const auto r = run("blocks " + q(face_) + " --dmin 60 --dmax 60 -o " + q(dir_ / "blocks"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(lines(slurp(dir_ / "blocks" / "blocks.jsonl")).size(), 1u);
  EXPECT_TRUE(fs::exists(dir_ / "blocks" / "face_d60mm.pgm"));
}

TEST_F(CliTest, OracleCheckPassesAndRepeats) {
  const auto a = run("oracle-check --trials 1000 --seed 7");
  ASSERT_EQ(a.status, 0) << a.err;
  EXPECT_NE(a.out.find("1000/1000 pass"), std::string::npos) << a.out;
  const auto b = run("oracle-check --trials 1000 --seed 7");
  EXPECT_EQ(a.out, b.out);
}

TEST_F(CliTest, OracleCheckReportsInjectedFault) {
  const auto r = run("oracle-check --trials 50 --seed 7 --inject-off-by-one");
  EXPECT_EQ(r.status, 5);
  EXPECT_NE(r.out.find("oracle="), std::string::npos) << r.out;
}

TEST_F(CliTest, AttentionZeroMaps) {
  nlohmann::json maps = io::maps_to_json({AttentionMap(7, 7), AttentionMap(7, 7)});
  io::write_json(dir_ / "zero.json", maps);
  const auto r = run("attention " + q(dir_ / "zero.json") + " -o " + q(dir_ / "att"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto rec = nlohmann::json::parse(lines(r.out).at(0));
  EXPECT_EQ(rec["loss"], 0.0);
  EXPECT_EQ(rec["alpha"], 1e3);
  EXPECT_EQ(rec["beta"], 1e2);
  EXPECT_EQ(rec["crop_boxes"].size(), 2u);
  EXPECT_TRUE(fs::exists(dir_ / "att" / "zero_grad.json"));
}

TEST_F(CliTest, AttentionFdCheckOnRandomMaps) {
  const auto r = run("attention --random 2 --fd-check --seed 3 -o " + q(dir_ / "att"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto rec = nlohmann::json::parse(lines(r.out).at(0));
  EXPECT_LE(rec["fd_max_rel_error"].get<double>(), 1e-4);
}

TEST_F(CliTest, AttentionNeedsTwoMaps) {
  io::write_json(dir_ / "one.json", io::maps_to_json({AttentionMap(7, 7)}));
  EXPECT_EQ(run("attention " + q(dir_ / "one.json") + " -o " + q(dir_ / "att")).status, 3);
  io::write_bytes(dir_ / "junk.json", {'{'});
  EXPECT_EQ(run("attention " + q(dir_ / "junk.json") + " -o " + q(dir_ / "att")).status, 3);
}

TEST_F(CliTest, BenchTable) {
  const auto r = run("bench --tau 16,20 --reps 10 --size 64");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NE(rows[0].find("dp_cells_evaluated"), std::string::npos);
}

}  // namespace
}  // namespace gemax::testing
