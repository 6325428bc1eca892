// gemax: depth-scan enhancement, block sweeps, solver benchmarks, the oracle
// equivalence check and attention-loss evaluation.
//
// Exit status: 0 success, 1 usage or internal error, 2 unreadable input,
// 3 malformed input, 4 infeasible or invalid configuration, 5 check failed.

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gemax/gemax.hpp"
#include "gemax/harness.hpp"
#include "gemax/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit : int { kOk = 0, kInternal = 1, kUnreadable = 2, kMalformed = 3, kBadConfig = 4, kCheckFailed = 5 };

int exit_code_for(gemax::ErrorCode code) {
  switch (code) {
    case gemax::ErrorCode::Io: return kUnreadable;
    case gemax::ErrorCode::Malformed: return kMalformed;
    case gemax::ErrorCode::Infeasible:
    case gemax::ErrorCode::InvalidTau:
    case gemax::ErrorCode::InvalidArgument: return kBadConfig;
    default: return kInternal;
  }
}

std::string diagnostic(const gemax::Error& e) { return e.what(); }

// "20,30,N" -> {20, 30, n_levels}
std::vector<int> parse_taus(const std::string& text, int n_levels) {
  std::vector<int> taus;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item == "N" || item == "n") {
      taus.push_back(n_levels);
      continue;
    }
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw gemax::Error(gemax::ErrorCode::InvalidArgument, "bad tau '" + item + "'");
    taus.push_back(v);
  }
  if (taus.empty()) throw gemax::Error(gemax::ErrorCode::InvalidArgument, "no tau given");
  return taus;
}

struct ReportOptions {
  std::string format = "json";
  bool timing = true;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void print(std::ostream& os) const {
    std::vector<std::size_t> widths(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) widths[c] = header[c].size();
    for (const auto& r : rows)
      for (std::size_t c = 0; c < r.size(); ++c) widths[c] = std::max(widths[c], r[c].size());
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t c = 0; c < cells.size(); ++c)
        os << (c ? "  " : "") << std::setw(static_cast<int>(widths[c])) << cells[c];
      os << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
  }
};

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// JSON objects, one per line, or an aligned table over the given columns.
void emit_records(const std::vector<json>& records, const std::vector<std::string>& columns,
                  const ReportOptions& report, std::ostream& os) {
  if (report.format == "table") {
    Table t{columns, {}};
    for (const auto& r : records) {
      std::vector<std::string> row;
      for (const auto& c : columns) {
        const auto& v = r.contains(c) ? r.at(c) : json(nullptr);
        if (v.is_number_float())
          row.push_back(fixed(v.get<double>(), c == "entropy_bits" ? 6 : 3));
        else if (v.is_string())
          row.push_back(v.get<std::string>());
        else
          row.push_back(v.dump());
      }
      t.rows.push_back(std::move(row));
    }
    t.print(os);
  } else {
    for (const auto& r : records) os << r.dump() << '\n';
  }
}

void write_report_file(const fs::path& path, const std::vector<json>& records) {
  std::string text;
  for (const auto& r : records) text += r.dump() + "\n";
  gemax::io::write_bytes(path, {text.begin(), text.end()});
}

struct InputOptions {
  double unit_mm = 0.1;
  unsigned invalid_value = 0;

  gemax::io::DepthReadOptions read_options() const { return {{unit_mm, invalid_value}}; }
};

void add_input_flags(CLI::App* cmd, InputOptions& in) {
  cmd->add_option("--unit-mm", in.unit_mm, "Millimeters per PGM sample unit")->capture_default_str();
  cmd->add_option("--invalid-value", in.invalid_value, "PGM sample value marking missing depth")
      ->capture_default_str();
}

void add_level_flags(CLI::App* cmd, gemax::EnhanceConfig& cfg) {
  cmd->add_option("-N,--bins", cfg.input_levels, "Input depth levels N")->capture_default_str();
  cmd->add_option("-K,--levels", cfg.output_levels, "Output intensity levels K")->capture_default_str();
}

void add_report_flags(CLI::App* cmd, ReportOptions& report) {
  cmd->add_option("--report", report.format, "Report format")
      ->check(CLI::IsMember({"json", "table"}))
      ->capture_default_str();
}

// ---------------------------------------------------------------------------

struct EnhanceArgs {
  std::vector<std::string> inputs;
  std::string out_dir = ".";
  std::string taus = "20";
  std::string baseline = "none";
  gemax::EnhanceConfig cfg;
  InputOptions input;
  ReportOptions report;
};

int run_enhance(const EnhanceArgs& a) {
  int status = kOk;
  auto fail = [&](const std::string& source, const gemax::Error& e) {
    std::cerr << "gemax enhance: " << source << ": " << diagnostic(e) << '\n';
    if (status == kOk) status = exit_code_for(e.code());
  };

  std::vector<int> taus;
  try {
    taus = parse_taus(a.taus, a.cfg.input_levels);
    gemax::EnhanceConfig probe = a.cfg;
    probe.tau = a.cfg.input_levels;
    probe.validate();
  } catch (const gemax::Error& e) {
    fail("config", e);
    return status;
  }
  fs::create_directories(a.out_dir);

  std::vector<json> records;
  for (const auto& input : a.inputs) {
    const fs::path path(input);
    const std::string stem = path.stem().string();
    try {
      const gemax::DepthGrid grid = gemax::io::read_depth(path, a.input.read_options());
      const auto collection = gemax::batch_generate(grid, a.cfg, taus, input);
      for (const auto& w : collection.warnings) {
        std::cerr << "gemax enhance: " << input << " tau=" << w.tau << ": " << w.message << '\n';
        if (status == kOk) status = exit_code_for(w.code);
      }
      for (const auto& entry : collection.entries) {
        const auto file = fs::path(a.out_dir) / (stem + "_tau" + std::to_string(entry.tau) + ".pgm");
        gemax::io::write_ldr_pgm(file, entry.image);
        records.push_back({{"source", input},
                           {"output", file.string()},
                           {"method", "gemax"},
                           {"tau", entry.tau},
                           {"N", a.cfg.input_levels},
                           {"K", a.cfg.output_levels},
                           {"d_i_mm", a.cfg.block_depth_mm},
                           {"entropy_bits", entry.entropy_bits},
                           {"max_bin_span", entry.solve.max_bin_span},
                           {"solve_time_ms", a.report.timing ? entry.solve_time_ms : 0.0},
                           {"dp_cells_evaluated", entry.solve.dp_cells_evaluated}});
      }
      if (a.baseline != "none") {
        const double anchor = gemax::locate_anchor(grid, a.cfg.anchor_percentile);
        const auto block = gemax::extract_depth_block(grid, a.cfg.block_depth_mm, anchor);
        const auto hist = gemax::build_histogram(block, a.cfg.input_levels);
        const auto mapping = a.baseline == "uniform" ? gemax::uniform_mapping(a.cfg.input_levels, a.cfg.output_levels)
                                                     : gemax::he_mapping(hist, a.cfg.output_levels);
        const auto image = gemax::apply_mapping(block, hist, mapping, a.cfg.background_level);
        const auto file = fs::path(a.out_dir) / (stem + "_" + a.baseline + ".pgm");
        gemax::io::write_ldr_pgm(file, image);
        records.push_back({{"source", input},
                           {"output", file.string()},
                           {"method", a.baseline},
                           {"tau", nullptr},
                           {"N", a.cfg.input_levels},
                           {"K", a.cfg.output_levels},
                           {"d_i_mm", a.cfg.block_depth_mm},
                           {"entropy_bits", gemax::image_entropy(image)},
                           {"max_bin_span", mapping.max_span()},
                           {"solve_time_ms", 0.0},
                           {"dp_cells_evaluated", 0}});
      }
    } catch (const gemax::Error& e) {
      fail(input, e);
    }
  }
  write_report_file(fs::path(a.out_dir) / "report.jsonl", records);
  emit_records(records,
               {"source", "method", "tau", "N", "K", "d_i_mm", "entropy_bits", "max_bin_span", "solve_time_ms",
                "dp_cells_evaluated"},
               a.report, std::cout);
  return status;
}

// ---------------------------------------------------------------------------

struct BlocksArgs {
  std::string input;
  std::string out_dir = ".";
  gemax::BlockSweepConfig sweep;
  gemax::EnhanceConfig cfg;
  InputOptions in;
  ReportOptions report;
};

std::string mm_label(double mm) {
  std::ostringstream os;
  os << mm;
  return os.str();
}

int run_blocks(const BlocksArgs& a) {
  try {
    const fs::path path(a.input);
    const auto grid = gemax::io::read_depth(path, a.in.read_options());
    const auto blocks = gemax::generate_blocks(grid, a.sweep);
    fs::create_directories(a.out_dir);
    const auto mapping = gemax::uniform_mapping(a.cfg.input_levels, a.cfg.output_levels);
    std::vector<json> records;
    for (const auto& b : blocks) {
      const auto hist = gemax::build_histogram(b.grid, a.cfg.input_levels);
      const auto image = gemax::apply_mapping(b.grid, hist, mapping, a.cfg.background_level);
      const std::string base = path.stem().string() + "_d" + mm_label(b.block_depth_mm) + "mm";
      const auto image_file = fs::path(a.out_dir) / (base + ".pgm");
      const auto mask_file = fs::path(a.out_dir) / (base + "_mask.pgm");
      gemax::io::write_ldr_pgm(image_file, image);
      gemax::io::write_mask_pgm(mask_file, b.grid);
      records.push_back({{"source", a.input},
                         {"d_i_mm", b.block_depth_mm},
                         {"valid_pixels", b.grid.valid_count()},
                         {"N", a.cfg.input_levels},
                         {"K", a.cfg.output_levels},
                         {"entropy_bits", gemax::image_entropy(image)},
                         {"output", image_file.string()},
                         {"mask", mask_file.string()}});
    }
    write_report_file(fs::path(a.out_dir) / "blocks.jsonl", records);
    emit_records(records, {"source", "d_i_mm", "valid_pixels", "N", "K", "entropy_bits"}, a.report, std::cout);
    return kOk;
  } catch (const gemax::Error& e) {
    std::cerr << "gemax blocks: " << a.input << ": " << diagnostic(e) << '\n';
    return exit_code_for(e.code());
  }
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string taus = "16,20,30,40,50,60,N";
  int reps = 10;
  std::uint64_t seed = 1;
  std::size_t size = 224;
  gemax::EnhanceConfig cfg;
  ReportOptions report{"table", true};
};

int run_bench(const BenchArgs& a) {
  try {
    auto taus = parse_taus(a.taus, a.cfg.input_levels);
    for (int tau : taus) {
      gemax::EnhanceConfig c = a.cfg;
      c.tau = tau;
      c.validate();
    }
    const auto rows = gemax::run_bench(taus, std::max(a.reps, 10), a.seed, a.cfg, a.size);
    std::vector<json> records;
    for (const auto& r : rows) {
      const double total = a.report.timing ? r.mean_total_ms : 0.0;
      records.push_back({{"tau", r.tau},
                         {"N", a.cfg.input_levels},
                         {"K", a.cfg.output_levels},
                         {"solve_time_ms", a.report.timing ? r.mean_solve_ms : 0.0},
                         {"total_time_ms", total},
                         {"fps", total > 0.0 ? 1000.0 / total : 0.0},
                         {"entropy_bits", r.entropy_bits},
                         {"max_bin_span", r.max_bin_span},
                         {"dp_cells_evaluated", r.dp_cells_evaluated}});
    }
    emit_records(records,
                 {"tau", "solve_time_ms", "total_time_ms", "fps", "entropy_bits", "max_bin_span",
                  "dp_cells_evaluated"},
                 a.report, std::cout);
    return kOk;
  } catch (const gemax::Error& e) {
    std::cerr << "gemax bench: " << diagnostic(e) << '\n';
    return exit_code_for(e.code());
  }
}

// ---------------------------------------------------------------------------

struct OracleArgs {
  int trials = 1000;
  std::uint64_t seed = 7;
  bool inject = false;
};

int run_oracle(const OracleArgs& a) {
  const auto result = gemax::run_oracle_suite(a.trials, a.seed, a.inject);
  for (const auto& m : result.mismatches) std::cout << "counterexample: " << gemax::describe(m) << '\n';
  std::cout << result.passed << "/" << result.trials << " pass (" << result.solves << " solves, seed " << a.seed
            << ")\n";
  return result.passed == result.trials ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------------

struct AttentionArgs {
  std::string maps_file;
  std::string out_dir = ".";
  gemax::FaLossParams params;
  bool fd_check = false;
  int random_maps = 0;
  std::size_t map_size = 7;
  std::uint64_t seed = 1;
  long input_size = 224;
  long crop_size = 96;
  ReportOptions report;
};

int run_attention(const AttentionArgs& a) {
  try {
    std::vector<gemax::AttentionMap> maps;
    std::string stem;
    if (a.random_maps > 0) {
      gemax::Rng rng(a.seed);
      maps = gemax::random_attention_stack(rng, static_cast<std::size_t>(a.random_maps), a.map_size, a.map_size)
                 .maps();
      stem = "random" + std::to_string(a.random_maps) + "_seed" + std::to_string(a.seed);
    } else if (!a.maps_file.empty()) {
      maps = gemax::io::maps_from_json(gemax::io::read_json(a.maps_file));
      stem = fs::path(a.maps_file).stem().string();
    } else {
      throw gemax::Error(gemax::ErrorCode::InvalidArgument, "give a maps file or --random <count>");
    }
    if (maps.size() < 2) throw gemax::Error(gemax::ErrorCode::TooFewMaps, "need at least two maps");
    const gemax::AttentionStack stack(std::move(maps));

    const double loss = gemax::fa_loss(stack, a.params);
    const auto grad = gemax::fa_loss_grad(stack, a.params);
    fs::create_directories(a.out_dir);
    const auto grad_file = fs::path(a.out_dir) / (stem + "_grad.json");
    gemax::io::write_json(grad_file, gemax::io::maps_to_json(grad));

    json record = {{"source", a.random_maps > 0 ? stem : a.maps_file},
                   {"maps", stack.size()},
                   {"height", stack.height()},
                   {"width", stack.width()},
                   {"alpha", a.params.alpha},
                   {"beta", a.params.beta},
                   {"mrg", a.params.margin},
                   {"loss", loss},
                   {"gradient", grad_file.string()}};
    json boxes = json::array();
    for (const auto& m : stack.maps()) {
      const auto box = gemax::peak_crop_box(m, a.input_size, a.crop_size);
      boxes.push_back({{"x0", box.x0}, {"y0", box.y0}, {"side", box.side}});
    }
    record["crop_boxes"] = boxes;
    int status = kOk;
    if (a.fd_check) {
      const auto check = gemax::fa_gradient_check(stack, a.params);
      record["fd_max_rel_error"] = check.max_relative_error;
      record["fd_probes"] = check.probes;
      if (check.max_relative_error > 1e-4) status = kCheckFailed;
    }
    if (a.report.format == "table") {
      std::cout << "loss           " << std::setprecision(12) << loss << '\n'
                << "alpha beta mrg " << a.params.alpha << ' ' << a.params.beta << ' ' << a.params.margin << '\n';
      for (std::size_t i = 0; i < boxes.size(); ++i) std::cout << "crop[" << i << "]        " << boxes[i].dump() << '\n';
      if (a.fd_check) std::cout << "fd max rel err " << record["fd_max_rel_error"].get<double>() << '\n';
      std::cout << "gradient       " << grad_file.string() << '\n';
    } else {
      std::cout << record.dump() << '\n';
    }
    return status;
  } catch (const gemax::Error& e) {
    std::cerr << "gemax attention: " << diagnostic(e) << '\n';
    return e.code() == gemax::ErrorCode::TooFewMaps ? kMalformed : exit_code_for(e.code());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy-maximizing depth map enhancement"};
  app.require_subcommand(1);

  EnhanceArgs enhance;
  auto* enhance_cmd = app.add_subcommand("enhance", "Write one enhanced image per tau for each input scan");
  enhance_cmd->add_option("inputs", enhance.inputs, "Depth files (.pgm or raw float32 with .json sidecar)")
      ->required();
  enhance_cmd->add_option("-o,--out", enhance.out_dir, "Output directory")->capture_default_str();
  enhance_cmd->add_option("--tau", enhance.taus, "Comma-separated tau values ('N' = no constraint)")
      ->capture_default_str();
  add_level_flags(enhance_cmd, enhance.cfg);
  enhance_cmd->add_option("--depth-range-mm", enhance.cfg.block_depth_mm, "Depth block size from the nose")
      ->capture_default_str();
  enhance_cmd->add_option("--anchor-percentile", enhance.cfg.anchor_percentile, "Nose anchor quantile")
      ->capture_default_str();
  enhance_cmd->add_option("--baseline", enhance.baseline, "Also write a baseline mapping")
      ->check(CLI::IsMember({"none", "uniform", "he"}))
      ->capture_default_str();
  add_input_flags(enhance_cmd, enhance.input);
  add_report_flags(enhance_cmd, enhance.report);
  enhance_cmd->add_flag("--no-timing", [&](std::int64_t) { enhance.report.timing = false; },
                        "Report zero for wall-clock fields");

  BlocksArgs blocks;
  auto* blocks_cmd = app.add_subcommand("blocks", "Write the nested depth-block sweep of one scan");
  blocks_cmd->add_option("input", blocks.input, "Depth file")->required();
  blocks_cmd->add_option("-o,--out", blocks.out_dir, "Output directory")->capture_default_str();
  blocks_cmd->add_option("--dmin", blocks.sweep.d_min_mm, "Smallest block depth (mm)")->capture_default_str();
  blocks_cmd->add_option("--dmax", blocks.sweep.d_max_mm, "Largest block depth (mm)")->capture_default_str();
  blocks_cmd->add_option("--delta", blocks.sweep.delta_d_mm, "Block depth increment (mm)")->capture_default_str();
  blocks_cmd->add_option("--anchor-percentile", blocks.sweep.anchor_percentile, "Nose anchor quantile")
      ->capture_default_str();
  add_level_flags(blocks_cmd, blocks.cfg);
  add_input_flags(blocks_cmd, blocks.in);
  add_report_flags(blocks_cmd, blocks.report);

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time the solver on synthetic 224x224 scans");
  bench_cmd->add_option("--tau", bench.taus, "Comma-separated tau values ('N' = no constraint)")
      ->capture_default_str();
  bench_cmd->add_option("--reps", bench.reps, "Repetitions per tau (at least 10)")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Synthetic scan seed")->capture_default_str();
  bench_cmd->add_option("--size", bench.size, "Synthetic scan side in pixels")->capture_default_str();
  add_level_flags(bench_cmd, bench.cfg);
  add_report_flags(bench_cmd, bench.report);
  bench_cmd->add_flag("--no-timing", [&](std::int64_t) { bench.report.timing = false; },
                      "Report zero for wall-clock fields");

  OracleArgs oracle;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "Compare the DP solver with exhaustive search");
  oracle_cmd->add_option("--trials", oracle.trials, "Random histograms")->capture_default_str();
  oracle_cmd->add_option("--seed", oracle.seed, "Generator seed")->capture_default_str();
  oracle_cmd->add_flag("--inject-off-by-one", oracle.inject, "Corrupt solver output to test the harness");

  AttentionArgs attention;
  auto* attention_cmd = app.add_subcommand("attention", "Evaluate the attention loss, gradient and crop boxes");
  attention_cmd->add_option("maps", attention.maps_file, "Attention maps JSON");
  attention_cmd->add_option("-o,--out", attention.out_dir, "Output directory")->capture_default_str();
  attention_cmd->add_option("--alpha", attention.params.alpha, "Diversity weight")->capture_default_str();
  attention_cmd->add_option("--beta", attention.params.beta, "Concentration weight")->capture_default_str();
  attention_cmd->add_option("--mrg", attention.params.margin, "Diversity margin")->capture_default_str();
  attention_cmd->add_flag("--fd-check", attention.fd_check, "Compare gradient with central differences");
  attention_cmd->add_option("--random", attention.random_maps, "Generate this many random maps instead of a file");
  attention_cmd->add_option("--map-size", attention.map_size, "Side of generated maps")->capture_default_str();
  attention_cmd->add_option("--seed", attention.seed, "Seed for generated maps")->capture_default_str();
  attention_cmd->add_option("--input-size", attention.input_size, "Input image side")->capture_default_str();
  attention_cmd->add_option("--crop-size", attention.crop_size, "Crop side")->capture_default_str();
  add_report_flags(attention_cmd, attention.report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*enhance_cmd) return run_enhance(enhance);
    if (*blocks_cmd) return run_blocks(blocks);
    if (*bench_cmd) return run_bench(bench);
    if (*oracle_cmd) return run_oracle(oracle);
    if (*attention_cmd) return run_attention(attention);
  } catch (const std::exception& e) {
    std::cerr << "gemax: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}
