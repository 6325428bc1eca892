#pragma once

// Runs the gemax binary with captured stdout/stderr.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gemax/harness.hpp"
#include "gemax/io.hpp"

namespace gemax::testing {

namespace fs = std::filesystem;

struct RunResult {
  int status = -1;
  std::string out;
  std::string err;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline RunResult run_cli(const std::string& args, const fs::path& scratch) {
  fs::create_directories(scratch);
  const auto out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  const std::string cmd = std::string("'") + GEMAX_CLI_PATH + "' " + args + " >'" + out.string() + "' 2>'" +
                          err.string() + "'";
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

/// 16-bit PGM in 0.1 mm units with 0 marking dropouts.
inline void write_face_pgm(const fs::path& path, std::size_t size, std::uint64_t seed) {
  const auto face = synthetic_face(size, seed);
  io::GrayImage img{size, size, 65535, {}};
  for (std::size_t i = 0; i < face.size(); ++i)
    img.samples.push_back(face.is_valid(i) ? static_cast<std::uint16_t>(std::lround(face.samples()[i] * 10.0)) : 0);
  io::write_bytes(path, io::encode_pgm(img));
}

}  // namespace gemax::testing
