#pragma once

#include "gammacell/density.hpp"
#include "gammacell/minimize.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gammacell {

inline constexpr int kSchemaVersion = 1;

struct CellSection {
  std::vector<Mat> X;
  std::vector<int> k{1};
  int res = 16;
  bool symmetrized = false;
  double delta = 0.0;
};

struct SweepSection {
  std::vector<double> delta;
  std::vector<double> T{1.0};
  double R = 1.0;
  double slack = 0.1;
  double tol = 0.1;
  std::vector<double> lambda;
  std::vector<std::pair<int, double>> diagonal;
  int nx = 4;
  int nX = 9;
  bool sym_only = true;
};

struct EnvelopeSection {
  int depth = 1;
  int n_dirs = 16;
  std::vector<double> amplitudes{0.5, 1.0, 2.0};
  std::vector<double> lambdas;  // empty: {1/8, ..., 7/8}
  double lo = -2.0;
  double hi = 2.0;
  double step = 0.01;
};

struct KornSection {
  int n = 2;
  std::vector<int> res{16, 32};
  int n_starts = 4;
  int max_iter = 400;
  double p = 2.0;
};

struct RigiditySection {
  int res = 16;
  double p = 2.0;
  std::vector<double> angles{0.1, 0.3, 0.6};
  double slack = 1.0;
  std::vector<Mat> zhang_X;
  int zhang_res = 8;
};

struct IoSection {
  std::string out = "out";
  std::vector<std::string> formats{"csv", "json"};
  std::optional<std::string> cache;
  std::optional<std::string> input;  // report subcommand
};

struct Config {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 0;
  std::optional<DensitySpec> density;
  std::optional<DensitySpec> linear;
  CellSection cell;
  SolveOptions solve;
  SweepSection sweep;
  EnvelopeSection envelope;
  KornSection korn;
  RigiditySection rigidity;
  IoSection io;
  std::string canonical;  // normalized TOML without the seed
};

// Parses and validates; unknown keys and sections are rejected with ValidationError.
Config parse_config(std::string_view toml_text);
Config load_config(const std::filesystem::path& path);

// Stable hash of the normalized config and the effective seed (independent of
// key order and formatting).
std::string config_hash(const Config& c);

// Parses the [density] schema from a standalone TOML snippet (keys at top level).
DensitySpec parse_density(std::string_view toml_text);

}  // namespace gammacell
