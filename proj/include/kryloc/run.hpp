#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "kryloc/config.hpp"
#include "kryloc/lanczos.hpp"

namespace kryloc {

inline constexpr const char* kArtifactVersion = "1.0.0";

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numerical = 3, exit_guard = 4 };

using Cell = std::variant<double, long long, std::string>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

struct RunResults {
  Command command = Command::calculator;
  std::map<std::string, Table> tables;  // keyed by panel name
  nlohmann::json report = nlohmann::json::object();
  std::vector<std::pair<std::string, LanczosResult>> krylov_dumps;
};

// Runs the pipeline of cfg.command in memory. Throws GuardError when a
// Krylov-chain trace reaches the last Lanczos state.
RunResults execute(const RunConfig& cfg);

// Writes figure{N}_{panel}.csv for every table and returns the file names.
// Throws NumericalError when the tables a figure needs are missing.
std::vector<std::string> export_figure_data(const RunResults& results, int figure_id,
                                            const std::filesystem::path& dir);

struct RunOptions {
  std::optional<std::filesystem::path> config_path;
  std::optional<std::string> preset;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
};

// Full CLI run: config, pipeline, CSV/JSON outputs and manifest, published by
// renaming a temporary directory. Errors go to stderr; returns an ExitCode.
int run(const RunOptions& opts);
int run(const std::filesystem::path& config_path);

std::string sha256_hex(const std::filesystem::path& file);

}  // namespace kryloc
