#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "polaron/config.hpp"
#include "polaron/io.hpp"

namespace polaron {

enum class OutputFormat { Csv, Json };
const char* to_string(OutputFormat f);

struct RunOptions {
  unsigned threads = 1;
  OutputFormat format = OutputFormat::Json;
  std::function<void(const std::string&)> progress;  // verify: one line per criterion
};

/// Everything a subcommand produces. The worker count and the wall-clock time
/// are not serialized, so output files depend only on (config, seed).
struct RunResult {
  std::string subcommand;
  Json config;
  std::vector<std::uint64_t> seeds;
  double wall_clock = 0.0;  // seconds
  Json outputs = Json::object();
  std::vector<std::pair<std::string, io::Table>> tables;
  std::vector<io::Table> traces;  // per-chain MC traces, always CSV
  std::vector<std::string> flags;
  int exit_code = 0;
};

RunResult cmd_kernel(const Config& config, const RunOptions& options);
RunResult cmd_spectrum(const Config& config, const RunOptions& options);
RunResult cmd_mass(const Config& config, const RunOptions& options);
RunResult cmd_mc(const Config& config, const RunOptions& options);
RunResult cmd_clt_toy(const Config& config, const RunOptions& options);
RunResult cmd_verify(const Config& config, const RunOptions& options);

const std::vector<std::string>& subcommands();
/// Dispatches by name and fills wall_clock.
RunResult run_command(const std::string& name, const Config& config, const RunOptions& options);

/// With Json format tables are embedded; with Csv they are referenced by file name.
Json to_json(const RunResult& r, OutputFormat format);
/// Inverse of to_json for the Json format (wall_clock is not stored).
RunResult result_from_json(const Json& j);

/// Writes <subcommand>.json plus any CSV files; returns the paths written.
std::vector<std::filesystem::path> write_result(const RunResult& r, const std::filesystem::path& dir, OutputFormat format);

}  // namespace polaron
