#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>

namespace dame::cli {

namespace fs = std::filesystem;

struct FitOptions {
  fs::path config;
  fs::path data;
  fs::path out;
  int chains = 1;
  bool force = false;
};

struct AnalyzeOptions {
  fs::path draws;
  std::set<std::string> tasks;  // subset of summary, ppc, dc, latent
  std::optional<fs::path> out;  // default <draws>/analysis
  bool svg = false;
  bool force = false;
  int ppc_count = 500;
  int max_lag = 3;
  std::uint64_t seed = 1;
  std::optional<std::string> node;  // node shown in the PPC plot; random by default
};

void cmd_simulate(const fs::path& config, const fs::path& out, bool force);
void cmd_fit(const FitOptions& options);
void cmd_analyze(const AnalyzeOptions& options);

/// Runs `body`, reporting any error on stderr. Returns the process exit code:
/// 0 ok, 2 config error, 3 data error, 4 numerical failure, 1 anything else.
int guarded(const std::function<void()>& body);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const fs::path& path);

std::set<std::string> parse_tasks(const std::string& list);

}  // namespace dame::cli
