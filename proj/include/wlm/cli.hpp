#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wlm/gateway.hpp"
#include "wlm/monitor.hpp"
#include "wlm/pipeline.hpp"

namespace wlm {

enum class RunMode { kLive, kReplay };

struct RunConfig {
  RunMode mode = RunMode::kLive;
  std::vector<std::string> languages;
  std::optional<std::filesystem::path> replay_file;
  double speedup = 0;  // 0 or infinity: as fast as possible
  std::optional<Timestamp> replay_start;
  CriteriaConfig criteria;
  bool include_bots = false;
  std::optional<std::filesystem::path> fixture_root;
  std::optional<std::filesystem::path> corpus_root;
  std::filesystem::path log_path = "wlm-run.jsonl";
  FsyncPolicy fsync = FsyncPolicy::kNever;
  std::optional<std::string> listen_address;  // host:port
  bool hold = false;  // replay: keep serving after end of file
};

// Editions with at least 100,000 articles in February 2013, largest first.
const std::vector<std::string>& default_languages();
// Every Wikipedia language edition of February 2013.
const std::vector<std::string>& all_languages();

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --help / --version: the text to print, exit status 0.
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws UsageError or HelpRequested. `env_fixture_root` stands in for WLM_FIXTURE_ROOT.
RunConfig parse_args(int argc, const char* const* argv,
                     std::optional<std::string> env_fixture_root = std::nullopt);

struct RunOutcome {
  int exit_code = 0;
  RunStats stats;
};

void print_summary(std::ostream& out, const RunStats& stats);

// Live mode runs until SIGINT/SIGTERM; replay mode until end of file (or, with hold,
// until interrupted). 0 ok, 2 runtime failure.
RunOutcome run(const RunConfig& config, std::ostream& out, std::ostream& err);

int main_entry(int argc, const char* const* argv);

}  // namespace wlm
