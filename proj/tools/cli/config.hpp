#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "batdiff/degradation.hpp"
#include "batdiff/metrics.hpp"
#include "batdiff/pipeline.hpp"

namespace batdiff::cli {

/// Everything a command needs. Defaults follow the full-size protocol;
/// desk-scale runs override them from a config file or flags.
struct RunConfig {
  std::string input;
  std::string output;
  std::string checkpoint;
  std::string reference;
  std::string manifest;
  std::string trace;
  std::string dump_subbands;
  std::string metrics_csv;
  std::string suite;
  int ablate_seeds = 1;
  DegradationModel degradation;
  SamplerConfig sampler;
  TrainConfig train;
  MetricOptions metrics;
};

/// One `key = value` assignment and where it came from, for diagnostics.
struct Setting {
  std::string key;
  std::string value;
  std::string origin;
};

/// Parses flat `key = value` text. `#` starts a comment, blank lines are
/// skipped, values may be double-quoted. Errors carry `origin:line`.
std::vector<Setting> parse_settings(std::string_view text, const std::string& origin);
std::vector<Setting> read_settings(const std::filesystem::path& path);

/// Parses `key=value` as given on the command line.
Setting parse_override(const std::string& text);

/// Applies one setting. Unknown keys and malformed values throw ArgumentError.
void apply_setting(RunConfig& cfg, const Setting& s);
void apply_settings(RunConfig& cfg, const std::vector<Setting>& settings);

/// Settings recorded in a run manifest under "config".
std::vector<Setting> settings_from_manifest(const std::filesystem::path& path);

const std::vector<std::string>& known_keys();

/// All resolved values, keyed like the config file.
nlohmann::json to_json(const RunConfig& cfg);

/// Throws ArgumentError naming `key` when `value` is empty.
void require(const std::string& value, const std::string& key);

}  // namespace batdiff::cli
