#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "catnet/datagen.hpp"
#include "catnet/error.hpp"
#include "catnet/pipeline.hpp"
#include "json.hpp"

namespace catnet {

enum class Mode { CatNet, SCatNet, Gm };
enum class Design { Linear, Brownian };

/// Everything a campaign needs, read from one JSON document. Every field has
/// a default and the fully resolved document is echoed into metrics files.
struct RunConfig {
  Mode mode = Mode::CatNet;
  std::uint64_t seed = 0;
  std::size_t repeats = 1;
  /// Group key for reports; derived from the settings when empty.
  std::string setting;
  bool dump_profiles = false;

  struct Data {
    Design design = Design::Linear;
    /// 0 leaves the dimension to the dataset (select only).
    std::size_t p = 0;
    std::size_t n = 0;
    /// Support size; negative means round(p / 5).
    long long k = -1;
    double corr = 0.0;
    LinkKind link = LinkKind::Linear;

    std::size_t support(std::size_t features) const;
  } data;

  PipelineConfig pipeline;

  /// Throws ConfigError on unknown keys, wrong types or invalid values.
  static RunConfig from_json(const nlohmann::json& doc);
  /// Parses and validates a config file; syntax errors carry line and column.
  static RunConfig load(const std::filesystem::path& path);

  nlohmann::json to_json() const;
  std::string setting_key() const;
  void validate() const;
};

class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitWarnings = 2;

/// Simulated dataset for repeat r, seeded by (seed, repeat, r).
Dataset simulate_repeat(const RunConfig& cfg, std::size_t r);

/// Writes dataset_r<i>.csv and dataset_r<i>.truth.json for each repeat.
int cmd_simulate(const std::filesystem::path& config, const std::filesystem::path& out_dir,
                 std::ostream& err);

/// Runs the configured pipeline on one dataset and writes
/// <stem>.selection.csv and <stem>.metrics.json.
int cmd_select(const std::filesystem::path& config, const std::filesystem::path& data,
               const std::filesystem::path& out_dir, std::ostream& err);

/// Aggregates metrics files per setting into a CSV and prints it.
int cmd_report(const std::string& pattern, const std::filesystem::path& out_csv, std::ostream& out,
               std::ostream& err);

SelectionResult run_pipeline(const RunConfig& cfg, const Dataset& data, RunDiagnostics* diag = nullptr);

nlohmann::json metrics_json(const RunConfig& cfg, const SelectionResult& sel);

}  // namespace catnet
