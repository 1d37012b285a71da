#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "riwtl/simlab.hpp"

namespace riwtl {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

// Decimal with 12 significant digits; deterministic across runs.
std::string format_number(double v);

struct NamedDataset {
  Dataset data;
  std::vector<std::string> columns;  // predictor names, response excluded
};

// CSV with a header whose first column is "y"; remaining columns are
// predictors. Rejects ragged rows, non-numeric cells and non-finite values,
// naming the offending row and column.
NamedDataset load_named_dataset_csv(const std::filesystem::path& path);
Dataset load_dataset_csv(const std::filesystem::path& path);

void write_dataset_csv(const std::filesystem::path& path, const Dataset& d,
                       const std::vector<std::string>& columns = {});

// Flat `key = value` configuration text. Lines starting with '#' and blank
// lines are ignored; keys are unique.
struct KeyValueConfig {
  std::map<std::string, std::string> values;

  static KeyValueConfig parse_file(const std::filesystem::path& path);
  static KeyValueConfig parse_string(const std::string& text);

  bool has(const std::string& key) const { return values.count(key) > 0; }
  std::string get_string(const std::string& key) const;
  std::string get_string_or(const std::string& key, const std::string& fallback) const;
  double get_double_or(const std::string& key, double fallback) const;
  int get_int_or(const std::string& key, int fallback) const;
  std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const;
  std::vector<double> get_double_list_or(const std::string& key,
                                         std::vector<double> fallback) const;
  std::vector<std::string> get_string_list_or(const std::string& key,
                                              std::vector<std::string> fallback) const;

  std::string serialize() const;  // sorted keys, one per line
};

SimConfig sim_config_from(const KeyValueConfig& kv);
TuneGrid tune_grid_from(const KeyValueConfig& kv);
std::vector<SweepCell> cells_from(const KeyValueConfig& kv);
std::vector<std::string> methods_from(const KeyValueConfig& kv);
Fig1Config fig1_config_from(const KeyValueConfig& kv);
TunePolicy tune_policy_from(const KeyValueConfig& kv);

struct RunConfig {
  enum class Command { simulate, fit, tune, fig1 };
  Command command = Command::simulate;

  std::filesystem::path config_path;  // simulate / fig1
  std::filesystem::path target_path;  // fit / tune
  std::vector<std::filesystem::path> source_paths;
  std::string method = "riw-tl";
  std::vector<int> informative;       // trans-lasso fit; empty = contrast heuristic
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;  // overrides the config file
  int threads = 0;                    // 0 = hardware concurrency
  std::optional<double> lambda_override;
  bool center = false;                // center columns and response at ingestion
};

// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.
// On failure a machine-parsable record `error kind=<k> message="..."` goes to
// stderr and, when the output directory is usable, to <out>/error.txt.
int run(const RunConfig& config);

}  // namespace riwtl
