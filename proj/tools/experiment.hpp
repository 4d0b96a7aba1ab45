#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "amulap/data.hpp"
#include "amulap/dist_store.hpp"
#include "amulap/k_tuner.hpp"
#include "amulap/mapping.hpp"
#include "amulap/metrics.hpp"
#include "amulap/scorer.hpp"
#include "amulap/vocab.hpp"

namespace amulap::cli {

enum class Setting { s1_train_only = 1, s2_train_dev = 2, s3_finetune = 3 };

Setting parse_setting(std::string_view text);

inline const std::vector<std::uint64_t> kDefaultSeeds = {13, 21, 42, 87, 100};
inline const std::vector<double> kFinetuneLearningRates = {1e-5, 2e-5, 5e-5};
inline const std::vector<std::size_t> kFinetuneBatchSizes = {2, 4, 8};

struct ExperimentConfig {
  TaskSpec task;
  std::size_t n = 16;
  std::vector<std::uint64_t> seeds = kDefaultSeeds;
  Method method = Method::amulap;
  Setting setting = Setting::s2_train_dev;
  std::vector<std::size_t> k_candidates;
  std::optional<std::size_t> k;  // fixed k for `select`
  std::vector<std::size_t> n_values;
  std::vector<std::string> exclude_tokens;
  std::size_t beam_width = 0;
  std::size_t jobs = 0;  // 0: one thread per seed

  std::filesystem::path out = ".";
  std::filesystem::path data;       // labelled pool that few-shot splits are drawn from
  std::filesystem::path test_data;  // the original dev split, used as the test set
  std::filesystem::path vocab;      // defaults to <out>/vocab.txt
  std::filesystem::path dumps;      // defaults to <out>/dumps
  std::filesystem::path mapping;    // manual mapping file
  std::string scores;               // external score file; "{seed}" is substituted
  std::filesystem::path handoff;    // defaults to <out>/handoff

  // Throws config error when the setting's constraints are violated.
  void validate() const;

  // Hash over everything that affects results; paths are excluded.
  std::string config_hash() const;

  std::string run_name() const;
  std::filesystem::path vocab_path() const;
  std::filesystem::path dumps_dir() const;
  std::filesystem::path handoff_dir() const;
  std::filesystem::path splits_dir() const { return out / "splits"; }
  std::filesystem::path requests_dir() const { return out / "requests"; }
  std::filesystem::path run_dir() const { return out / "runs" / run_name(); }
  std::filesystem::path split_path(std::uint64_t seed) const;
  std::filesystem::path seed_dir(std::uint64_t seed) const;
};

// Merges option maps: `flags` wins over `file_values`; keys use the flag
// spelling without dashes ("k-set", "test-data", ...).
ExperimentConfig resolve_config(const std::map<std::string, std::string>& flags,
                                const std::map<std::string, std::string>& file_values);
std::map<std::string, std::string> load_config_file(const std::filesystem::path& path);

// Request file consumed by the LM bridge: JSONL of example_id, prompt, gold.
struct BridgeRequestRow {
  std::string example_id;
  std::string prompt;
  ClassId gold = 0;
};
std::vector<BridgeRequestRow> build_request(const TaskSpec& spec, std::span<const Example> examples);
void write_request(const std::filesystem::path& path, std::span<const BridgeRequestRow> rows);
std::vector<BridgeRequestRow> read_request(const std::filesystem::path& path);
// Coverage error unless the dump's example ids equal the request's.
void check_response(std::span<const BridgeRequestRow> request, const DistributionDump& dump);

struct SeedOutcome {
  std::uint64_t seed = 0;
  LabelMapping mapping;
  KSearchTrace trace;
  std::vector<ScoredExample> test_predictions;
  double test_metric = 0.0;
};

// Selection + k tuning + test prediction for one seed. `tune` is the dev dump
// in Setting 2 and the train dump itself in Setting 1.
SeedOutcome run_seed(const ExperimentConfig& config, const Vocabulary& vocab, std::uint64_t seed,
                     const DistributionDump& train, const DistributionDump& tune,
                     std::string_view tuned_on, const DistributionDump& test);

struct CommandResult {
  std::vector<std::filesystem::path> written;
  std::optional<EvalReport> report;
};

CommandResult cmd_sample(const ExperimentConfig& config);
CommandResult cmd_request(const ExperimentConfig& config, bool include_pool);
CommandResult cmd_select(const ExperimentConfig& config);
CommandResult cmd_tune_k(const ExperimentConfig& config);
CommandResult cmd_predict(const ExperimentConfig& config);
CommandResult cmd_select_and_eval(const ExperimentConfig& config);
CommandResult cmd_sweep_n(const ExperimentConfig& config);
CommandResult cmd_finetune_handoff(const ExperimentConfig& config);
CommandResult cmd_report(const ExperimentConfig& config);

// Entry point shared by main() and the tests. Returns the process exit code:
// 0 success, 2 validation error, 3 missing artifact, 4 internal error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace amulap::cli
