#include <CLI11.hpp>

#include <iostream>

#include "amulap/error.hpp"
#include "experiment.hpp"

namespace amulap::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitMissingArtifact = 3;
constexpr int kExitInternal = 4;

struct OptionSlot {
  std::string key;
  std::string value;
  CLI::Option* option = nullptr;
};

void add_common_options(CLI::App& cmd, std::vector<std::unique_ptr<OptionSlot>>& slots,
                        std::string& config_path) {
  auto add = [&](const std::string& key, const std::string& help) {
    auto slot = std::make_unique<OptionSlot>();
    slot->key = key;
    slot->option = cmd.add_option("--" + key, slot->value, help);
    slots.push_back(std::move(slot));
  };
  add("task", "task spec file (key = value)");
  add("n", "examples per class (default 16)");
  add("seeds", "comma-separated seeds (default 13,21,42,87,100)");
  add("method", "amulap|no-dedup|random|autol|manual|external");
  add("setting", "1 (train only), 2 (train + dev), 3 (fine-tuning handoff)");
  add("k-set", "comma-separated ascending k candidates");
  add("k", "fixed k for `select`");
  add("n-values", "comma-separated n values for `sweep-n`");
  add("exclude", "comma-separated tokens never selected");
  add("beam-width", "Auto-L beam width once the assignment space exceeds the cap");
  add("jobs", "1 runs seeds sequentially; 0 runs them in parallel");
  add("out", "workspace directory");
  add("data", "labelled pool (TSV or JSONL) to sample few-shot splits from");
  add("test-data", "test set (TSV or JSONL)");
  add("vocab", "vocabulary file (default <out>/vocab.txt)");
  add("dumps", "distribution dump directory (default <out>/dumps)");
  add("mapping", "mapping file for --method manual");
  add("scores", "external score file for --method external; {seed} is substituted");
  add("handoff", "trainer job directory (default <out>/handoff)");
  cmd.add_option("--config", config_path, "key = value file; command-line flags win on conflict");
}

void print_written(std::ostream& out, const CommandResult& result) {
  for (const auto& p : result.written) out << "wrote " << p.string() << '\n';
  if (result.report) {
    out << result.report->metric_name << ": " << format_report_cell(*result.report) << '\n';
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Automatic multi-label prompting: label mapping selection and few-shot evaluation", "amulap"};
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    CLI::App* app = nullptr;
    std::vector<std::unique_ptr<OptionSlot>> slots;
    std::string config_path;
  };
  std::vector<Command> commands;
  commands.push_back({"sample", "draw n-per-class train/dev splits for every seed", nullptr, {}, {}});
  commands.push_back({"request", "write bridge request files (templated prompts) for the splits and test set", nullptr, {}, {}});
  commands.push_back({"select", "select a label mapping at a fixed k for every seed", nullptr, {}, {}});
  commands.push_back({"tune-k", "select a mapping and tune k (train in setting 1, dev in setting 2)", nullptr, {}, {}});
  commands.push_back({"predict", "score the test dump with each seed's mapping", nullptr, {}, {}});
  commands.push_back({"evaluate", "full per-seed protocol and the aggregated report", nullptr, {}, {}});
  commands.push_back({"sweep-n", "evaluate for several n and write an n/mean/std table", nullptr, {}, {}});
  commands.push_back({"handoff", "write the setting-3 trainer job directory", nullptr, {}, {}});
  commands.push_back({"report", "collect run reports into a Markdown table", nullptr, {}, {}});
  bool include_pool = false;
  for (auto& c : commands) {
    c.app = app.add_subcommand(c.name, c.help);
    add_common_options(*c.app, c.slots, c.config_path);
  }
  commands[1].app->add_flag("--pool", include_pool, "also write a request for the whole sampling pool");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    for (auto& c : commands) {
      if (!c.app->parsed()) continue;
      std::map<std::string, std::string> flags;
      for (const auto& slot : c.slots) {
        if (slot->option->count() > 0) flags[slot->key] = slot->value;
      }
      std::map<std::string, std::string> file_values;
      if (!c.config_path.empty()) file_values = load_config_file(c.config_path);
      const auto config = resolve_config(flags, file_values);
      const std::string name = c.name;
      CommandResult result;
      if (name == "sample") result = cmd_sample(config);
      else if (name == "request") result = cmd_request(config, include_pool);
      else if (name == "select") result = cmd_select(config);
      else if (name == "tune-k") result = cmd_tune_k(config);
      else if (name == "predict") result = cmd_predict(config);
      else if (name == "evaluate") result = cmd_select_and_eval(config);
      else if (name == "sweep-n") result = cmd_sweep_n(config);
      else if (name == "handoff") result = cmd_finetune_handoff(config);
      else if (name == "report") result = cmd_report(config);
      print_written(out, result);
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    return e.kind() == ErrorKind::path ? kExitMissingArtifact : kExitValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace amulap::cli
