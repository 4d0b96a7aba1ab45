#pragma once

// Synthetic end-to-end workspace: a two-class sentiment task, a sampling pool,
// a test set, and a stand-in for the LM bridge that turns request files into
// distribution dumps.

#include <algorithm>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "amulap/data.hpp"
#include "amulap/dist_store.hpp"
#include "amulap/io.hpp"
#include "amulap/vocab.hpp"
#include "experiment.hpp"

namespace amulap::testing {

inline Vocabulary workspace_vocab() {
  std::vector<std::string> tokens = {"great", "terrible", "good", "bad", "</s>"};
  for (int i = 0; i < 27; ++i) tokens.push_back("w" + std::to_string(i));
  return Vocabulary(std::move(tokens));
}

struct Workspace {
  std::filesystem::path root;
  std::filesystem::path task, pool, test;

  std::filesystem::path out() const { return root / "ws"; }

  explicit Workspace(std::filesystem::path dir, std::size_t pool_per_class = 40, std::size_t test_per_class = 15)
      : root(std::move(dir)) {
    task = root / "sst2.cfg";
    TaskSpec spec;
    spec.task_name = "SST-2";
    spec.classes = {"negative", "positive"};
    spec.template_text = "<S1> It was [MASK] .";
    spec.metric = Metric::accuracy;
    io::write_file_atomic(task, format_task_spec(spec));
    pool = root / "pool.tsv";
    test = root / "test.tsv";
    io::write_file_atomic(pool, sentences("p", pool_per_class));
    io::write_file_atomic(test, sentences("t", test_per_class));
    write_vocabulary(out() / "vocab.txt", workspace_vocab());
  }

  static std::string sentences(const std::string& prefix, std::size_t per_class) {
    std::string tsv = "id\tsentence1\tlabel\n";
    for (std::size_t i = 0; i < per_class; ++i) {
      tsv += prefix + "n" + std::to_string(i) + "\ta dull and bad film number " + std::to_string(i) + "\t0\n";
      tsv += prefix + "p" + std::to_string(i) + "\ta fine and good film number " + std::to_string(i) + "\t1\n";
    }
    return tsv;
  }

  std::vector<std::string> common(const std::string& setting, const std::string& k_set = "1,2,4,8") const {
    return {"--task", task.string(), "--data", pool.string(), "--test-data", test.string(),
            "--out",  out().string(), "--setting", setting, "--k-set", k_set};
  }
};

// Stand-in for the LM bridge: the mask distribution leans toward the sentiment
// word of the prompt, with deterministic per-example noise. A positive `spike`
// adds that much mass to one random filler word per example, which swamps the
// sentiment signal when only a few examples are averaged.
inline std::vector<float> fake_distribution(const std::string& id, const std::string& prompt, std::size_t vocab,
                                            double spike = 0.0) {
  std::seed_seq seq(id.begin(), id.end());
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> noise(0.5, 1.5);
  std::vector<double> raw(vocab);
  for (auto& x : raw) x = noise(rng);
  const bool positive = prompt.find(" good ") != std::string::npos;
  if (spike > 0) {
    raw[positive ? 0 : 1] += 3.0;
    raw[5 + rng() % (vocab - 5)] += spike;
  } else {
    raw[positive ? 0 : 1] += 6.0;
    raw[positive ? 2 : 3] += 4.0;
  }
  double sum = 0;
  for (double x : raw) sum += x;
  std::vector<float> out(vocab);
  for (std::size_t v = 0; v < vocab; ++v) out[v] = static_cast<float>(raw[v] / sum);
  return out;
}

// Answers every request file under <out>/requests with a dump in <out>/dumps.
inline void run_fake_bridge(const std::filesystem::path& out, double spike = 0.0) {
  const auto vocab = load_vocabulary(out / "vocab.txt");
  for (const auto& entry : std::filesystem::directory_iterator(out / "requests")) {
    if (entry.path().extension() != ".jsonl") continue;
    DistributionDump dump;
    dump.vocab_size = static_cast<std::uint32_t>(vocab.size());
    dump.vocab_hash = vocab.digest();
    dump.model_tag = "fake-bridge";
    for (const auto& row : cli::read_request(entry.path())) {
      dump.records.push_back(
          {row.example_id, row.gold, fake_distribution(row.example_id, row.prompt, vocab.size(), spike)});
    }
    write_dump(out / "dumps" / (entry.path().stem().string() + ".amlp"), dump);
  }
}

inline int run(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

inline std::string slurp(const std::filesystem::path& p) { return io::read_text_file(p); }

// Every regular file below `dir`, keyed by relative path.
inline std::vector<std::pair<std::string, std::string>> snapshot(const std::filesystem::path& dir) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.emplace_back(std::filesystem::relative(e.path(), dir).string(), slurp(e.path()));
  }
  std::sort(files.begin(), files.end());
  return files;
}

inline std::vector<std::string> command(const std::string& name, const std::vector<std::string>& args,
                                        std::initializer_list<std::string> extra = {}) {
  std::vector<std::string> out = {name};
  out.insert(out.end(), args.begin(), args.end());
  out.insert(out.end(), extra);
  return out;
}

// Setting-1 evaluation in a fresh workspace; with `dev_present`, dev requests
// and dumps are produced too. Returns the run directory contents, or nothing
// when a step fails.
inline std::vector<std::pair<std::string, std::string>> setting1_run(const std::filesystem::path& dir, bool dev_present,
                                                                     const std::string& method = "amulap") {
  Workspace ws(dir);
  if (run(command("sample", ws.common("1"))) != 0) return {};
  if (run(command("request", ws.common(dev_present ? "2" : "1"))) != 0) return {};
  run_fake_bridge(ws.out());
  if (run(command("evaluate", ws.common("1"), {"--method", method, "--jobs", "1"})) != 0) return {};
  return snapshot(ws.out() / "runs");
}

}  // namespace amulap::testing
