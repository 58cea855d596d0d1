#pragma once

// The four pipeline stages behind the `defvec` command line tool. Each stage
// validates its inputs before doing any work.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "defvec/autoencoder.hpp"
#include "defvec/checkpoint.hpp"
#include "defvec/config.hpp"
#include "defvec/embedding.hpp"
#include "defvec/eval.hpp"
#include "defvec/image.hpp"
#include "defvec/io.hpp"
#include "defvec/vocab.hpp"

namespace defvec {

class Logger {
 public:
  explicit Logger(bool quiet = false, std::ostream* out = &std::cerr) : quiet_(quiet), out_(out) {}

  void info(const std::string& stage, const std::string& message) const {
    if (quiet_) return;
    *out_ << '[' << stage << "] " << message << std::endl;
  }

 private:
  bool quiet_;
  std::ostream* out_;
};

/// Loads base vocabulary, dictionary and stopwords named in the config and
/// builds the vocabulary. The built-in stopword list applies when no
/// `stopwords` file is configured.
inline VocabularyBuild build_pipeline_vocabulary(const PipelineConfig& cfg) {
  const auto base_path = cfg.require_existing("base_vocab");
  const auto dict_path = cfg.require_existing("dictionary");
  const auto policy = cfg.has("stopwords") ? load_stopwords(cfg.require_existing("stopwords")) : default_stopwords();
  return build_vocabulary(load_token_list(base_path), load_dictionary(dict_path), policy);
}

inline std::unique_ptr<ImageSource> pipeline_image_source(const PipelineConfig& cfg) {
  const auto location = cfg.require("images");
  if (location.rfind("synthetic:", 0) != 0) cfg.require_existing("images");
  return make_image_source(location);
}

inline void write_coverage_if_configured(const PipelineConfig& cfg, const ImageSource& source) {
  const auto* dir = dynamic_cast<const DirectorySource*>(&source);
  if (!dir || !cfg.has("coverage_report")) return;
  auto out = io::open_output(cfg.get("coverage_report"));
  dir->write_coverage_report(out);
}

inline VocabularyBuild cmd_build_vocab(const PipelineConfig& cfg, const Logger& log = Logger(true)) {
  const auto out_path = cfg.require("vocab_out");
  auto build = build_pipeline_vocabulary(cfg);
  {
    auto out = io::open_output(out_path);
    write_vocabulary(out, build.vocabulary);
  }
  const auto skip_path = cfg.get("skip_report", out_path + ".skipped");
  {
    auto out = io::open_output(skip_path);
    for (const auto& word : build.skipped) out << word << '\n';
  }
  log.info("build-vocab", std::to_string(build.vocabulary.base_words().size()) + " base words, " +
                              std::to_string(build.vocabulary.all_words().size()) + " words in closure, " +
                              std::to_string(build.skipped.size()) + " skipped");
  return build;
}

/// Every distinct (term, slot) image: five per vocabulary word, in
/// vocabulary order. PAD blanks are not part of the pool.
inline std::vector<Image> training_pool(const Vocabulary& vocab, const ImageSource& source) {
  std::vector<Image> pool;
  pool.reserve(vocab.all_words().size() * kImagesPerTerm);
  for (const auto& term : vocab.all_words()) {
    for (auto& image : checked_images(source, term)) pool.push_back(std::move(image));
  }
  return pool;
}

inline void write_loss_csv(std::ostream& out, const std::vector<EpochStats>& history) {
  out << "epoch,lr,mean_loss\n";
  char buf[96];
  for (const auto& e : history) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.9g\n", e.epoch, e.lr, e.mean_loss);
    out << buf;
  }
}

struct TrainOutcome {
  Autoencoder<float> model;
  AdamState<float> adam;
  std::vector<EpochStats> history;
};

inline TrainOutcome cmd_train(const PipelineConfig& cfg, const Logger& log = Logger(true)) {
  const auto checkpoint_path = cfg.require("checkpoint");
  const auto loss_path = cfg.get("loss_csv", checkpoint_path + ".loss.csv");
  const auto train_cfg = cfg.train_config();
  const auto build = build_pipeline_vocabulary(cfg);
  const auto source = pipeline_image_source(cfg);

  const auto pool = training_pool(build.vocabulary, *source);
  if (pool.empty()) throw ValidationError("image pool is empty");
  write_coverage_if_configured(cfg, *source);
  log.info("train", std::to_string(pool.size()) + " images, " + std::to_string(train_cfg.epochs) + " epochs, batch " +
                        std::to_string(train_cfg.batch_size));

  TrainOutcome outcome{make_autoencoder<float>(train_cfg.seed), {}, {}};
  outcome.history = train<float>(outcome.model, pool, train_cfg, outcome.adam, [&log](const EpochStats& e) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "epoch %zu lr %.6g loss %.6f", e.epoch, e.lr, e.mean_loss);
    log.info("train", buf);
  });
  save_checkpoint(checkpoint_path, outcome.model, &outcome.adam);
  auto out = io::open_output(loss_path);
  write_loss_csv(out, outcome.history);
  return outcome;
}

inline TableFormat table_format(const PipelineConfig& cfg) {
  const auto name = cfg.get("table_format", "text");
  if (name == "text") return TableFormat::text;
  if (name == "binary") return TableFormat::binary;
  throw ValidationError("table_format must be 'text' or 'binary', got '" + name + "'");
}

inline EmbeddingTable cmd_embed(const PipelineConfig& cfg, const Logger& log = Logger(true)) {
  const auto checkpoint_path = cfg.require_existing("checkpoint");
  const auto table_path = cfg.require("table");
  const auto format = table_format(cfg);
  const auto build = build_pipeline_vocabulary(cfg);
  const auto source = pipeline_image_source(cfg);
  const auto ckpt = load_checkpoint(checkpoint_path);

  auto threads = cfg.get_u64("threads", 0);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const auto total = build.vocabulary.base_words().size();
  auto table = embed_vocabulary(ckpt.model, build.vocabulary, *source, threads,
                                [&](std::size_t, const std::string& word) {
                                  log.info("embed", word);
                                });
  save_table(table_path, table, format);
  write_coverage_if_configured(cfg, *source);
  log.info("embed", "wrote " + std::to_string(total) + " x " + std::to_string(table.dim()) + " to " + table_path);
  return table;
}

inline const std::set<std::string>& eval_tasks() {
  static const std::set<std::string> tasks = {"similarity", "outlier", "categorize"};
  return tasks;
}

inline EvalReport cmd_eval(const PipelineConfig& cfg, const std::string& task, const Logger& log = Logger(true)) {
  if (!eval_tasks().count(task)) {
    throw ValidationError("unknown eval task '" + task + "' (expected similarity, outlier or categorize)");
  }
  const auto table_path = cfg.require_existing("table");
  const std::string dataset_key = task == "similarity" ? "similarity" : task == "outlier" ? "outliers" : "categorization";
  const auto dataset_path = cfg.require_existing(dataset_key);
  const std::filesystem::path report_dir = cfg.get("report_dir", ".");

  auto in = io::open_input(dataset_path);
  EvalReport report;
  if (task == "similarity") {
    const auto pairs = read_similarity_dataset(in, dataset_path);
    if (pairs.empty()) throw ValidationError("benchmark '" + dataset_path + "' is empty");
    report = eval_similarity(load_table(table_path), pairs);
  } else if (task == "outlier") {
    const auto instances = read_outlier_dataset(in, dataset_path);
    if (instances.empty()) throw ValidationError("benchmark '" + dataset_path + "' is empty");
    report = eval_outliers(load_table(table_path), instances);
  } else {
    const auto ds = read_categorization_dataset(in, dataset_path);
    if (ds.items.empty()) throw ValidationError("benchmark '" + dataset_path + "' is empty");
    report = eval_categorization(load_table(table_path), ds, cfg.eval_seed(), cfg.get_u64("kmeans_restarts", 10));
  }
  if (task != "categorize") report.seed = cfg.eval_seed();

  std::filesystem::create_directories(report_dir);
  {
    auto out = io::open_output((report_dir / (task + ".txt")).string());
    write_report_text(out, report);
  }
  {
    auto out = io::open_output((report_dir / (task + ".kv")).string());
    write_report_kv(out, report);
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s = %.6f, coverage %.4f", report.metric_name.c_str(), report.metric,
                report.coverage);
  log.info("eval", task + ": " + buf);
  return report;
}

}  // namespace defvec
