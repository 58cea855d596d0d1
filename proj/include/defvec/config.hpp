#pragma once

// Flat `key = value` pipeline configuration with `#` comment lines. Relative
// paths in a config file are resolved against the file's directory; values
// set programmatically (CLI overrides) are taken as given.

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>

#include "defvec/autoencoder.hpp"
#include "defvec/error.hpp"
#include "defvec/io.hpp"

namespace defvec {

class PipelineConfig {
 public:
  static const std::set<std::string>& path_keys() {
    static const std::set<std::string> keys = {
        "base_vocab", "dictionary",  "stopwords",  "images",      "checkpoint",     "table", "vocab_out",
        "skip_report", "coverage_report", "loss_csv", "similarity", "outliers", "categorization", "report_dir"};
    return keys;
  }

  static const std::set<std::string>& scalar_keys() {
    static const std::set<std::string> keys = {"table_format", "epochs",    "lr",      "lr_halving_period",
                                               "batch_size",   "seed",      "eval_seed", "kmeans_restarts",
                                               "threads"};
    return keys;
  }

  static PipelineConfig parse(std::istream& in, const std::string& name = "<stream>",
                              const std::filesystem::path& base_dir = {}) {
    PipelineConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (io::read_line(in, line)) {
      ++line_no;
      const auto t = io::trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string_view::npos) {
        throw ValidationError("expected 'key = value' at line " + std::to_string(line_no) + " of " + name);
      }
      const std::string key(io::trim(t.substr(0, eq)));
      std::string value(io::trim(t.substr(eq + 1)));
      if (key.empty()) throw ValidationError("empty key at line " + std::to_string(line_no) + " of " + name);
      if (path_keys().count(key) && !base_dir.empty() && !value.empty() && value.rfind("synthetic:", 0) != 0 &&
          std::filesystem::path(value).is_relative()) {
        value = (base_dir / value).lexically_normal().string();
      }
      try {
        cfg.set(key, value);
      } catch (const ValidationError& e) {
        throw ValidationError(std::string(e.what()) + " at line " + std::to_string(line_no) + " of " + name);
      }
    }
    return cfg;
  }

  static PipelineConfig load(const std::string& path) {
    auto in = io::open_input(path);
    return parse(in, path, std::filesystem::path(path).parent_path());
  }

  void set(const std::string& key, const std::string& value) {
    if (!path_keys().count(key) && !scalar_keys().count(key)) throw ValidationError("unknown config key '" + key + "'");
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0 && !values_.at(key).empty(); }

  std::string get(const std::string& key, const std::string& fallback = {}) const {
    const auto it = values_.find(key);
    return it == values_.end() || it->second.empty() ? fallback : it->second;
  }

  std::string require(const std::string& key) const {
    if (!has(key)) throw ValidationError("config key '" + key + "' is required");
    return get(key);
  }

  /// Like require(), and the path must exist.
  std::string require_existing(const std::string& key) const {
    auto path = require(key);
    if (!std::filesystem::exists(path)) throw ValidationError(key + " path '" + path + "' does not exist");
    return path;
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const auto text = get(key);
    std::size_t used = 0;
    std::uint64_t value = 0;
    try {
      value = std::stoull(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size() || text.front() == '-') {
      throw ValidationError("config key '" + key + "' must be a non-negative integer, got '" + text + "'");
    }
    return value;
  }

  double get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const auto text = get(key);
    std::size_t used = 0;
    double value = 0;
    try {
      value = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size() || !(value > 0)) {
      throw ValidationError("config key '" + key + "' must be a positive number, got '" + text + "'");
    }
    return value;
  }

  std::uint64_t seed() const { return get_u64("seed", 0); }
  std::uint64_t eval_seed() const { return get_u64("eval_seed", seed()); }

  TrainConfig train_config() const {
    TrainConfig cfg;
    cfg.epochs = get_u64("epochs", cfg.epochs);
    cfg.lr0 = get_double("lr", cfg.lr0);
    cfg.lr_halving_period = get_u64("lr_halving_period", cfg.lr_halving_period);
    cfg.batch_size = get_u64("batch_size", cfg.batch_size);
    cfg.seed = seed();
    if (cfg.batch_size == 0) throw ValidationError("batch_size must be positive");
    if (cfg.epochs == 0) throw ValidationError("epochs must be positive");
    return cfg;
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace defvec
