// defvec: build-vocab | train | embed | eval
//
// Exit codes: 0 success, 2 validation error, 3 runtime failure. Errors are
// printed as a single line: `defvec: error: code=<n> stage=<cmd> message=<text>`.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "defvec/defvec.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

int fail(int code, const std::string& stage, const std::string& message) {
  std::string flat = message;
  for (char& c : flat) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::cerr << "defvec: error: code=" << code << " stage=" << stage << " message=" << flat << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dictionary-definition image embeddings: vocabulary, autoencoder training, embedding, evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  bool quiet = false;
  std::vector<std::string> overrides;
  auto* seed_opt = app.add_option("--seed", seed, "Override the `seed` config key");
  app.add_option("--config", config_path, "Pipeline config file (key = value)");
  app.add_flag("--quiet", quiet, "Suppress progress logging");
  app.add_option("--set", overrides, "Override a config key, e.g. --set epochs=5")->type_name("KEY=VALUE");

  auto* build_vocab = app.add_subcommand("build-vocab", "Build the closed vocabulary and its definition entries");
  auto* train = app.add_subcommand("train", "Train the autoencoder on the vocabulary's image pool");
  auto* embed = app.add_subcommand("embed", "Write one embedding per base word");
  auto* eval = app.add_subcommand("eval", "Score an embedding table on a benchmark");
  std::string task;
  eval->add_option("--task", task, "similarity | outlier | categorize")
      ->required()
      ->check(CLI::IsMember({"similarity", "outlier", "categorize"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kExitValidation, "cli", e.what());
  }

  std::string stage = "cli";
  for (auto* sub : {build_vocab, train, embed, eval}) {
    if (sub->parsed()) stage = sub->get_name();
  }

  try {
    defvec::PipelineConfig cfg;
    if (!config_path.empty()) cfg = defvec::PipelineConfig::load(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw defvec::ValidationError("--set expects KEY=VALUE, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (*seed_opt) cfg.set("seed", std::to_string(seed));
    const defvec::Logger log(quiet);

    if (build_vocab->parsed()) {
      defvec::cmd_build_vocab(cfg, log);
    } else if (train->parsed()) {
      defvec::cmd_train(cfg, log);
    } else if (embed->parsed()) {
      defvec::cmd_embed(cfg, log);
    } else if (eval->parsed()) {
      defvec::cmd_eval(cfg, task, log);
    }
  } catch (const defvec::ValidationError& e) {
    return fail(kExitValidation, stage, e.what());
  } catch (const std::exception& e) {
    return fail(kExitRuntime, stage, e.what());
  }
  return 0;
}
