// threadminer: command-line front end for the forum mining pipeline.
//
//   threadminer <subcommand> [--config FILE] [--<key> VALUE ...] [--set KEY=VALUE ...]
//
// Settings are applied in order: config file, THREADMINER_OUT_DIR (out_dir
// only), named flags, then --set entries. On failure a single line
// `error kind=<kind> message="<text>"` goes to stderr and the exit code is
// non-zero.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "threadminer/config.hpp"
#include "threadminer/embedding.hpp"
#include "threadminer/error.hpp"
#include "threadminer/pipeline.hpp"

namespace {

using threadminer::Error;
using threadminer::ErrorKind;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return 2;
    case ErrorKind::kDependency: return 3;
    case ErrorKind::kParse:
    case ErrorKind::kValidation: return 4;
    case ErrorKind::kIo: return 5;
    case ErrorKind::kNumeric: return 6;
  }
  return 1;
}

int report_error(std::string_view kind, const std::string& message, int code) {
  // json::dump gives a quoted, escaped, single-line string.
  std::cerr << "error kind=" << kind << " message=" << nlohmann::json(message).dump() << "\n";
  return code;
}

struct CommandOptions {
  std::string config_path;
  std::map<std::string, std::string> flags;  // key -> value, from --<key>
  std::vector<std::string> sets;             // KEY=VALUE
};

void add_common_options(CLI::App* cmd, CommandOptions& opts) {
  cmd->add_option("-c,--config", opts.config_path, "Pipeline config file");
  cmd->add_option("--set", opts.sets, "Override any config key, KEY=VALUE (repeatable)");
  for (const auto& [key, help] : threadminer::config_keys()) {
    cmd->add_option_function<std::string>(
        "--" + key, [&opts, key = key](const std::string& v) { opts.flags[key] = v; }, help);
  }
}

threadminer::PipelineConfig resolve_config(const CommandOptions& opts) {
  threadminer::PipelineConfig cfg;
  if (!opts.config_path.empty()) cfg = threadminer::load_config(opts.config_path);
  if (const char* env = std::getenv("THREADMINER_OUT_DIR"); env && *env) {
    threadminer::apply_setting(cfg, "out_dir", env, ".");
  }
  // Flags keep the order of config_keys(), which is fixed.
  for (const auto& [key, _] : threadminer::config_keys()) {
    if (const auto it = opts.flags.find(key); it != opts.flags.end()) {
      threadminer::apply_setting(cfg, key, it->second, ".");
    }
  }
  for (const auto& kv : opts.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorKind::kConfig, "--set expects KEY=VALUE, got '" + kv + "'");
    }
    threadminer::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1), ".");
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"threadminer: find and classify threads of interest in forum dumps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", threadminer::kToolVersion);

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"stats", "Corpus statistics (stats.json, ccdf.csv)"},
      {"train-embed", "Train the skip-gram word embedding"},
      {"identify", "Keyword selection plus similarity expansion (selection.csv)"},
      {"train", "Train the per-class forest ensemble (model.bin)"},
      {"predict", "Classify threads (predictions.csv)"},
      {"evaluate", "Stratified k-fold evaluation (eval.json, eval.txt)"},
  };
  std::map<std::string, CommandOptions> options;
  for (const auto& [name, help] : commands) {
    add_common_options(app.add_subcommand(name, help), options[name]);
  }

  CommandOptions nn_opts;
  std::string nn_word;
  std::size_t nn_k = 10;
  auto* nn = app.add_subcommand("neighbors", "Print nearest vocabulary words to a word");
  add_common_options(nn, nn_opts);
  nn->add_option("--word", nn_word, "Query word")->required();
  nn->add_option("-k", nn_k, "Number of neighbours");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), 2);
  }

  try {
    if (nn->parsed()) {
      const auto cfg = resolve_config(nn_opts);
      const auto emb = threadminer::load_embedding_binary(cfg.embedding_path());
      for (const auto& n : threadminer::nearest_neighbors(emb, nn_word, nn_k)) {
        std::cout << n.word << '\t' << n.score << '\n';
      }
      return 0;
    }
    for (const auto& [name, _] : commands) {
      if (!app.got_subcommand(name)) continue;
      const auto cfg = resolve_config(options[name]);
      for (const auto& file : threadminer::run_subcommand(name, cfg, std::cerr)) {
        std::cout << file << '\n';
      }
    }
    return 0;
  } catch (const Error& e) {
    return report_error(threadminer::to_string(e.kind()), e.what(), exit_code(e.kind()));
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 1);
  }
}
