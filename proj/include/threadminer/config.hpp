#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "threadminer/classify.hpp"
#include "threadminer/embedding.hpp"

namespace threadminer {

inline constexpr const char* kToolVersion = "0.1.0";

struct KeywordSetConfig {
  std::string name;
  std::string path;
  std::size_t threshold = 1;
};

/// Everything a run needs. Parsed from a flat `key = value` file; every key
/// can be overridden from the command line with the same name.
struct PipelineConfig {
  std::string corpus;
  std::string stopwords;
  std::string labels;
  std::string annotations;
  std::string out_dir = "out";
  std::string embedding;  // default <out_dir>/embedding.bin
  std::string model;      // default <out_dir>/model.bin
  std::string selection;  // default <out_dir>/selection.csv

  std::uint64_t seed = 1;
  std::size_t min_count = 5;
  TrainParams embed;  // dims, window, epochs, negatives, ...
  double t_sim = 0.96;
  EnsembleParams ensemble;
  std::size_t folds = 10;
  std::string predict_on = "selected";  // selected | all
  bool dump_projections = false;

  std::vector<KeywordSetConfig> keyword_sets;  // file order
  std::vector<ClassSpec> classes;              // file order

  std::string embedding_path() const;
  std::string model_path() const;
  std::string selection_path() const;
  std::vector<std::string> class_names() const;
};

/// Parses config text. Relative paths are resolved against `base_dir`.
/// Unknown keys and bad values raise Error(kConfig).
PipelineConfig parse_config(const std::string& text, const std::string& base_dir = {});
PipelineConfig load_config(const std::string& path);

/// Sets one key exactly as a config line would. Relative paths are taken
/// relative to `base_dir` (the working directory for flags).
void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value,
                   const std::string& base_dir = {});

/// Checks cross-field invariants (dims >= 1, 0 < t_sim <= 1, ...).
void validate_config(const PipelineConfig& cfg);

/// Scalar keys accepted by apply_setting (prefix keys are class.<name>,
/// keyword_set.<name> and keyword_threshold.<name>).
const std::vector<std::pair<std::string, std::string>>& config_keys();

/// Canonical one-setting-per-line rendering; identical configs render
/// identically.
std::string canonical_config(const PipelineConfig& cfg);
std::uint64_t config_hash(const PipelineConfig& cfg);

/// "# threadminer <version> config=<hash> seed=<seed>"
std::string output_header(const PipelineConfig& cfg);

}  // namespace threadminer
