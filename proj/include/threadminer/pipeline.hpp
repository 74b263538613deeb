#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "threadminer/config.hpp"

namespace threadminer {

/// Subcommand entry points. Each reads its inputs from the config, writes
/// its artifacts into cfg.out_dir and returns the list of files written.
/// Outputs are staged and only renamed into place when the whole command
/// succeeds; an exception leaves no partial files behind.
std::vector<std::string> run_stats(const PipelineConfig& cfg, std::ostream& log);
std::vector<std::string> run_train_embed(const PipelineConfig& cfg, std::ostream& log);
std::vector<std::string> run_identify(const PipelineConfig& cfg, std::ostream& log);
std::vector<std::string> run_train(const PipelineConfig& cfg, std::ostream& log);
std::vector<std::string> run_predict(const PipelineConfig& cfg, std::ostream& log);
std::vector<std::string> run_evaluate(const PipelineConfig& cfg, std::ostream& log);

/// Dispatches by subcommand name (stats, train-embed, identify, train,
/// predict, evaluate) under an exclusive lock on the output directory.
std::vector<std::string> run_subcommand(const std::string& name, const PipelineConfig& cfg,
                                        std::ostream& log);

}  // namespace threadminer
