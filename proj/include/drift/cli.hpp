#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "drift/config.hpp"

namespace drift {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPipelineError = 1;
inline constexpr int kExitConfigError = 2;

/// Subcommands understood by run().
const std::vector<std::string>& cli_commands();

/// Runs one pipeline and returns its exit status; errors propagate as exceptions.
int run(std::string_view command, const RunConfig& config, std::ostream& log);

/// Parses the command line (defaults < --config file < DRIFT_* variables <
/// flags), runs the pipeline and maps failures onto exit codes.
int run_cli(int argc, char** argv, std::ostream& log, std::ostream& err);

/// Episodes from config.data, or freshly collected from config.app when unset.
EpisodeStore load_or_collect(const RunConfig& config);

/// Cross-validation settings derived from a run configuration.
CrossValidationConfig xval_config(const RunConfig& config, bool learning_curve);

}  // namespace drift
