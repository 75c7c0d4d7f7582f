#pragma once

#include "memdes/types.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace memdes::cli {

/// An optimize/sweep job as read from an INI file.
struct JobConfig {
  std::filesystem::path bundle_path;
  ObjectiveSpec objective;
  /// q_lb_ref = auto: computed from the Q bound of the bundle.
  bool q_lb_auto = false;
  RunConfig run;
  /// Bound used for the f/bound ratio in the summary: none, auto or a value.
  bool bound_auto = false;
  std::optional<double> bound_value;
  std::string zeta_spec;
};

/// Parses the INI file. Relative paths resolve against the file's directory.
/// Throws ConfigError on syntax errors, unknown keys or bad values.
JobConfig load_job_config(const std::filesystem::path& path);

/// MEMDES_THREADS when set, otherwise `flag`.
int threads_from_env(int flag);

}  // namespace memdes::cli
