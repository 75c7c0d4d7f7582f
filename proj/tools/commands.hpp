#pragma once

#include "memdes/opgen.hpp"
#include "memdes/types.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

namespace memdes::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kSolver = 4 };

/// Runs fn and maps library exceptions to the exit-code contract.
int guarded(const std::function<int()>& fn);

struct GenOptions {
  std::string kind;
  std::filesystem::path out;
  RlcLadderParams rlc;
  RandomPassiveParams random;
  WireArrayParams wire;
  Index tm_modes = 0;
  std::uint64_t tm_seed = 1;
};

struct ObjectiveFlags {
  std::string kind = "q";
  double zeta = 0;
  double z0 = 50;
  std::string q_lb = "auto";
  Index field_index = 0;
  Index feed_index = -1;
  Index excitation_index = 0;
};

struct BoundOptions {
  std::string metric;
  std::filesystem::path bundle;
  bool tm = false;
  Index field_index = 0;
  double z0 = 50;
  double v_in = 1;
  Index excitation_index = 0;
  Index feed_index = -1;
  bool validation_mode = false;
};

int cmd_gen(const GenOptions& o);
int cmd_bound(const BoundOptions& o);
int cmd_optimize(const std::filesystem::path& config, int threads);
int cmd_sweep(const std::filesystem::path& config, const std::string& zeta_spec, int threads);
int cmd_inspect(const std::filesystem::path& bundle, bool verify, std::uint64_t seed);
int cmd_sensitivity(const std::filesystem::path& bundle, const std::filesystem::path& word,
                    const ObjectiveFlags& flags, const std::optional<std::filesystem::path>& out);

}  // namespace memdes::cli
