#pragma once

#include "memdes/reanalysis.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace memdes {

struct TraceEntry {
  std::uint64_t iteration = 0;
  double f = kInf;
  Move move;
  /// Cumulative over the search.
  Counters counters;
  double wall_s = 0;
};

enum class LocalStop { NoImprovingMove, Tolerance, MaxIterations };

struct LocalResult {
  std::vector<TraceEntry> trace;
  double f_initial = kInf;
  Counters counters;
  LocalStop stop = LocalStop::NoImprovingMove;

  std::uint64_t commits() const { return trace.size(); }
};

/// Greedy descent: commit the best strictly improving single-DOF move until
/// none is left, the relative change drops below eps_loc, or max_iters commits.
/// Ties go to the lowest DOF index.
LocalResult local_search(StructureState& state, double eps_loc, std::uint64_t max_iters);

struct SensitivityRow {
  Index dof = -1;
  bool enabled = false;
  MoveKind move = MoveKind::Remove;
  double tau = kInf;
  double f_candidate = kInf;
};

/// τ for every controllable DOF: removal when enabled, addition otherwise.
std::vector<SensitivityRow> sensitivity_map(StructureState& state);

void write_sensitivity_csv(std::ostream& os, const std::vector<SensitivityRow>& rows);
void write_sensitivity_csv(const std::filesystem::path& path, const std::vector<SensitivityRow>& rows);
std::vector<SensitivityRow> read_sensitivity_csv(std::istream& is);
std::vector<SensitivityRow> read_sensitivity_csv(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double ("inf", "nan" included).
std::string format_double(double v);

}  // namespace memdes
