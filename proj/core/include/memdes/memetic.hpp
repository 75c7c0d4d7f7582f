#pragma once

#include "memdes/reanalysis.hpp"
#include "memdes/types.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <vector>

namespace memdes {

struct Agent {
  Word word;
  double f = kInf;
  /// Candidates checked by this agent's most recent local search.
  Counters counters;
  std::uint64_t local_commits = 0;
  /// True once the word has been through local_search.
  bool local = false;
  std::uint64_t rng_stream = 0;
};

struct IterationLog {
  int iter = 0;
  std::vector<Agent> agents;
  double best_f = kInf;
  double mean_f = kInf;
  double hamming_mean = 0;
  /// Cumulative over the run after each agent of this iteration, in agent order.
  std::vector<Counters> counters_cum;
  double elapsed_s = 0;
  Word best_word;
};

struct MemeticResult {
  Agent best;
  std::vector<IterationLog> log;
  Counters counters;
  int iterations = 0;
  double wall_s = 0;
};

/// RNG stream of one agent in one iteration; independent of thread count.
std::uint64_t agent_stream(std::uint64_t seed, int iter, int agent);

/// Mean pairwise Hamming distance of a population.
double mean_pairwise_hamming(const std::vector<Agent>& agents);

using ProgressFn = std::function<void(const IterationLog&)>;

/// Genetic global step over locally optimal words. Iteration 1 scores random
/// words directly; from iteration 2 on every new agent is passed through
/// local_search before selection.
MemeticResult memetic_optimize(const OperatorBundle& bundle, const ObjectiveSpec& spec, const RunConfig& config,
                               const ProgressFn& progress = {});

/// `iter,agent,f,hamming_mean,removals_cum,additions_cum,elapsed_s`; elapsed_s is 0 when wall time is off.
void write_convergence_csv(std::ostream& os, const MemeticResult& result, bool wall_time);
void write_convergence_csv(const std::filesystem::path& path, const MemeticResult& result, bool wall_time);

/// Header `# bundle_hash=0x...`, then one 0/1 character per controllable DOF.
void write_best_word(const std::filesystem::path& path, const Word& word, std::uint64_t bundle_hash);
/// Returns the word and stores the header hash in `bundle_hash` when given.
Word read_best_word(const std::filesystem::path& path, std::uint64_t* bundle_hash = nullptr);

struct SweepPoint {
  double zeta = 0;
  double f = kInf;
  double q_over_qlb = kInf;
  double gamma_sq = 1.0;
  Word word;
  Counters counters;
  int iterations = 0;
  bool dominated = false;
};

/// Indices of points not dominated in the (x, y) plane, both minimized.
std::vector<bool> dominated_flags(const std::vector<std::pair<double, double>>& points);

/// One memetic run per ζ of a QMatched template; marks dominated points in the (Q/Q_lb, |Γ|²) plane.
std::vector<SweepPoint> pareto_sweep(const OperatorBundle& bundle, const ObjectiveSpec& templ,
                                     const std::vector<double>& zetas, const RunConfig& config);

/// `zeta,q_over_qlb,gamma_sq,dominated`, one row per ζ.
void write_frontier_csv(std::ostream& os, const std::vector<SweepPoint>& points);

/// "a:b:n" (n equidistant samples), "a,b,c" or a single value.
std::vector<double> parse_zeta_spec(const std::string& spec);

}  // namespace memdes
