#pragma once

// Brute-force references. Nothing here calls into the reanalysis, objective
// or bound code, so the two sides can be checked against each other.

#include "memdes/types.hpp"

#include <cstdint>
#include <vector>

namespace memdes {

struct DenseSolution {
  bool feasible = false;
  std::vector<Index> support;
  /// Current on the support, ordered like `support`.
  CVector current;
  /// Current scattered to length N.
  CVector full;
};

/// Direct LU of Z[S,S]; infeasible when its condition estimate exceeds 1e14.
DenseSolution dense_solve(const OperatorBundle& bundle, const std::vector<Index>& support, Index excitation_index = 0);
DenseSolution dense_solve(const OperatorBundle& bundle, const Word& word, Index excitation_index = 0);

/// Signed objective (minimized) of a full-length current, by direct formulas.
double oracle_objective(const OperatorBundle& bundle, const ObjectiveSpec& spec, const CVector& full_current);

/// Objective of a word via dense_solve; +∞ when infeasible.
double oracle_word_value(const OperatorBundle& bundle, const ObjectiveSpec& spec, const Word& word);

struct EnumerationResult {
  Word best_word;
  double best_f = kInf;
  /// f of every word, indexed by the word read as a big-endian binary number.
  std::vector<double> values;
};

/// Scans all 2^N_opt words (N_opt ≤ 20). Ties go to the lexicographically lowest word.
EnumerationResult enumerate_optimum(const OperatorBundle& bundle, const ObjectiveSpec& spec);

/// Word whose big-endian binary value is `code`.
Word word_from_code(std::uint64_t code, Index n_bits);

enum class BoundProblem { Q, QTm, RealizedGain, AbsorbedPower };

struct SampledExtremum {
  /// Smallest Q found (Q problems) or largest G_r / P_abs found.
  double value = kNaN;
  CVector current;
  Index samples = 0;
};

struct SampleOptions {
  Index field_index = 0;
  cplx z0{50.0, 0.0};
  Index feed_index = -1;
  Index excitation_index = 0;
  /// Realized gain only: drop the matching constraint.
  bool unmatched = false;
  std::uint64_t seed = 1;
  /// Random starting points that receive a local polish.
  Index polish_starts = 40;
};

/// Random feasible currents for the QCQP behind each bound, followed by a
/// projected local polish of the best ones. A one-sided check: a valid bound
/// is never beaten by what this finds. Intended for N ≤ 16. Q problems report
/// the smallest tuned Q ½(IᴴWI + |IᴴXI|)/IᴴBI, detuned currents included.
SampledExtremum sample_feasible_bound_oracle(const OperatorBundle& bundle, BoundProblem problem, Index n_samples,
                                             const SampleOptions& options = {});

}  // namespace memdes
