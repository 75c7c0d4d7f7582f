#pragma once

#include "memdes/objectives.hpp"
#include "memdes/types.hpp"

#include <cstdint>
#include <vector>

namespace memdes {

enum class MoveKind : std::uint8_t { Remove, Add };

struct Move {
  MoveKind kind = MoveKind::Remove;
  Index dof = -1;

  friend bool operator==(const Move&, const Move&) = default;
};

std::string to_string(MoveKind kind);

/// Number of candidate structures whose feasibility was checked.
struct Counters {
  std::uint64_t removals_evaluated = 0;
  std::uint64_t additions_evaluated = 0;

  std::uint64_t total() const { return removals_evaluated + additions_evaluated; }
  Counters& operator+=(const Counters& o) {
    removals_evaluated += o.removals_evaluated;
    additions_evaluated += o.additions_evaluated;
    return *this;
  }
};

struct Candidate {
  Move move;
  bool feasible = false;
  double f = kInf;
  /// f − f(current word); negative means the move improves.
  double tau = kInf;
};

/// Current of one perturbed structure, ordered like `support`.
struct CandidateCurrent {
  Move move;
  bool feasible = false;
  std::vector<Index> support;
  CVector current;
};

struct StateDiagnostics {
  std::uint64_t commits = 0;
  std::uint64_t refactorizations = 0;
  /// Refactorizations forced by the residual guard rather than the period.
  std::uint64_t residual_refactorizations = 0;
  double last_residual = 0;
};

/// Enabled set S with Y = Z[S,S]⁻¹, current I and cached objective value.
///
/// Besides Y the state keeps T = Y·Z[S,:] and, for every form matrix M of
/// the objective, M[S,S]·Y and M[S,S]·T (and F[S]·Y, F[S]·T for the linear
/// form). With these every single-DOF removal or addition is scored in O(N)
/// and each commit costs O(|S|·N) per matrix.
class StructureState {
 public:
  static constexpr double kResidualTol = 1e-9;
  static constexpr double kPivotTol = 1e-12;
  static constexpr double kConditionLimit = 1e14;

  /// Factorizes Z[S,S] directly. Throws InfeasibleError when its condition
  /// estimate exceeds 1e14. An empty S is allowed and has f = +∞.
  StructureState(const Objective& objective, const Word& word, int refactor_period = 64);
  StructureState(const Objective& objective, std::vector<Index> support, int refactor_period = 64);

  const Objective& objective() const { return *objective_; }
  const std::vector<Index>& enabled() const { return S_; }
  const CMatrix& Y() const { return Y_; }
  const CVector& I() const { return I_; }
  double f() const { return f_; }
  const FormValues& forms() const { return forms_; }
  const Counters& counters() const { return counters_; }
  const StateDiagnostics& diagnostics() const { return diag_; }

  Word word() const;
  /// I scattered to length N.
  CVector full_current() const;
  bool is_enabled(Index dof) const { return pos_[static_cast<std::size_t>(dof)] >= 0; }

  /// R(g): enabled, non-fixed DOF, ascending.
  std::vector<Index> removal_set() const;
  /// A(g): controllable, disabled DOF, ascending.
  std::vector<Index> addition_set() const;

  std::vector<CandidateCurrent> removal_currents();
  std::vector<CandidateCurrent> addition_currents();

  /// Scores every move in R(g) ∪ A(g), ascending DOF order.
  std::vector<Candidate> evaluate_candidates();

  /// Applies a feasible move. Throws std::logic_error for an infeasible one.
  void commit(const Move& move);

  /// ‖Z[S,S]I − V[S]‖ / ‖V[S]‖.
  double residual() const;
  void refactor();

 private:
  void factorize(bool strict);
  void refresh_value();
  bool removal_feasible(Index p) const;
  bool addition_feasible(const cplx& s) const;
  void apply_removal(Index p);
  void apply_addition(Index m);

  const Objective* objective_;
  const OperatorBundle* bundle_;
  int refactor_period_;
  std::vector<Index> S_;
  std::vector<Index> pos_;
  CMatrix Y_;
  CMatrix T_;
  CVector I_;
  std::vector<CMatrix> P_;
  std::vector<CMatrix> Q_;
  CRow FY_;
  CRow FT_;
  FormValues forms_;
  double f_ = kInf;
  double zdiag_max_ = 0;
  Counters counters_;
  StateDiagnostics diag_;
};

}  // namespace memdes
