#pragma once

#include "memdes/types.hpp"

#include <string>
#include <vector>

namespace memdes {

struct BoundResult {
  std::string metric;
  /// Bound in metric units: lower bound for Q, upper bound for G_r and P_lost.
  double value = kNaN;
  /// Optimal current over all N DOF.
  CVector I_opt;
  /// ν for Q; (α, β) for the complex-power constraints of the other two.
  std::vector<double> multipliers;
  int iterations = 0;
  /// Relative constraint violations at I_opt.
  std::vector<double> residuals;
  std::vector<std::string> flags;

  bool has_flag(const std::string& f) const;
};

/// min ½IᴴWI subject to IᴴBI = 1 and IᴴXI = 0, with B = R0 (or UᴴU when
/// `tm`). Solved through the concave dual g(ν) = λmin(W + νX, B). The
/// multiplier is kept in [−1, 1], which is where the dual also bounds the
/// tuned Q ½(IᴴWI + |IᴴXI|)/IᴴBI of non-resonant currents; an optimum on
/// that edge is flagged "tuning_limited".
BoundResult q_lower_bound(const OperatorBundle& bundle, bool tm = false);

struct GainBoundOptions {
  Index field_index = 0;
  cplx z0{50.0, 0.0};
  /// Feed voltage magnitude |V_in|.
  double v_in = 1.0;
  Index excitation_index = 0;
  Index feed_index = -1;
  /// Drop matching and power balance: the bound becomes λmax(FᴴF, R0 + Rρ).
  bool validation_mode = false;
};

/// max |FI|² subject to IᴴZI = IᴴV and VᴴI = |V_in|²/Z0, reported as realized gain.
BoundResult realized_gain_bound(const OperatorBundle& bundle, const GainBoundOptions& options = {});

/// max ½ I_chipᴴ Rρ I_chip over currents that satisfy the MoM equations on
/// the uncontrollable DOF (fixed ∪ chip) and complex-power balance overall.
BoundResult absorbed_power_bound(const OperatorBundle& bundle, Index excitation_index = 0);

}  // namespace memdes
