#pragma once

#include "memdes/types.hpp"

#include <cstdint>
#include <vector>

namespace memdes {

/// Series RLC cells on a chain, coupled through mutual inductance
/// M_i = coupling * sqrt(L_i L_{i+1}). Vectors of length 1 broadcast to every cell.
struct RlcLadderParams {
  Index n = 1;
  std::vector<double> R{1.0};
  std::vector<double> L{1e-8};
  std::vector<double> C{1e-12};
  double coupling = 0.0;
  double frequency_hz = 1e9;
  /// When false no DOF is fixed and every cell is controllable.
  bool fix_feed = true;
};

OperatorBundle gen_rlc_ladder(const RlcLadderParams& p);

/// Frequency where cell with (L, C) resonates.
double series_resonance_hz(double L, double C);

struct RandomPassiveParams {
  Index n = 8;
  std::uint64_t seed = 1;
  double loss_fraction = 0.1;
  /// Multiplies R0, R_rho, X and W.
  double impedance_scale = 1.0;
  /// Last `chip_count` DOF form a lossy, always-enabled chip region.
  Index chip_count = 0;
  /// DOF 0 carries a unit delta-gap and is always enabled.
  bool with_feed = true;
};

/// Z = R0 + R_rho + jX with R0 = AᵀA (full rank), R_rho = loss·BᵀB, X real
/// symmetric and W = CᵀC. V[0] is the delta-gap at DOF 0, V[1] a dense
/// incident-field-like excitation. F[0] satisfies |F I|² ≤ 3·IᴴR0I.
OperatorBundle gen_random_passive(const RandomPassiveParams& p);

/// M×N projector U with UᴴU ⪯ R0, built as Q·R0^{1/2} for random orthonormal rows Q.
CMatrix synthesize_tm_projector(const OperatorBundle& bundle, Index modes, std::uint64_t seed);

struct WireArrayParams {
  Index n_dipoles = 3;
  double length_over_lambda = 0.55;
  double spacing_over_lambda = 0.25;
  /// Interior nodes (triangle basis functions) per dipole; must be odd so one sits at the center.
  Index segments_per_dipole = 21;
  /// Wire radius in metres; non-positive selects length/240.
  double wire_radius = 0.0;
  /// Conductivity in S/m; infinity gives a lossless array.
  double conductivity = 5.96e7;
  double frequency_hz = 1e9;
};

/// Geometry of the basis functions of a wire array.
struct WireLayout {
  double wavelength = 0;
  double wavenumber = 0;
  double length = 0;
  double spacing = 0;
  double radius = 0;
  /// Node spacing along each dipole.
  double delta = 0;
  Index per_dipole = 0;
  Index feed_dof = 0;
  /// Per DOF: x of its dipole and z of its peak.
  std::vector<double> x;
  std::vector<double> z;
};

WireLayout wire_layout(const WireArrayParams& p);

/// Parallel z-directed dipoles at x = i·d, thin-wire Galerkin MoM with
/// triangle basis. Delta-gap feed at the centre node of the second dipole
/// (the only one when n_dipoles = 1). F[0] is the end-fire (x̂) field with ẑ
/// polarization, scaled so |F I|²/(Iᴴ(R0+R_rho)I) is the gain.
OperatorBundle gen_wire_array(const WireArrayParams& p);

/// Surface resistance of a good conductor, sqrt(k η0 / (2σ)).
double surface_resistance(double wavenumber, double conductivity);

}  // namespace memdes
