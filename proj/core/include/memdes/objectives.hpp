#pragma once

#include "memdes/types.hpp"

#include <array>
#include <span>

namespace memdes {

/// Q-factor split into untuned and tuning parts, with the powers behind it.
struct QBreakdown {
  double q_u = kInf;
  double q_e = kInf;
  double q = kInf;
  double p_rad = 0;
  double p_lost = 0;
  double p_react = 0;
};

struct GammaResult {
  cplx z_in{kInf, 0.0};
  cplx gamma{1.0, 0.0};
  /// Feed current vanished; Γ forced to 1.
  bool open = true;
};

struct GainResult {
  double gain = 0;
  double realized_gain = 0;
  GammaResult port;
};

// Currents passed to the eval_* functions are full length N, zero on disabled DOF.

/// q_u = ½ IᴴWI / IᴴR0I, q_e = ½ |IᴴXI| / IᴴR0I. Infinite when IᴴR0I ≤ 1e-300.
QBreakdown eval_q(const CVector& I, const OperatorBundle& bundle);

/// Z_in = V[feed] / I[feed], Γ = (Z_in − Z0)/(Z_in + Z0).
GammaResult eval_gamma(const CVector& I, const CVector& V, Index feed_index, cplx z0);

/// (q / q_lb_ref)·(1 + ζ|Γ|²).
double eval_q_matched(const CVector& I, const CVector& V, const OperatorBundle& bundle, double zeta, cplx z0,
                      double q_lb_ref, Index feed_index);

/// G = |F I|² / Iᴴ(R0+R_rho)I, G_r = G(1 − |Γ|²).
GainResult eval_realized_gain(const CVector& I, const CVector& V, const OperatorBundle& bundle, Index field_index,
                              cplx z0, Index feed_index);

/// ½ I_chipᴴ R_rho[chip, chip] I_chip.
double eval_absorbed_power(const CVector& I, const OperatorBundle& bundle);

/// Quadratic and linear forms of a current from which every objective is assembled.
struct FormValues {
  std::array<double, 3> quad{0.0, 0.0, 0.0};
  cplx linear{0.0, 0.0};
  cplx feed_current{0.0, 0.0};
};

/// An ObjectiveSpec bound to a bundle: the signed value f to be minimized,
/// expressed through at most three Hermitian forms IᴴM_kI, one linear form
/// F·I and the feed current.
class Objective {
 public:
  /// Throws ConfigError when the bundle lacks what the metric needs.
  Objective(const OperatorBundle& bundle, ObjectiveSpec spec);

  const OperatorBundle& bundle() const { return *bundle_; }
  const ObjectiveSpec& spec() const { return spec_; }
  int sign() const { return sign_; }

  int n_quad() const { return static_cast<int>(quad_.size()); }
  const CMatrix& quad_matrix(int k) const { return quad_[static_cast<std::size_t>(k)]; }
  bool has_linear() const { return has_linear_; }
  const CRow& linear_row() const { return linear_; }
  /// Resolved delta-gap DOF, or -1 when the metric does not use one.
  Index feed_index() const { return feed_; }
  const CVector& excitation() const { return excitation_; }

  /// Signed objective from form values; +∞ for degenerate currents.
  double value(const FormValues& v) const;
  /// Unsigned metric (Q, Q/Q_lb·(1+ζ|Γ|²), G_r or P_abs) for a given f.
  double metric(double f) const { return sign_ > 0 ? f : -f; }

  /// Forms of a current supported on `support` (ascending, I sized |support|).
  FormValues forms(const CVector& I, std::span<const Index> support) const;
  double evaluate(const CVector& I, std::span<const Index> support) const { return value(forms(I, support)); }

  /// |Γ|² and Q/Q_lb parts of a QMatched value, for Pareto reporting.
  struct MatchedParts {
    double q_over_qlb = kInf;
    double gamma_sq = 1.0;
  };
  MatchedParts matched_parts(const FormValues& v) const;

 private:
  double gamma_sq(cplx feed_current) const;

  const OperatorBundle* bundle_;
  ObjectiveSpec spec_;
  int sign_ = 1;
  std::vector<CMatrix> quad_;
  bool has_linear_ = false;
  CRow linear_;
  Index feed_ = -1;
  cplx feed_voltage_{0.0, 0.0};
  CVector excitation_;
};

/// Default delta-gap DOF: the first fixed DOF, else the largest |V| entry.
Index default_feed_index(const OperatorBundle& bundle, Index excitation_index);

}  // namespace memdes
