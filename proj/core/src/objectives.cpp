#include "memdes/objectives.hpp"

#include "memdes/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace memdes {
namespace {

constexpr double kTiny = 1e-300;

double form(const CVector& I, const CMatrix& M) { return I.dot(M * I).real(); }

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

CMatrix chip_block(const OperatorBundle& b) {
  CMatrix D = CMatrix::Zero(b.n_dof, b.n_dof);
  const auto chip = chip_indices(b);
  D(chip, chip) = (*b.R_rho)(chip, chip);
  return D;
}

}  // namespace

QBreakdown eval_q(const CVector& I, const OperatorBundle& b) {
  require(b.W.has_value(), "Q objective needs the W matrix");
  QBreakdown q;
  const double r = form(I, b.R0);
  q.p_rad = 0.5 * r;
  q.p_react = 0.5 * form(I, b.X);
  q.p_lost = b.R_rho ? 0.5 * form(I, *b.R_rho) : 0.0;
  if (r <= kTiny) return q;
  q.q_u = 0.5 * form(I, *b.W) / r;
  q.q_e = std::abs(q.p_react) / r;
  q.q = q.q_u + q.q_e;
  return q;
}

GammaResult eval_gamma(const CVector& I, const CVector& V, Index feed, cplx z0) {
  GammaResult g;
  if (feed < 0 || feed >= I.size() || std::abs(I(feed)) <= kTiny) return g;
  g.open = false;
  g.z_in = V(feed) / I(feed);
  g.gamma = (g.z_in - z0) / (g.z_in + z0);
  return g;
}

double eval_q_matched(const CVector& I, const CVector& V, const OperatorBundle& b, double zeta, cplx z0,
                      double q_lb_ref, Index feed) {
  require(q_lb_ref > 0.0, "matched Q objective needs a positive q_lb_ref");
  const QBreakdown q = eval_q(I, b);
  const GammaResult g = eval_gamma(I, V, feed, z0);
  return q.q / q_lb_ref * (1.0 + zeta * std::norm(g.gamma));
}

GainResult eval_realized_gain(const CVector& I, const CVector& V, const OperatorBundle& b, Index field_index, cplx z0,
                              Index feed) {
  require(field_index >= 0 && field_index < static_cast<Index>(b.F.size()), "realized gain needs F row " +
                                                                                std::to_string(field_index));
  GainResult out;
  out.port = eval_gamma(I, V, feed, z0);
  double p = form(I, b.R0);
  if (b.R_rho) p += form(I, *b.R_rho);
  if (p <= kTiny) return out;
  out.gain = std::norm((b.F[static_cast<std::size_t>(field_index)] * I)(0)) / p;
  out.realized_gain = out.gain * (1.0 - std::norm(out.port.gamma));
  return out;
}

double eval_absorbed_power(const CVector& I, const OperatorBundle& b) {
  require(b.R_rho.has_value(), "absorbed power needs the R_rho matrix");
  const auto chip = chip_indices(b);
  if (chip.empty()) return 0.0;
  const CVector Ic = I(chip);
  return 0.5 * Ic.dot((*b.R_rho)(chip, chip) * Ic).real();
}

Index default_feed_index(const OperatorBundle& b, Index excitation_index) {
  if (excitation_index < 0 || excitation_index >= static_cast<Index>(b.V.size())) return -1;
  const CVector& v = b.V[static_cast<std::size_t>(excitation_index)];
  Index nonzero = 0, last = -1;
  for (Index i = 0; i < v.size(); ++i)
    if (v(i) != cplx(0.0, 0.0)) ++nonzero, last = i;
  if (nonzero == 1) return last;
  const auto fixed = fixed_indices(b);
  if (!fixed.empty()) return fixed.front();
  Index best = 0;
  v.cwiseAbs().maxCoeff(&best);
  return best;
}

Objective::Objective(const OperatorBundle& bundle, ObjectiveSpec spec)
    : bundle_(&bundle), spec_(spec), sign_(effective_sign(spec)) {
  const auto& b = bundle;
  require(spec.excitation_index >= 0 && spec.excitation_index < static_cast<Index>(b.V.size()),
          "bundle has no excitation " + std::to_string(spec.excitation_index));
  excitation_ = b.V[static_cast<std::size_t>(spec.excitation_index)];
  auto resolve_feed = [&] {
    feed_ = spec.feed_index >= 0 ? spec.feed_index : default_feed_index(b, spec.excitation_index);
    require(feed_ >= 0 && feed_ < b.n_dof, "feed index out of range");
    feed_voltage_ = excitation_(feed_);
  };

  switch (spec.kind) {
    case ObjectiveKind::Q:
    case ObjectiveKind::QMatched:
      require(b.W.has_value(), "Q objective needs the W matrix");
      quad_ = {*b.W, b.R0, b.X};
      if (spec.kind == ObjectiveKind::QMatched) {
        require(spec.q_lb_ref > 0.0, "matched Q objective needs a positive q_lb_ref");
        require(spec.zeta >= 0.0, "zeta must be non-negative");
        resolve_feed();
      }
      break;
    case ObjectiveKind::RealizedGain:
      require(spec.field_index >= 0 && spec.field_index < static_cast<Index>(b.F.size()),
              "realized gain needs F row " + std::to_string(spec.field_index));
      quad_ = {b.R_rho ? CMatrix(b.R0 + *b.R_rho) : b.R0};
      has_linear_ = true;
      linear_ = b.F[static_cast<std::size_t>(spec.field_index)];
      resolve_feed();
      break;
    case ObjectiveKind::AbsorbedPower:
      require(b.R_rho.has_value(), "absorbed power needs the R_rho matrix");
      require(b.chip_mask.has_value(), "absorbed power needs a chip mask");
      if (chip_indices(b).empty()) std::clog << "warning: empty chip mask, absorbed power is identically 0\n";
      quad_ = {chip_block(b)};
      break;
  }
}

double Objective::gamma_sq(cplx feed_current) const {
  if (std::abs(feed_current) <= kTiny) return 1.0;
  const cplx zin = feed_voltage_ / feed_current;
  return std::norm((zin - spec_.z0) / (zin + spec_.z0));
}

double Objective::value(const FormValues& v) const {
  switch (spec_.kind) {
    case ObjectiveKind::Q:
    case ObjectiveKind::QMatched: {
      const double r = v.quad[1];
      if (!(r > kTiny)) return kInf;
      const double q = 0.5 * (v.quad[0] + std::abs(v.quad[2])) / r;
      if (spec_.kind == ObjectiveKind::Q) return sign_ * q;
      return sign_ * (q / spec_.q_lb_ref * (1.0 + spec_.zeta * gamma_sq(v.feed_current)));
    }
    case ObjectiveKind::RealizedGain: {
      const double p = v.quad[0];
      if (!(p > kTiny)) return kInf;
      const double g = std::norm(v.linear) / p;
      return sign_ * g * (1.0 - gamma_sq(v.feed_current));
    }
    case ObjectiveKind::AbsorbedPower:
      return sign_ * 0.5 * v.quad[0];
  }
  return kInf;
}

Objective::MatchedParts Objective::matched_parts(const FormValues& v) const {
  MatchedParts m;
  const double r = v.quad[1];
  if (quad_.size() < 3 || !(r > kTiny)) return m;
  const double q = 0.5 * (v.quad[0] + std::abs(v.quad[2])) / r;
  m.q_over_qlb = spec_.q_lb_ref > 0.0 ? q / spec_.q_lb_ref : q;
  m.gamma_sq = feed_ >= 0 ? gamma_sq(v.feed_current) : kNaN;
  return m;
}

FormValues Objective::forms(const CVector& I, std::span<const Index> support) const {
  const std::vector<Index> s(support.begin(), support.end());
  FormValues v;
  for (std::size_t k = 0; k < quad_.size(); ++k) v.quad[k] = I.dot(quad_[k](s, s) * I).real();
  if (has_linear_) v.linear = (linear_(s) * I)(0);
  if (feed_ >= 0) {
    auto it = std::lower_bound(s.begin(), s.end(), feed_);
    if (it != s.end() && *it == feed_) v.feed_current = I(it - s.begin());
  }
  return v;
}

}  // namespace memdes
