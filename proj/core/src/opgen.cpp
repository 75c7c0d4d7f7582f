#include "memdes/opgen.hpp"

#include "memdes/errors.hpp"

#include <cmath>
#include <random>

namespace memdes {
namespace {

double cell_value(const std::vector<double>& v, Index i, const char* name) {
  if (v.size() == 1) return v[0];
  if (static_cast<Index>(v.size()) <= i)
    throw DomainError(std::string(name) + " needs one value or one per cell");
  return v[static_cast<std::size_t>(i)];
}

Eigen::MatrixXd gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = nd(rng);
  return m;
}

}  // namespace

double series_resonance_hz(double L, double C) { return 1.0 / (2.0 * kPi * std::sqrt(L * C)); }

OperatorBundle gen_rlc_ladder(const RlcLadderParams& p) {
  if (p.n < 1) throw DomainError("rlc ladder needs at least one cell");
  if (!(p.frequency_hz > 0.0)) throw DomainError("frequency must be positive");
  if (p.coupling < 0.0 || p.coupling >= 1.0) throw DomainError("coupling must lie in [0, 1)");
  const double w = 2.0 * kPi * p.frequency_hz;
  const Index n = p.n;

  Eigen::VectorXd R(n), L(n), C(n);
  for (Index i = 0; i < n; ++i) {
    R(i) = cell_value(p.R, i, "R");
    L(i) = cell_value(p.L, i, "L");
    C(i) = cell_value(p.C, i, "C");
    if (!(R(i) > 0.0) || !(L(i) > 0.0) || !(C(i) > 0.0))
      throw DomainError("cell " + std::to_string(i) + " has a nonpositive element");
  }

  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    X(i, i) = w * L(i) - 1.0 / (w * C(i));
    W(i, i) = w * L(i) + 1.0 / (w * C(i));
    if (i + 1 < n) {
      const double wm = w * p.coupling * std::sqrt(L(i) * L(i + 1));
      X(i, i + 1) = X(i + 1, i) = wm;
      W(i, i + 1) = W(i + 1, i) = wm;
    }
  }

  OperatorBundle b;
  b.n_dof = n;
  b.R0 = R.asDiagonal().toDenseMatrix().cast<cplx>();
  b.X = X.cast<cplx>();
  b.W = W.cast<cplx>();
  b.Z = b.R0 + cplx(0.0, 1.0) * b.X;
  CVector v = CVector::Zero(n);
  v(0) = 1.0;
  b.V.push_back(v);
  b.fixed_mask.assign(static_cast<std::size_t>(n), 0);
  b.controllable_mask.assign(static_cast<std::size_t>(n), 1);
  if (p.fix_feed) {
    b.fixed_mask[0] = 1;
    b.controllable_mask[0] = 0;
  }
  b.meta.frequency_hz = p.frequency_hz;
  b.meta.wavenumber = w / kC0;
  validate(b);
  return b;
}

OperatorBundle gen_random_passive(const RandomPassiveParams& p) {
  if (p.n < 1) throw DomainError("random bundle needs at least one DOF");
  if (p.loss_fraction < 0.0) throw DomainError("loss_fraction must be non-negative");
  if (!(p.impedance_scale > 0.0)) throw DomainError("impedance_scale must be positive");
  if (p.chip_count < 0 || p.chip_count + (p.with_feed ? 1 : 0) > p.n)
    throw DomainError("chip region does not fit next to the feed");
  const Index n = p.n;
  const double s = p.impedance_scale;
  std::mt19937_64 rng(p.seed);

  const Eigen::MatrixXd A = gaussian(n, n, rng) / std::sqrt(static_cast<double>(n));
  const Eigen::MatrixXd B = gaussian(n, n, rng) / std::sqrt(static_cast<double>(n));
  const Eigen::MatrixXd C = gaussian(n, n, rng) / std::sqrt(static_cast<double>(n));
  const Eigen::MatrixXd S = gaussian(n, n, rng) / std::sqrt(static_cast<double>(n));

  const Eigen::MatrixXd R0 = s * (A.transpose() * A);
  const Eigen::MatrixXd X = s * 0.5 * (S + S.transpose());
  // W ⪰ R0 + |X| keeps both stored energies W ± X non-negative, as for a
  // physical structure, and stored energy cannot vanish on radiating currents.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> xe(X);
  const Eigen::MatrixXd absX = xe.eigenvectors() * xe.eigenvalues().cwiseAbs().asDiagonal() * xe.eigenvectors().transpose();
  const Eigen::MatrixXd W = s * (C.transpose() * C) + R0 + absX;

  OperatorBundle b;
  b.n_dof = n;
  b.R0 = R0.cast<cplx>();
  b.X = X.cast<cplx>();
  b.W = W.cast<cplx>();
  b.Z = b.R0 + cplx(0.0, 1.0) * b.X;
  if (p.loss_fraction > 0.0) {
    const Eigen::MatrixXd Rr = s * p.loss_fraction * (B.transpose() * B);
    b.R_rho = Rr.cast<cplx>();
    b.Z += *b.R_rho;
  } else {
    b.R_rho = CMatrix::Zero(n, n);
  }

  CVector gap = CVector::Zero(n);
  gap(0) = 1.0;
  b.V.push_back(gap);
  const Eigen::MatrixXd inc = gaussian(n, 2, rng);
  b.V.push_back((inc.col(0).cast<cplx>() + cplx(0.0, 1.0) * inc.col(1).cast<cplx>()) / std::sqrt(2.0 * n));

  // F = sqrt(3)·wᴴ(sqrt(s)·A) with unit w bounds the lossless gain by 3.
  const Eigen::MatrixXd wv = gaussian(n, 2, rng);
  CVector wdir = wv.col(0).cast<cplx>() + cplx(0.0, 1.0) * wv.col(1).cast<cplx>();
  wdir /= wdir.norm();
  b.F.emplace_back(std::sqrt(3.0 * s) * (wdir.adjoint() * A.cast<cplx>()));

  b.fixed_mask.assign(static_cast<std::size_t>(n), 0);
  b.controllable_mask.assign(static_cast<std::size_t>(n), 1);
  if (p.with_feed) {
    b.fixed_mask[0] = 1;
    b.controllable_mask[0] = 0;
  }
  if (p.chip_count > 0) {
    b.chip_mask = Mask(static_cast<std::size_t>(n), 0);
    for (Index i = n - p.chip_count; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      (*b.chip_mask)[k] = 1;
      b.fixed_mask[k] = 1;
      b.controllable_mask[k] = 0;
    }
  }
  validate(b);
  return b;
}

CMatrix synthesize_tm_projector(const OperatorBundle& bundle, Index modes, std::uint64_t seed) {
  const Index n = bundle.n_dof;
  if (modes < 1 || modes > n) throw DomainError("TM projector needs 1..N modes");
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd g = gaussian(n, 2 * modes, rng);
  const CMatrix G = g.leftCols(modes).cast<cplx>() + cplx(0.0, 1.0) * g.rightCols(modes).cast<cplx>();
  const CMatrix Q = Eigen::HouseholderQR<CMatrix>(G).householderQ() * CMatrix::Identity(n, modes);

  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (bundle.R0 + bundle.R0.adjoint()));
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const CMatrix root = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
  return Q.adjoint() * root;
}

}  // namespace memdes
