#include "memdes/bounds.hpp"

#include "memdes/errors.hpp"
#include "memdes/objectives.hpp"
#include "memdes/pencil.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace memdes {

bool BoundResult::has_flag(const std::string& f) const { return std::find(flags.begin(), flags.end(), f) != flags.end(); }

namespace {

double form(const CVector& I, const CMatrix& M) { return I.dot(M * I).real(); }

// ---- Q bound --------------------------------------------------------------

struct Probe {
  double nu = 0;
  PencilResult p;
  double h = 0;  // vᴴXv, the derivative of g
};

Probe probe(const CMatrix& W, const CMatrix& X, const CMatrix& B, double nu) {
  Probe pr;
  pr.nu = nu;
  pr.p = hermitian_pencil_min_eig(W + nu * X, B);
  pr.h = pr.p.bounded ? form(pr.p.vector, X) : kNaN;
  return pr;
}

// Combination of two unit vectors on either side of a degenerate optimum with vᴴXv = 0.
CVector mix_resonant(const CVector& v1, const CVector& v2, const CMatrix& X, const CMatrix& B) {
  const double h1 = form(v1, X);
  const double h2 = form(v2, X);
  const double x12 = v1.dot(X * v2).real();
  if (h1 * h2 > 0.0) return v1;
  CVector v = v1;
  if (h2 != 0.0) {
    const double tau = (-x12 - std::sqrt(std::max(x12 * x12 - h1 * h2, 0.0))) / h2;
    v = v1 + tau * v2;
  } else {
    v = v2;
  }
  return v / std::sqrt(form(v, B));
}

// ---- Two-multiplier dual -------------------------------------------------
//
// Maximize IᴴAI over I = Ip + N t subject to c_i(I) = IᴴB_iI + 2Re(b_iᴴI) = 0,
// i = 1, 2. For multipliers λ with H = Nᴴ(A − λ₁B₁ − λ₂B₂)N ≺ 0 the inner
// maximization is a linear solve and d(λ) is a convex upper bound.

struct Qcqp {
  CVector Ip;
  CMatrix N;
  CMatrix A;
  std::array<CMatrix, 2> B;
  std::array<CVector, 2> b;
};

struct DualPoint {
  bool ok = false;
  double d = kInf;
  CVector I;
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  Eigen::Vector2d rel = Eigen::Vector2d::Constant(kInf);
};

DualPoint eval_dual(const Qcqp& q, const Eigen::Vector2d& lam) {
  DualPoint out;
  const CMatrix M = q.A - lam(0) * q.B[0] - lam(1) * q.B[1];
  const CVector m = -lam(0) * q.b[0] - lam(1) * q.b[1];
  const CMatrix H = q.N.adjoint() * M * q.N;
  const Eigen::LLT<CMatrix> llt(-H);
  if (llt.info() != Eigen::Success) return out;
  const CVector h = q.N.adjoint() * (M * q.Ip + m);
  const CVector t = llt.solve(h);  // t* = −H⁻¹h = (−H)⁻¹h
  out.I = q.Ip + q.N * t;
  if (!out.I.allFinite()) return out;
  out.ok = true;
  out.d = form(out.I, M) + 2.0 * m.dot(out.I).real();
  for (int i = 0; i < 2; ++i) {
    const double quad = form(out.I, q.B[static_cast<std::size_t>(i)]);
    const double lin = 2.0 * q.b[static_cast<std::size_t>(i)].dot(out.I).real();
    out.c(i) = quad + lin;
    // Scale by the magnitudes the terms could reach, so a term that cancels
    // exactly (Im VᴴI for real Z0) does not inflate the relative error.
    const double scale = q.B[static_cast<std::size_t>(i)].norm() * out.I.squaredNorm() +
                         2.0 * q.b[static_cast<std::size_t>(i)].norm() * out.I.norm();
    out.rel(i) = std::abs(out.c(i)) / (scale + 1e-300);
  }
  return out;
}

struct DualSolution {
  DualPoint point;
  Eigen::Vector2d lam = Eigen::Vector2d::Zero();
  int iterations = 0;
  bool converged = false;
};

std::vector<Eigen::Vector2d> dual_seeds(const Qcqp& q) {
  const CMatrix An = q.N.adjoint() * q.A * q.N;
  std::vector<std::pair<double, Eigen::Vector2d>> valid;
  constexpr int kAngles = 72;
  for (int k = 0; k < kAngles; ++k) {
    const double th = 2.0 * kPi * k / kAngles;
    const CMatrix K = q.N.adjoint() * (std::cos(th) * q.B[0] + std::sin(th) * q.B[1]) * q.N;
    if (Eigen::LLT<CMatrix>(K).info() != Eigen::Success) continue;
    const double top = -hermitian_pencil_min_eig(-An, K).value;
    const double r = std::max(2.0 * top, 1e-12 * std::max(An.cwiseAbs().maxCoeff(), 1.0)) + 1e-300;
    const double dist = std::min(th, 2.0 * kPi - th);
    valid.emplace_back(dist, Eigen::Vector2d(r * std::cos(th), r * std::sin(th)));
  }
  std::stable_sort(valid.begin(), valid.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Eigen::Vector2d> seeds;
  for (const auto& v : valid) {
    if (seeds.size() == 5) break;
    // Spread the seeds instead of taking five neighbouring angles.
    bool close = false;
    for (const auto& s : seeds)
      if (std::abs(std::atan2(s(1), s(0)) - std::atan2(v.second(1), v.second(0))) < 0.3) close = true;
    if (!close) seeds.push_back(v.second);
  }
  for (const auto& v : valid) {
    if (seeds.size() == 5) break;
    if (std::find(seeds.begin(), seeds.end(), v.second) == seeds.end()) seeds.push_back(v.second);
  }
  return seeds;
}

DualSolution newton_from(const Qcqp& q, Eigen::Vector2d lam) {
  DualSolution s;
  DualPoint cur = eval_dual(q, lam);
  if (!cur.ok) return s;
  for (int it = 0; it < 200; ++it) {
    s.iterations = it;
    if (cur.rel.maxCoeff() <= 1e-8) {
      s.converged = true;
      break;
    }
    // Forward-difference Jacobian of the residual map; backward when the
    // forward point leaves the dual domain.
    Eigen::Matrix2d J;
    bool jac_ok = true;
    for (int k = 0; k < 2; ++k) {
      const double step = 1e-7 * std::max(lam.norm(), 1e-30);
      Eigen::Vector2d e = Eigen::Vector2d::Zero();
      e(k) = step;
      DualPoint fp = eval_dual(q, lam + e);
      double sgn = 1.0;
      if (!fp.ok) {
        fp = eval_dual(q, lam - e);
        sgn = -1.0;
      }
      if (!fp.ok) {
        jac_ok = false;
        break;
      }
      J.col(k) = sgn * (fp.c - cur.c) / step;
    }
    Eigen::Vector2d delta = cur.c;  // steepest descent on d, since ∇d = −c
    if (jac_ok) {
      const Eigen::Vector2d nd = -J.fullPivLu().solve(cur.c);
      if (nd.allFinite() && cur.c.dot(nd) > 0.0) delta = nd;
    }
    double alpha = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
      const Eigen::Vector2d trial = lam + alpha * delta;
      DualPoint tp = eval_dual(q, trial);
      if (!tp.ok) continue;
      if (tp.d <= cur.d - 1e-4 * alpha * cur.c.dot(delta) || tp.rel.maxCoeff() < cur.rel.maxCoeff()) {
        lam = trial;
        cur = std::move(tp);
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  if (cur.rel.maxCoeff() <= 1e-8) s.converged = true;
  s.point = cur;
  s.lam = lam;
  return s;
}

DualSolution solve_dual(const Qcqp& q, const std::string& what) {
  const auto seeds = dual_seeds(q);
  if (seeds.empty()) throw SolverError(what + ": no multiplier makes the dual finite");
  DualSolution best;
  bool have = false;
  for (const auto& seed : seeds) {
    DualSolution s = newton_from(q, seed);
    if (!s.point.ok) continue;
    if (!have || (s.converged && !best.converged) ||
        (s.converged == best.converged && s.point.rel.maxCoeff() < best.point.rel.maxCoeff())) {
      best = s;
      have = true;
    }
    if (best.converged) break;
  }
  if (!have || !best.converged) {
    std::ostringstream os;
    os << what << ": dual Newton did not converge";
    if (have) os << " (relative residuals " << best.point.rel(0) << ", " << best.point.rel(1) << ")";
    throw SolverError(os.str());
  }
  return best;
}

}  // namespace

BoundResult q_lower_bound(const OperatorBundle& b, bool tm) {
  if (!b.W) throw ConfigError("Q bound needs the W matrix");
  CMatrix B = b.R0;
  if (tm) {
    if (!b.tm_projector) throw ConfigError("TM bound needs a TM projector");
    B = b.tm_projector->adjoint() * *b.tm_projector;
  }
  const CMatrix& W = *b.W;
  const CMatrix& X = b.X;

  BoundResult r;
  r.metric = tm ? "q_tm" : "q";
  constexpr double kTol = 1e-9;

  Probe at = probe(W, X, B, 0.0);
  if (!at.p.bounded) throw SolverError("Q bound: W is not positive definite on the null space of the radiation matrix");
  int iters = 1;
  Probe lo = at, hi = at;
  bool resonant = std::abs(at.h) <= kTol;
  if (!resonant) {
    const double dir = at.h > 0.0 ? 1.0 : -1.0;
    const Probe edge = probe(W, X, B, dir);
    ++iters;
    if (edge.p.bounded && dir * edge.h >= 0.0) {
      // g still rises at |ν| = 1.
      at = edge;
      r.flags.push_back("tuning_limited");
    } else {
      lo = at;
      hi = edge;
      for (int it = 0; it < 200; ++it, ++iters) {
        const Probe mid = probe(W, X, B, 0.5 * (lo.nu + hi.nu));
        if (mid.p.bounded && std::abs(mid.h) <= kTol) {
          at = mid;
          resonant = true;
          break;
        }
        if (mid.p.bounded && dir * mid.h > 0.0)
          lo = mid;
        else
          hi = mid;
        if (std::abs(hi.nu - lo.nu) <= 1e-15 * (1.0 + std::abs(lo.nu))) break;
      }
      if (!resonant) {
        at = lo;
        if (hi.p.bounded) {
          // Eigenvalue crossing at ν*: compose a resonant current from both sides.
          at.p.vector = mix_resonant(lo.p.vector, hi.p.vector, X, B);
          at.h = form(at.p.vector, X);
          at.p.value = 0.5 * (lo.p.value + hi.p.value);
          r.flags.push_back("degenerate");
        } else if (lo.p.second - lo.p.value <= 1e-8 * std::abs(lo.p.value)) {
          at.p.vector = mix_resonant(lo.p.vector, lo.p.second_vector, X, B);
          at.h = form(at.p.vector, X);
          r.flags.push_back("degenerate");
        }
      }
    }
  }
  r.value = 0.5 * at.p.value;
  r.I_opt = at.p.vector;
  r.multipliers = {at.nu};
  r.iterations = iters;
  r.residuals = {std::abs(at.h) / std::max(form(r.I_opt, B), 1e-300), std::abs(form(r.I_opt, B) - 1.0)};
  return r;
}

BoundResult realized_gain_bound(const OperatorBundle& b, const GainBoundOptions& o) {
  if (o.field_index < 0 || o.field_index >= static_cast<Index>(b.F.size()))
    throw ConfigError("gain bound needs F row " + std::to_string(o.field_index));
  if (o.excitation_index < 0 || o.excitation_index >= static_cast<Index>(b.V.size()))
    throw ConfigError("gain bound needs excitation " + std::to_string(o.excitation_index));
  const CRow& F = b.F[static_cast<std::size_t>(o.field_index)];
  const CMatrix R = b.R_rho ? CMatrix(b.R0 + *b.R_rho) : b.R0;
  const Index n = b.n_dof;
  const Index feed = o.feed_index >= 0 ? o.feed_index : default_feed_index(b, o.excitation_index);

  BoundResult r;
  r.metric = "realized_gain";
  if (o.validation_mode) {
    const PencilResult p = hermitian_pencil_min_eig(-CMatrix(F.adjoint() * F), R);
    if (!p.bounded) throw SolverError("gain bound: unbounded, F reaches the null space of R");
    r.value = -p.value;
    r.I_opt = p.vector;
    r.flags.push_back("validation_mode");
    return r;
  }

  CVector V = b.V[static_cast<std::size_t>(o.excitation_index)];
  const double vf = std::abs(V(feed));
  if (!(vf > 0.0)) throw ConfigError("gain bound: excitation vanishes at the feed");
  V *= o.v_in / vf;

  if (n == 1) {
    // Power balance alone forces I = V/Z.
    const CVector I = b.Z.partialPivLu().solve(V);
    r.value = eval_realized_gain(I, V, b, o.field_index, o.z0, feed).realized_gain;
    r.I_opt = I;
    r.flags.push_back("forced_current");
    return r;
  }

  const cplx p = o.v_in * o.v_in / o.z0;
  Qcqp q;
  q.Ip = V * (p / V.squaredNorm());
  Eigen::JacobiSVD<CMatrix> svd(CMatrix(V.adjoint()), Eigen::ComputeFullV);
  q.N = svd.matrixV().rightCols(n - 1);
  q.A = F.adjoint() * F;
  q.B = {R, b.X};
  q.b = {-0.5 * V, cplx(0.0, 0.5) * V};
  const DualSolution s = solve_dual(q, "gain bound");
  r.value = s.point.d / std::real(p);
  r.I_opt = s.point.I;
  r.multipliers = {s.lam(0), s.lam(1)};
  r.iterations = s.iterations;
  r.residuals = {s.point.rel(0), s.point.rel(1)};
  return r;
}

BoundResult absorbed_power_bound(const OperatorBundle& b, Index excitation_index) {
  if (!b.R_rho) throw ConfigError("absorbed-power bound needs the R_rho matrix");
  if (!b.chip_mask) throw ConfigError("absorbed-power bound needs a chip mask");
  if (excitation_index < 0 || excitation_index >= static_cast<Index>(b.V.size()))
    throw ConfigError("bundle has no excitation " + std::to_string(excitation_index));
  const Index n = b.n_dof;
  const CVector& V = b.V[static_cast<std::size_t>(excitation_index)];
  BoundResult r;
  r.metric = "absorbed_power";

  const auto chip = chip_indices(b);
  if (chip.empty()) {
    r.value = 0.0;
    r.I_opt = CVector::Zero(n);
    r.flags.push_back("empty_chip");
    return r;
  }

  std::vector<Index> c, u;
  for (Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (b.controllable_mask[k])
      c.push_back(i);
    else if (b.fixed_mask[k] || (*b.chip_mask)[k])
      u.push_back(i);
  }
  const CMatrix Zuu = b.Z(u, u);
  const Eigen::FullPivLU<CMatrix> lu(Zuu);
  if (!lu.isInvertible() || lu.rcond() < 1e-14) throw DomainError("uncontrollable block Z_uu is singular");

  Qcqp q;
  q.Ip = CVector::Zero(n);
  q.Ip(u) = lu.solve(CVector(V(u)));
  q.N = CMatrix::Zero(n, static_cast<Index>(c.size()));
  for (std::size_t j = 0; j < c.size(); ++j) {
    q.N(c[j], static_cast<Index>(j)) = 1.0;
    q.N(u, static_cast<Index>(j)) = -lu.solve(CVector(b.Z(u, c[j])));
  }
  q.A = CMatrix::Zero(n, n);
  q.A(chip, chip) = (*b.R_rho)(chip, chip);

  if (c.empty()) {
    r.value = 0.5 * form(q.Ip, q.A);
    r.I_opt = q.Ip;
    r.flags.push_back("forced_current");
    return r;
  }
  q.B = {CMatrix(b.R0 + *b.R_rho), b.X};
  q.b = {-0.5 * V, cplx(0.0, 0.5) * V};
  const DualSolution s = solve_dual(q, "absorbed-power bound");
  r.value = 0.5 * s.point.d;
  r.I_opt = s.point.I;
  r.multipliers = {s.lam(0), s.lam(1)};
  r.iterations = s.iterations;
  r.residuals = {s.point.rel(0), s.point.rel(1)};
  return r;
}

}  // namespace memdes
