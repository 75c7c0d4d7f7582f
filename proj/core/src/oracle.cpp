#include "memdes/oracle.hpp"

#include "memdes/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

namespace memdes {
namespace {

Index oracle_feed(const OperatorBundle& b, const ObjectiveSpec& spec) {
  if (spec.feed_index >= 0) return spec.feed_index;
  const CVector& v = b.V[static_cast<std::size_t>(spec.excitation_index)];
  std::vector<Index> nz;
  for (Index i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) != 0.0) nz.push_back(i);
  if (nz.size() == 1) return nz[0];
  for (Index i = 0; i < b.n_dof; ++i)
    if (b.fixed_mask[static_cast<std::size_t>(i)]) return i;
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (std::abs(v(i)) > std::abs(v(best))) best = i;
  return best;
}

double mismatch(const CVector& I, const CVector& V, Index feed, cplx z0) {
  if (std::abs(I(feed)) <= 1e-300) return 1.0;
  const cplx zin = V(feed) / I(feed);
  return std::norm((zin - z0) / (zin + z0));
}

double herm(const CVector& I, const CMatrix& M) { return I.dot(M * I).real(); }

// ---- Sampling machinery -------------------------------------------------
//
// Currents I = Ip + N t. Each constraint is IᴴBI + 2Re(bᴴI) = beta. The
// objective IᴴAI is minimized (Q) or maximized (gain, absorbed power).

struct Constraint {
  CMatrix B;
  CVector b;
  double beta = 0;
};

struct Manifold {
  CVector Ip;
  CMatrix N;
  std::vector<Constraint> cons;
  CMatrix A;
  bool maximize = true;
  /// Objective of a feasible current as reported to the caller.
  std::function<double(const CVector&)> report;
};

CVector current_of(const Manifold& m, const CVector& t) { return m.Ip + m.N * t; }

double residual_of(const Constraint& c, const CVector& I) {
  return herm(I, c.B) + 2.0 * std::real(c.b.dot(I)) - c.beta;
}

double scale_of(const Constraint& c, const CVector& I) {
  return std::abs(herm(I, c.B)) + 2.0 * std::abs(c.b.dot(I)) + std::abs(c.beta) + 1e-300;
}

// Wirtinger gradient ∂/∂t̄ of a constraint.
CVector cons_grad(const Manifold& m, const Constraint& c, const CVector& I) { return m.N.adjoint() * (c.B * I + c.b); }

// Gauss–Newton minimum-norm projection onto the constraint set.
bool project(const Manifold& m, CVector& t) {
  const std::size_t k = m.cons.size();
  for (int it = 0; it < 100; ++it) {
    const CVector I = current_of(m, t);
    Eigen::VectorXd r(static_cast<Index>(k));
    bool done = true;
    CMatrix G(t.size(), static_cast<Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
      r(static_cast<Index>(i)) = residual_of(m.cons[i], I);
      if (std::abs(r(static_cast<Index>(i))) > 1e-13 * scale_of(m.cons[i], I)) done = false;
      G.col(static_cast<Index>(i)) = cons_grad(m, m.cons[i], I);
    }
    if (done) return true;
    Eigen::MatrixXd M(static_cast<Index>(k), static_cast<Index>(k));
    for (Index i = 0; i < static_cast<Index>(k); ++i)
      for (Index j = 0; j < static_cast<Index>(k); ++j) M(i, j) = 2.0 * std::real(G.col(i).dot(G.col(j)));
    const Eigen::VectorXd mu = M.completeOrthogonalDecomposition().solve(-r);
    if (!mu.allFinite()) return false;
    t += G * mu.cast<cplx>();
  }
  return false;
}

double objective_of(const Manifold& m, const CVector& t) { return herm(current_of(m, t), m.A); }

Eigen::MatrixXd embed(const CMatrix& K) {
  const Index n = K.rows();
  Eigen::MatrixXd M(2 * n, 2 * n);
  M << K.real(), -K.imag(), K.imag(), K.real();
  return M;
}

Eigen::VectorXd split(const CVector& g) {
  Eigen::VectorXd x(2 * g.size());
  x << g.real(), g.imag();
  return x;
}

CVector join(const Eigen::VectorXd& x) {
  const Index n = x.size() / 2;
  return x.head(n).cast<cplx>() + cplx(0.0, 1.0) * x.tail(n).cast<cplx>();
}

// Local polish on the constraint manifold: Lagrange–Newton steps in real
// coordinates, with projected gradient steps when Newton fails to improve.
void polish(const Manifold& m, CVector& t) {
  if (t.size() == 0) return;
  const double dir = m.maximize ? -1.0 : 1.0;  // minimize dir·IᴴAI
  const CMatrix Aphi = dir * m.A;
  const Index k = static_cast<Index>(m.cons.size());
  const Index r = 2 * t.size();
  double cur = dir * objective_of(m, t);
  double step = 1e-2 * std::max(t.norm(), 1e-12);
  int stalls = 0;
  for (int it = 0; it < 300 && stalls < 2; ++it) {
    const CVector I = current_of(m, t);
    const Eigen::VectorXd g = 2.0 * split(m.N.adjoint() * (Aphi * I));
    Eigen::MatrixXd J(k, r);
    Eigen::VectorXd c(k);
    for (Index i = 0; i < k; ++i) {
      const Constraint& ci = m.cons[static_cast<std::size_t>(i)];
      J.row(i) = 2.0 * split(cons_grad(m, ci, I)).transpose();
      c(i) = residual_of(ci, I);
    }
    const Eigen::VectorXd lam = J.transpose().completeOrthogonalDecomposition().solve(g);
    CMatrix L = Aphi;
    for (Index i = 0; i < k; ++i) L -= lam(i) * m.cons[static_cast<std::size_t>(i)].B;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(r + k, r + k);
    K.topLeftCorner(r, r) = 2.0 * embed(m.N.adjoint() * L * m.N);
    K.topRightCorner(r, k) = J.transpose();
    K.bottomLeftCorner(k, r) = J;
    Eigen::VectorXd rhs(r + k);
    rhs << -g, -c;
    const Eigen::VectorXd sol = K.completeOrthogonalDecomposition().solve(rhs);

    const double tiny = 1e-15 * std::max(std::abs(cur), 1e-300);
    if (sol.allFinite()) {
      CVector trial = t + join(sol.head(r));
      if (project(m, trial)) {
        const double v = dir * objective_of(m, trial);
        if (v < cur - tiny) {
          cur = v;
          t = trial;
          stalls = 0;
          continue;
        }
      }
    }
    // Tangential gradient step.
    Eigen::VectorXd gt = g - J.transpose() * (J * J.transpose()).completeOrthogonalDecomposition().solve(J * g);
    const double gn = gt.norm();
    if (!(gn > 0.0)) break;
    bool moved = false;
    for (int ls = 0; ls < 20 && !moved; ++ls, step *= 0.5) {
      CVector trial = t - join((step / gn) * gt);
      if (!project(m, trial)) continue;
      const double v = dir * objective_of(m, trial);
      if (v < cur - tiny) {
        cur = v;
        t = trial;
        moved = true;
      }
    }
    if (moved) {
      step *= 4.0;
      stalls = 0;
    } else {
      ++stalls;
      step = 1e-2 * std::max(t.norm(), 1e-12);
    }
  }
}

// Random feasible point: scale a random direction onto the first constraint, then project.
bool random_feasible(const Manifold& m, std::mt19937_64& rng, CVector& t) {
  std::normal_distribution<double> nd(0.0, 1.0);
  const Index n = m.N.cols();
  CVector d(n);
  for (Index i = 0; i < n; ++i) d(i) = cplx(nd(rng), nd(rng));
  const Constraint& c = m.cons.front();
  // c(α d) = a α² + bcoef α + c0 with I = Ip + α N d.
  const CVector Nd = m.N * d;
  const double a = herm(Nd, c.B);
  const double bcoef = 2.0 * std::real(m.Ip.dot(c.B * Nd)) + 2.0 * std::real(c.b.dot(Nd));
  const double c0 = residual_of(c, m.Ip);
  const double disc = bcoef * bcoef - 4.0 * a * c0;
  double alpha = 1.0;
  if (std::abs(a) > 1e-300 && disc >= 0.0) alpha = (-bcoef + std::sqrt(disc)) / (2.0 * a);
  t = alpha * d;
  return project(m, t);
}

SampledExtremum run_sampling(const Manifold& m, Index n_samples, const SampleOptions& opt,
                             const std::function<bool(std::mt19937_64&, CVector&)>& start) {
  SampledExtremum out;
  const double dir = m.maximize ? 1.0 : -1.0;
  if (m.N.cols() == 0) {
    out.current = m.Ip;
    out.value = m.report(m.Ip);
    out.samples = 1;
    return out;
  }
  std::mt19937_64 rng(opt.seed);
  std::vector<std::pair<double, CVector>> pool;
  for (Index s = 0; s < n_samples; ++s) {
    CVector t;
    if (!start(rng, t)) continue;
    ++out.samples;
    pool.emplace_back(dir * objective_of(m, t), std::move(t));
  }
  if (pool.empty()) throw SolverError("sampling oracle found no feasible point");
  const auto keep = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(std::max<Index>(opt.polish_starts, 1)));
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep), pool.end(),
                    [](const auto& x, const auto& y) { return x.first > y.first; });
  double best = -kInf;
  for (std::size_t i = 0; i < keep; ++i) {
    CVector t = pool[i].second;
    polish(m, t);
    const double v = dir * objective_of(m, t);
    if (v > best) {
      best = v;
      out.current = current_of(m, t);
    }
  }
  out.value = m.report(out.current);
  return out;
}

// Orthonormal basis of the complement of span{v}.
CMatrix complement_basis(const CVector& v) {
  const Index n = v.size();
  Eigen::JacobiSVD<CMatrix> svd(CMatrix(v.adjoint()), Eigen::ComputeFullV);
  return svd.matrixV().rightCols(n - 1);
}

}  // namespace

DenseSolution dense_solve(const OperatorBundle& b, const std::vector<Index>& support, Index excitation_index) {
  DenseSolution out;
  out.support = support;
  std::sort(out.support.begin(), out.support.end());
  out.full = CVector::Zero(b.n_dof);
  if (out.support.empty()) return out;
  const Index s = static_cast<Index>(out.support.size());
  CMatrix Zs(s, s);
  CVector vs(s);
  const CVector& V = b.V.at(static_cast<std::size_t>(excitation_index));
  for (Index i = 0; i < s; ++i) {
    vs(i) = V(out.support[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < s; ++j) Zs(i, j) = b.Z(out.support[static_cast<std::size_t>(i)], out.support[static_cast<std::size_t>(j)]);
  }
  Eigen::FullPivLU<CMatrix> lu(Zs);
  const double anorm = Zs.cwiseAbs().colwise().sum().maxCoeff();
  const double inorm = lu.inverse().cwiseAbs().colwise().sum().maxCoeff();
  if (!lu.isInvertible() || !(anorm * inorm < 1e14)) return out;
  out.feasible = true;
  out.current = lu.solve(vs);
  for (Index i = 0; i < s; ++i) out.full(out.support[static_cast<std::size_t>(i)]) = out.current(i);
  return out;
}

DenseSolution dense_solve(const OperatorBundle& b, const Word& word, Index excitation_index) {
  return dense_solve(b, materialize(word, b), excitation_index);
}

double oracle_objective(const OperatorBundle& b, const ObjectiveSpec& spec, const CVector& I) {
  const CVector& V = b.V.at(static_cast<std::size_t>(spec.excitation_index));
  const int sign = effective_sign(spec);
  switch (spec.kind) {
    case ObjectiveKind::Q:
    case ObjectiveKind::QMatched: {
      if (!b.W) throw ConfigError("Q needs W");
      const double r = herm(I, b.R0);
      if (r <= 1e-300) return kInf;
      double q = 0.5 * herm(I, *b.W) / r + 0.5 * std::abs(herm(I, b.X)) / r;
      if (spec.kind == ObjectiveKind::QMatched)
        q = q / spec.q_lb_ref * (1.0 + spec.zeta * mismatch(I, V, oracle_feed(b, spec), spec.z0));
      return sign * q;
    }
    case ObjectiveKind::RealizedGain: {
      CMatrix R = b.R0;
      if (b.R_rho) R += *b.R_rho;
      const double p = herm(I, R);
      if (p <= 1e-300) return kInf;
      const cplx fi = (b.F.at(static_cast<std::size_t>(spec.field_index)) * I)(0);
      return sign * std::norm(fi) / p * (1.0 - mismatch(I, V, oracle_feed(b, spec), spec.z0));
    }
    case ObjectiveKind::AbsorbedPower: {
      if (!b.R_rho) throw ConfigError("absorbed power needs R_rho");
      CMatrix D = CMatrix::Zero(b.n_dof, b.n_dof);
      if (b.chip_mask)
        for (Index i = 0; i < b.n_dof; ++i)
          if ((*b.chip_mask)[static_cast<std::size_t>(i)]) D(i, i) = 1.0;
      return sign * 0.5 * herm(I, D.adjoint() * *b.R_rho * D);
    }
  }
  return kInf;
}

double oracle_word_value(const OperatorBundle& b, const ObjectiveSpec& spec, const Word& word) {
  const DenseSolution s = dense_solve(b, word, spec.excitation_index);
  if (!s.feasible) return kInf;
  return oracle_objective(b, spec, s.full);
}

Word word_from_code(std::uint64_t code, Index n_bits) {
  Word w = Word::zeros(n_bits);
  for (Index i = 0; i < n_bits; ++i) w.bits[static_cast<std::size_t>(i)] = (code >> (n_bits - 1 - i)) & 1u;
  return w;
}

EnumerationResult enumerate_optimum(const OperatorBundle& b, const ObjectiveSpec& spec) {
  const Index n = n_opt(b);
  if (n > 20) throw DomainError("exhaustive enumeration is limited to N_opt <= 20");
  EnumerationResult out;
  const std::uint64_t count = std::uint64_t{1} << n;
  out.values.resize(count);
  for (std::uint64_t code = 0; code < count; ++code) {
    const Word w = word_from_code(code, n);
    const double f = oracle_word_value(b, spec, w);
    out.values[code] = f;
    if (code == 0 || f < out.best_f) {
      out.best_f = f;
      out.best_word = w;
    }
  }
  return out;
}

SampledExtremum sample_feasible_bound_oracle(const OperatorBundle& b, BoundProblem problem, Index n_samples,
                                             const SampleOptions& opt) {
  if (b.n_dof > 16) throw DomainError("sampling oracle is limited to N <= 16");
  Manifold m;
  const Index n = b.n_dof;
  std::function<bool(std::mt19937_64&, CVector&)> start = [&](std::mt19937_64& rng, CVector& t) {
    return random_feasible(m, rng, t);
  };

  switch (problem) {
    case BoundProblem::Q:
    case BoundProblem::QTm: {
      if (!b.W) throw ConfigError("Q problem needs W");
      CMatrix R = b.R0;
      if (problem == BoundProblem::QTm) {
        if (!b.tm_projector) throw ConfigError("TM problem needs a projector");
        R = b.tm_projector->adjoint() * *b.tm_projector;
      }
      // Tuned Q ½(IᴴWI + |IᴴXI|)/IᴴRI over all currents: the resonant
      // manifold plus the two detuned branches where |IᴴXI| = ±IᴴXI.
      const auto tuned = [&, R](const CVector& I) {
        return 0.5 * (herm(I, *b.W) + std::abs(herm(I, b.X))) / herm(I, R);
      };
      SampledExtremum best;
      for (const double side : {1.0, -1.0}) {
        Manifold d;
        d.Ip = CVector::Zero(n);
        d.N = CMatrix::Identity(n, n);
        d.A = *b.W + side * b.X;
        d.maximize = false;
        d.cons = {{R, CVector::Zero(n), 1.0}};
        d.report = tuned;
        const SampledExtremum e = run_sampling(d, n_samples, opt, [&d](std::mt19937_64& rng, CVector& t) {
          return random_feasible(d, rng, t);
        });
        best.samples += e.samples;
        if (!(e.value >= best.value)) {
          best.value = e.value;
          best.current = e.current;
        }
      }
      m.Ip = CVector::Zero(n);
      m.N = CMatrix::Identity(n, n);
      m.A = *b.W;
      m.maximize = false;
      m.cons = {{R, CVector::Zero(n), 1.0}, {b.X, CVector::Zero(n), 0.0}};
      m.report = tuned;
      // Split a random current over the positive and negative eigenspaces of
      // X and rescale one part so IᴴXI vanishes exactly.
      Eigen::SelfAdjointEigenSolver<CMatrix> ex(b.X);
      const CMatrix& E = ex.eigenvectors();
      const Eigen::VectorXd& lam = ex.eigenvalues();
      start = [&, E, lam, R](std::mt19937_64& rng, CVector& t) {
        std::normal_distribution<double> nd(0.0, 1.0);
        CVector c(n);
        for (Index i = 0; i < n; ++i) c(i) = cplx(nd(rng), nd(rng));
        double pos = 0, neg = 0;
        for (Index i = 0; i < n; ++i) (lam(i) > 0 ? pos : neg) += lam(i) * std::norm(c(i));
        if (pos > 0.0 && neg < 0.0) {
          const double s = std::sqrt(-neg / pos);
          for (Index i = 0; i < n; ++i)
            if (lam(i) > 0) c(i) *= s;
        } else {
          for (Index i = 0; i < n; ++i)
            if (lam(i) != 0.0) c(i) = 0.0;
          if (c.norm() == 0.0) return false;
        }
        t = E * c;
        const double r = herm(t, R);
        if (!(r > 0.0)) return false;
        t /= std::sqrt(r);
        return project(m, t);
      };
      SampledExtremum e = run_sampling(m, n_samples, opt, start);
      e.samples += best.samples;
      if (best.value < e.value) {
        e.value = best.value;
        e.current = best.current;
      }
      return e;
    }
    case BoundProblem::RealizedGain: {
      const CVector& V = b.V.at(static_cast<std::size_t>(opt.excitation_index));
      const CRow& F = b.F.at(static_cast<std::size_t>(opt.field_index));
      CMatrix R = b.R0;
      if (b.R_rho) R += *b.R_rho;
      m.A = F.adjoint() * F;
      m.maximize = true;
      if (opt.unmatched) {
        m.Ip = CVector::Zero(n);
        m.N = CMatrix::Identity(n, n);
        m.cons = {{R, CVector::Zero(n), 1.0}};
        m.report = [&, R](const CVector& I) { return std::norm((F * I)(0)) / herm(I, R); };
        break;
      }
      if (n == 1) {
        m.Ip = b.Z.partialPivLu().solve(V);
        m.N.resize(1, 0);
      } else {
        m.Ip = V / (opt.z0 * V.squaredNorm());
        m.N = complement_basis(V);
      }
      m.cons = {{R, -0.5 * V, 0.0}, {b.X, cplx(0.0, 0.5) * V, 0.0}};
      const Index feed = opt.feed_index >= 0 ? opt.feed_index : [&] {
        ObjectiveSpec s;
        s.excitation_index = opt.excitation_index;
        return oracle_feed(b, s);
      }();
      m.report = [&, R, feed](const CVector& I) {
        return std::norm((F * I)(0)) / herm(I, R) * (1.0 - mismatch(I, V, feed, opt.z0));
      };
      break;
    }
    case BoundProblem::AbsorbedPower: {
      if (!b.R_rho || !b.chip_mask) throw ConfigError("absorbed power needs R_rho and a chip mask");
      const CVector& V = b.V.at(static_cast<std::size_t>(opt.excitation_index));
      std::vector<Index> c, u;
      for (Index i = 0; i < n; ++i) {
        if (b.controllable_mask[static_cast<std::size_t>(i)])
          c.push_back(i);
        else if (b.fixed_mask[static_cast<std::size_t>(i)] || (*b.chip_mask)[static_cast<std::size_t>(i)])
          u.push_back(i);
      }
      CMatrix D = CMatrix::Zero(n, n);
      for (Index i = 0; i < n; ++i)
        if ((*b.chip_mask)[static_cast<std::size_t>(i)]) D(i, i) = 1.0;
      m.A = D * *b.R_rho * D;
      m.maximize = true;
      const CMatrix Zuu = b.Z(u, u);
      const Eigen::FullPivLU<CMatrix> lu(Zuu);
      m.Ip = CVector::Zero(n);
      m.N = CMatrix::Zero(n, static_cast<Index>(c.size()));
      if (!u.empty()) m.Ip(u) = lu.solve(CVector(V(u)));
      for (std::size_t j = 0; j < c.size(); ++j) {
        m.N(c[j], static_cast<Index>(j)) = 1.0;
        if (!u.empty()) m.N(u, static_cast<Index>(j)) = -lu.solve(CVector(b.Z(u, c[j])));
      }
      m.cons = {{b.R0 + *b.R_rho, -0.5 * V, 0.0}, {b.X, cplx(0.0, 0.5) * V, 0.0}};
      // Currents live on c ∪ u only; the other DOF stay zero through N and Ip.
      m.report = [&](const CVector& I) { return 0.5 * herm(I, m.A); };
      break;
    }
  }
  return run_sampling(m, n_samples, opt, start);
}

}  // namespace memdes
