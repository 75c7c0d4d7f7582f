#include "memdes/reanalysis.hpp"

#include "memdes/errors.hpp"

#include <algorithm>
#include <stdexcept>

namespace memdes {
namespace {

void erase_row(CMatrix& m, Index p) {
  const Index r = m.rows();
  if (p + 1 < r) m.middleRows(p, r - p - 1) = m.bottomRows(r - p - 1).eval();
  m.conservativeResize(r - 1, Eigen::NoChange);
}

void erase_col(CMatrix& m, Index p) {
  const Index c = m.cols();
  if (p + 1 < c) m.middleCols(p, c - p - 1) = m.rightCols(c - p - 1).eval();
  m.conservativeResize(Eigen::NoChange, c - 1);
}

void erase_entry(CVector& v, Index p) {
  const Index n = v.size();
  if (p + 1 < n) v.segment(p, n - p - 1) = v.tail(n - p - 1).eval();
  v.conservativeResize(n - 1);
}

void erase_entry(CRow& v, Index p) {
  const Index n = v.size();
  if (p + 1 < n) v.segment(p, n - p - 1) = v.tail(n - p - 1).eval();
  v.conservativeResize(n - 1);
}

// Moves the last row of m to position q.
void rotate_last_row(CMatrix& m, Index q) {
  const Index r = m.rows();
  if (q == r - 1) return;
  const CRow last = m.row(r - 1);
  m.middleRows(q + 1, r - 1 - q) = m.middleRows(q, r - 1 - q).eval();
  m.row(q) = last;
}

void rotate_last_col(CMatrix& m, Index q) {
  const Index c = m.cols();
  if (q == c - 1) return;
  const CVector last = m.col(c - 1);
  m.middleCols(q + 1, c - 1 - q) = m.middleCols(q, c - 1 - q).eval();
  m.col(q) = last;
}

template <typename V>
void rotate_last_entry(V& v, Index q) {
  const Index n = v.size();
  if (q == n - 1) return;
  const cplx last = v(n - 1);
  v.segment(q + 1, n - 1 - q) = v.segment(q, n - 1 - q).eval();
  v(q) = last;
}

}  // namespace

std::string to_string(MoveKind kind) { return kind == MoveKind::Remove ? "remove" : "add"; }

StructureState::StructureState(const Objective& objective, const Word& word, int refactor_period)
    : StructureState(objective, materialize(word, objective.bundle()), refactor_period) {}

StructureState::StructureState(const Objective& objective, std::vector<Index> support, int refactor_period)
    : objective_(&objective), bundle_(&objective.bundle()), refactor_period_(refactor_period), S_(std::move(support)) {
  const Index n = bundle_->n_dof;
  std::sort(S_.begin(), S_.end());
  S_.erase(std::unique(S_.begin(), S_.end()), S_.end());
  pos_.assign(static_cast<std::size_t>(n), -1);
  for (std::size_t i = 0; i < S_.size(); ++i) {
    if (S_[i] < 0 || S_[i] >= n) throw ConfigError("support index out of range");
    pos_[static_cast<std::size_t>(S_[i])] = static_cast<Index>(i);
  }
  zdiag_max_ = bundle_->Z.diagonal().cwiseAbs().maxCoeff();
  factorize(true);
}

void StructureState::factorize(bool strict) {
  const OperatorBundle& b = *bundle_;
  const Objective& obj = *objective_;
  const Index s = static_cast<Index>(S_.size());
  const Index n = b.n_dof;
  P_.assign(static_cast<std::size_t>(obj.n_quad()), CMatrix());
  Q_.assign(static_cast<std::size_t>(obj.n_quad()), CMatrix());
  if (s == 0) {
    Y_.resize(0, 0);
    T_.resize(0, n);
    I_.resize(0);
    for (int k = 0; k < obj.n_quad(); ++k) {
      P_[static_cast<std::size_t>(k)].resize(0, 0);
      Q_[static_cast<std::size_t>(k)].resize(0, n);
    }
    FY_.resize(0);
    FT_ = CRow::Zero(n);
    refresh_value();
    return;
  }
  const CMatrix Zss = b.Z(S_, S_);
  Eigen::PartialPivLU<CMatrix> lu(Zss);
  // rcond() is meaningless once a pivot is exactly zero, so test that first.
  const bool zero_pivot = !(lu.matrixLU().diagonal().cwiseAbs().minCoeff() > 0.0);
  const double rc = zero_pivot ? 0.0 : lu.rcond();
  if (strict && !(rc * kConditionLimit > 1.0))
    throw InfeasibleError("reduced impedance matrix is singular (1/rcond = " + std::to_string(1.0 / rc) + ")");
  Y_ = lu.inverse();
  T_ = Y_ * b.Z(S_, Eigen::all);
  I_ = Y_ * obj.excitation()(S_);
  for (int k = 0; k < obj.n_quad(); ++k) {
    const CMatrix Mss = obj.quad_matrix(k)(S_, S_);
    P_[static_cast<std::size_t>(k)] = Mss * Y_;
    Q_[static_cast<std::size_t>(k)] = Mss * T_;
  }
  if (obj.has_linear()) {
    const CRow Fs = obj.linear_row()(S_);
    FY_ = Fs * Y_;
    FT_ = Fs * T_;
  }
  ++diag_.refactorizations;
  refresh_value();
}

void StructureState::refactor() { factorize(false); }

void StructureState::refresh_value() {
  forms_ = objective_->forms(I_, S_);
  f_ = objective_->value(forms_);
}

Word StructureState::word() const { return word_from_support(S_, *bundle_); }

CVector StructureState::full_current() const {
  CVector out = CVector::Zero(bundle_->n_dof);
  out(S_) = I_;
  return out;
}

std::vector<Index> StructureState::removal_set() const {
  std::vector<Index> out;
  for (Index i : S_)
    if (!bundle_->fixed_mask[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

std::vector<Index> StructureState::addition_set() const {
  std::vector<Index> out;
  for (Index i = 0; i < bundle_->n_dof; ++i)
    if (bundle_->controllable_mask[static_cast<std::size_t>(i)] && pos_[static_cast<std::size_t>(i)] < 0)
      out.push_back(i);
  return out;
}

bool StructureState::removal_feasible(Index p) const {
  const double ymax = Y_.diagonal().cwiseAbs().maxCoeff();
  return std::abs(Y_(p, p)) > kPivotTol * ymax;
}

bool StructureState::addition_feasible(const cplx& s) const { return std::abs(s) > kPivotTol * zdiag_max_; }

double StructureState::residual() const {
  if (S_.empty()) return 0.0;
  const CVector vs = objective_->excitation()(S_);
  const double r = (bundle_->Z(S_, S_) * I_ - vs).norm();
  const double v = vs.norm();
  return v > 0.0 ? r / v : r;
}

std::vector<CandidateCurrent> StructureState::removal_currents() {
  std::vector<CandidateCurrent> out;
  for (Index dof : removal_set()) {
    const Index p = pos_[static_cast<std::size_t>(dof)];
    CandidateCurrent c;
    c.move = {MoveKind::Remove, dof};
    c.feasible = removal_feasible(p);
    if (c.feasible) {
      CVector J = I_ - Y_.col(p) * (I_(p) / Y_(p, p));
      erase_entry(J, p);
      c.current = std::move(J);
      c.support = S_;
      c.support.erase(c.support.begin() + p);
    }
    out.push_back(std::move(c));
  }
  counters_.removals_evaluated += out.size();
  return out;
}

std::vector<CandidateCurrent> StructureState::addition_currents() {
  const OperatorBundle& b = *bundle_;
  const CVector& V = objective_->excitation();
  std::vector<CandidateCurrent> out;
  for (Index m : addition_set()) {
    CandidateCurrent c;
    c.move = {MoveKind::Add, m};
    const CVector u = T_.col(m);
    const CRow zr = b.Z(m, S_);
    const cplx s = b.Z(m, m) - (zr * u)(0);
    c.feasible = addition_feasible(s);
    if (c.feasible) {
      const cplx im = (V(m) - (zr * I_)(0)) / s;
      const auto q = static_cast<Index>(std::lower_bound(S_.begin(), S_.end(), m) - S_.begin());
      CVector J(I_.size() + 1);
      J.head(I_.size()) = I_ - u * im;
      J(I_.size()) = im;
      rotate_last_entry(J, q);
      c.current = std::move(J);
      c.support = S_;
      c.support.insert(c.support.begin() + q, m);
    }
    out.push_back(std::move(c));
  }
  counters_.additions_evaluated += out.size();
  return out;
}

std::vector<Candidate> StructureState::evaluate_candidates() {
  const OperatorBundle& b = *bundle_;
  const Objective& obj = *objective_;
  const CVector& V = obj.excitation();
  const int nq = obj.n_quad();
  const Index feed = obj.feed_index();
  const Index pf = feed >= 0 ? pos_[static_cast<std::size_t>(feed)] : -1;
  const std::vector<Index> rem = removal_set();
  const std::vector<Index> add = addition_set();
  std::vector<Candidate> out;
  out.reserve(rem.size() + add.size());

  auto score = [&](Candidate& c, const FormValues& v) {
    c.f = obj.value(v);
    if (c.f == kInf)
      c.tau = kInf;
    else
      c.tau = c.f - f_;
  };

  // Removals: J = I − c·Y[:,p], c = I_p / Y_pp.
  if (!rem.empty()) {
    std::vector<CRow> a(static_cast<std::size_t>(nq)), bb(static_cast<std::size_t>(nq));
    for (int k = 0; k < nq; ++k) {
      const CMatrix& P = P_[static_cast<std::size_t>(k)];
      a[static_cast<std::size_t>(k)] = I_.adjoint() * P;
      bb[static_cast<std::size_t>(k)] = Y_.conjugate().cwiseProduct(P).colwise().sum();
    }
    const cplx fi = forms_.linear;
    for (Index dof : rem) {
      const Index p = pos_[static_cast<std::size_t>(dof)];
      Candidate c;
      c.move = {MoveKind::Remove, dof};
      c.feasible = removal_feasible(p);
      if (c.feasible) {
        const cplx coef = I_(p) / Y_(p, p);
        FormValues v;
        for (int k = 0; k < nq; ++k) {
          const auto kk = static_cast<std::size_t>(k);
          v.quad[kk] = forms_.quad[kk] - 2.0 * std::real(coef * a[kk](p)) + std::norm(coef) * std::real(bb[kk](p));
        }
        if (obj.has_linear()) v.linear = fi - coef * FY_(p);
        if (pf >= 0 && pf != p) v.feed_current = I_(pf) - coef * Y_(pf, p);
        score(c, v);
      }
      out.push_back(c);
    }
    counters_.removals_evaluated += rem.size();
  }

  // Additions: J_S = I − u·i, J_m = i, u = T[:,m], i = (V_m − Z[m,S]I)/s.
  if (!add.empty()) {
    const CMatrix Zas = b.Z(Eigen::all, S_);
    const CVector zI = Zas * I_;
    const CRow zu = Zas.transpose().cwiseProduct(T_).colwise().sum();
    std::vector<CRow> e(static_cast<std::size_t>(nq)), g(static_cast<std::size_t>(nq)), l(static_cast<std::size_t>(nq));
    std::vector<CVector> h(static_cast<std::size_t>(nq));
    for (int k = 0; k < nq; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const CMatrix& Q = Q_[kk];
      const CMatrix Mas = obj.quad_matrix(k)(Eigen::all, S_);
      e[kk] = I_.adjoint() * Q;
      g[kk] = T_.conjugate().cwiseProduct(Q).colwise().sum();
      h[kk] = Mas * I_;
      l[kk] = Mas.transpose().cwiseProduct(T_).colwise().sum();
    }
    const cplx fi = forms_.linear;
    for (Index m : add) {
      Candidate c;
      c.move = {MoveKind::Add, m};
      const cplx s = b.Z(m, m) - zu(m);
      c.feasible = addition_feasible(s);
      if (c.feasible) {
        const cplx im = (V(m) - zI(m)) / s;
        FormValues v;
        for (int k = 0; k < nq; ++k) {
          const auto kk = static_cast<std::size_t>(k);
          const double mmm = std::real(obj.quad_matrix(k)(m, m));
          v.quad[kk] = forms_.quad[kk] - 2.0 * std::real(im * e[kk](m)) + std::norm(im) * std::real(g[kk](m)) +
                       2.0 * std::real(std::conj(im) * (h[kk](m) - im * l[kk](m))) + mmm * std::norm(im);
        }
        if (obj.has_linear()) v.linear = fi - im * FT_(m) + obj.linear_row()(m) * im;
        if (m == feed)
          v.feed_current = im;
        else if (pf >= 0)
          v.feed_current = I_(pf) - T_(pf, m) * im;
        score(c, v);
      }
      out.push_back(c);
    }
    counters_.additions_evaluated += add.size();
  }

  std::sort(out.begin(), out.end(), [](const Candidate& x, const Candidate& y) { return x.move.dof < y.move.dof; });
  return out;
}

void StructureState::apply_removal(Index p) {
  const Objective& obj = *objective_;
  const cplx d = Y_(p, p);
  const CVector y = Y_.col(p);
  const CRow yr = Y_.row(p);
  const CRow tr = T_.row(p);
  const cplx ip = I_(p);

  for (int k = 0; k < obj.n_quad(); ++k) {
    CMatrix& P = P_[static_cast<std::size_t>(k)];
    CMatrix& Q = Q_[static_cast<std::size_t>(k)];
    const CVector pc = P.col(p) / d;
    P.noalias() -= pc * yr;
    Q.noalias() -= pc * tr;
    erase_row(P, p);
    erase_col(P, p);
    erase_row(Q, p);
  }
  if (obj.has_linear()) {
    const cplx fp = FY_(p) / d;
    FY_ -= fp * yr;
    FT_ -= fp * tr;
    erase_entry(FY_, p);
  }
  Y_.noalias() -= (y / d) * yr;
  T_.noalias() -= (y / d) * tr;
  I_ -= y * (ip / d);
  erase_row(Y_, p);
  erase_col(Y_, p);
  erase_row(T_, p);
  erase_entry(I_, p);
  S_.erase(S_.begin() + p);
}

void StructureState::apply_addition(Index m) {
  const OperatorBundle& b = *bundle_;
  const Objective& obj = *objective_;
  const CVector& V = obj.excitation();
  const Index s = static_cast<Index>(S_.size());

  const CRow c = b.Z(m, S_);
  const CVector u = T_.col(m);
  const CRow w = c * Y_;
  const cplx sc = b.Z(m, m) - (c * u)(0);
  const cplx im = (V(m) - (c * I_)(0)) / sc;
  const CRow r = (b.Z.row(m) - c * T_) / sc;
  const auto q = static_cast<Index>(std::lower_bound(S_.begin(), S_.end(), m) - S_.begin());
  std::vector<Index> Splus = S_;
  Splus.push_back(m);

  for (int k = 0; k < obj.n_quad(); ++k) {
    const CMatrix& M = obj.quad_matrix(k);
    CMatrix& P = P_[static_cast<std::size_t>(k)];
    CMatrix& Q = Q_[static_cast<std::size_t>(k)];
    const CVector diffc = M(S_, m) - Q.col(m);
    CMatrix Pn(s + 1, s + 1);
    Pn.topLeftCorner(s, s) = P - diffc * (w / sc);
    Pn.block(0, s, s, 1) = diffc / sc;
    CMatrix Qn(s + 1, b.n_dof);
    Qn.topRows(s) = Q + diffc * r;
    P = std::move(Pn);
    Q = std::move(Qn);
    // The new row needs the updated Y and T; filled in below.
  }

  CMatrix Yn(s + 1, s + 1);
  Yn.topLeftCorner(s, s) = Y_ + u * (w / sc);
  Yn.block(0, s, s, 1) = -u / sc;
  Yn.block(s, 0, 1, s) = -w / sc;
  Yn(s, s) = 1.0 / sc;
  CMatrix Tn(s + 1, b.n_dof);
  Tn.topRows(s) = T_ - u * r;
  Tn.row(s) = r;
  CVector In(s + 1);
  In.head(s) = I_ - u * im;
  In(s) = im;

  for (int k = 0; k < obj.n_quad(); ++k) {
    const CRow mrow = obj.quad_matrix(k)(m, Splus);
    P_[static_cast<std::size_t>(k)].row(s) = mrow * Yn;
    Q_[static_cast<std::size_t>(k)].row(s) = mrow * Tn;
  }
  if (obj.has_linear()) {
    const cplx fm = obj.linear_row()(m);
    const cplx delta = fm - FT_(m);
    CRow FYn(s + 1);
    FYn.head(s) = FY_ - delta * (w / sc);
    FYn(s) = delta / sc;
    FT_ += delta * r;
    FY_ = std::move(FYn);
  }
  Y_ = std::move(Yn);
  T_ = std::move(Tn);
  I_ = std::move(In);

  // Move the appended DOF to its sorted position.
  rotate_last_row(Y_, q);
  rotate_last_col(Y_, q);
  rotate_last_row(T_, q);
  rotate_last_entry(I_, q);
  for (int k = 0; k < obj.n_quad(); ++k) {
    rotate_last_row(P_[static_cast<std::size_t>(k)], q);
    rotate_last_col(P_[static_cast<std::size_t>(k)], q);
    rotate_last_row(Q_[static_cast<std::size_t>(k)], q);
  }
  if (obj.has_linear()) rotate_last_entry(FY_, q);
  S_.insert(S_.begin() + q, m);
}

void StructureState::commit(const Move& move) {
  const Index n = bundle_->n_dof;
  if (move.dof < 0 || move.dof >= n) throw std::logic_error("move DOF out of range");
  const auto k = static_cast<std::size_t>(move.dof);
  if (move.kind == MoveKind::Remove) {
    if (pos_[k] < 0 || bundle_->fixed_mask[k]) throw std::logic_error("removal of a DOF that is not removable");
    const Index p = pos_[k];
    if (!removal_feasible(p)) throw std::logic_error("committing an infeasible removal");
    apply_removal(p);
  } else {
    if (pos_[k] >= 0 || !bundle_->controllable_mask[k]) throw std::logic_error("addition of a DOF that is not addable");
    const cplx s = bundle_->Z(move.dof, move.dof) - (bundle_->Z(move.dof, S_) * T_.col(move.dof))(0);
    if (!addition_feasible(s)) throw std::logic_error("committing an infeasible addition");
    apply_addition(move.dof);
  }
  std::fill(pos_.begin(), pos_.end(), -1);
  for (std::size_t i = 0; i < S_.size(); ++i) pos_[static_cast<std::size_t>(S_[i])] = static_cast<Index>(i);
  ++diag_.commits;

  if (S_.empty()) {
    factorize(false);
    return;
  }
  diag_.last_residual = residual();
  if (refactor_period_ > 0 && diag_.commits % static_cast<std::uint64_t>(refactor_period_) == 0) {
    factorize(false);
  } else if (diag_.last_residual > kResidualTol) {
    ++diag_.residual_refactorizations;
    factorize(false);
  } else {
    refresh_value();
  }
}

}  // namespace memdes
