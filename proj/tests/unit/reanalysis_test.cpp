#include "helpers.hpp"
#include "memdes/errors.hpp"
#include "memdes/oracle.hpp"
#include "memdes/reanalysis.hpp"

#include <gtest/gtest.h>

using namespace memdes;

namespace {

ObjectiveSpec q_spec() { return {}; }

// Diagonal Z = diag(1, 2), V = (1, 1), DOF 0 fixed.
OperatorBundle diag_bundle() {
  CMatrix R = CMatrix::Zero(2, 2);
  R(0, 0) = 1;
  R(1, 1) = 2;
  auto b = test::make_bundle(R, CMatrix::Zero(2, 2), CVector::Ones(2), {1, 0});
  b.W = R;
  return b;
}

void expect_candidates_match_dense(const OperatorBundle& b, StructureState& st, double tol) {
  for (const auto& list : {st.removal_currents(), st.addition_currents()}) {
    for (const auto& c : list) {
      const auto d = dense_solve(b, c.support);
      ASSERT_EQ(c.feasible, d.feasible);
      if (c.feasible) EXPECT_LE(test::rel_err(c.current, d.current), tol);
    }
  }
}

}  // namespace

TEST(StructureState, ScalarSolve) {
  auto b = test::make_bundle(CMatrix::Constant(1, 1, 2.0), CMatrix::Zero(1, 1), CVector::Ones(1), {1});
  b.W = b.R0;
  const Objective obj(b, q_spec());
  StructureState st(obj, Word::zeros(0));
  EXPECT_NEAR(st.I()(0).real(), 0.5, 1e-15);
}

TEST(StructureState, InitialResidualAndDenseAgreement) {
  const auto b8 = test::random_bundle(8, 2);
  const Objective o8(b8, q_spec());
  StructureState s8(o8, Word::ones(n_opt(b8)));
  EXPECT_LE(s8.residual(), 1e-12);

  const auto b = test::random_bundle(10, 7);
  const Objective obj(b, q_spec());
  StructureState st(obj, Word::ones(n_opt(b)));
  EXPECT_LE(test::rel_err(st.full_current(), dense_solve(b, Word::ones(n_opt(b))).full), 1e-12);
}

TEST(StructureState, DiagonalRemoval) {
  const auto b = diag_bundle();
  const Objective obj(b, q_spec());
  StructureState st(obj, Word::ones(1));
  const auto r = st.removal_currents();
  ASSERT_EQ(r.size(), 1u);
  EXPECT_TRUE(r[0].feasible);
  EXPECT_EQ(r[0].support, (std::vector<Index>{0}));
  EXPECT_NEAR(std::abs(r[0].current(0) - 1.0), 0.0, 1e-15);
}

TEST(StructureState, FeedNeverOffered) {
  const auto b = test::random_bundle(7, 1);
  const Objective obj(b, q_spec());
  StructureState st(obj, Word::ones(n_opt(b)));
  for (Index n : st.removal_set()) EXPECT_EQ(b.fixed_mask[static_cast<std::size_t>(n)], 0);
  for (const auto& c : st.evaluate_candidates()) EXPECT_NE(c.move.dof, 0);
}

TEST(StructureState, UnexcitedDecoupledAdditionIsZero) {
  CMatrix R = CMatrix::Identity(3, 3);
  R(0, 1) = R(1, 0) = 0.2;
  CVector V = CVector::Zero(3);
  V(0) = 1;
  auto b = test::make_bundle(R, CMatrix::Zero(3, 3), V, {1, 0, 0});
  b.W = R;
  const Objective obj(b, q_spec());
  StructureState st(obj, Word::from_string("10"));
  for (const auto& c : st.addition_currents()) {
    ASSERT_EQ(c.move.dof, 2);
    EXPECT_EQ(std::abs(c.current(2)), 0.0);
  }
}

TEST(StructureState, CandidatesMatchDenseSolve) {
  std::mt19937_64 rng(12);
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto b = test::random_bundle(12, s);
    const Objective obj(b, q_spec());
    StructureState st(obj, test::random_word(n_opt(b), rng));
    expect_candidates_match_dense(b, st, 1e-10);
  }
}

TEST(StructureState, AddThenRemoveRestoresY) {
  const auto b = test::random_bundle(10, 5);
  const Objective obj(b, q_spec());
  StructureState st(obj, Word::from_string("101010101"));
  const CMatrix Y0 = st.Y();
  const Index m = st.addition_set().front();
  st.commit({MoveKind::Add, m});
  st.commit({MoveKind::Remove, m});
  EXPECT_LE((st.Y() - Y0).norm() / Y0.norm(), 1e-10);
}

TEST(StructureState, LongWalkMatchesDenseSolve) {
  const auto b = test::random_bundle(40, 3);
  const Objective obj(b, q_spec());
  std::mt19937_64 rng(99);
  StructureState st(obj, test::random_word(n_opt(b), rng));
  for (int step = 0; step < 200; ++step) {
    const auto rem = st.removal_set(), add = st.addition_set();
    const bool do_add = rem.empty() || (!add.empty() && rng() % 2 == 0);
    const auto& pool = do_add ? add : rem;
    st.commit({do_add ? MoveKind::Add : MoveKind::Remove, pool[rng() % pool.size()]});
  }
  const auto d = dense_solve(b, st.enabled());
  EXPECT_LE(test::rel_err(st.I(), d.current), 1e-9);
  EXPECT_EQ(st.diagnostics().commits, 200u);
  EXPECT_GE(st.diagnostics().refactorizations, 200u / 64u);
}

TEST(StructureState, RefactorAfterPeriod) {
  const auto b = test::random_bundle(12, 4);
  const Objective obj(b, q_spec());
  StructureState st(obj, Word::zeros(n_opt(b)), 64);
  const auto base = st.diagnostics().refactorizations;
  for (int i = 0; i < 63; ++i) {
    const Index m = st.addition_set().empty() ? -1 : st.addition_set().front();
    if (m >= 0)
      st.commit({MoveKind::Add, m});
    else
      st.commit({MoveKind::Remove, st.removal_set().front()});
  }
  const auto before = st.diagnostics().refactorizations - st.diagnostics().residual_refactorizations;
  EXPECT_EQ(before, base);
  st.commit({MoveKind::Remove, st.removal_set().front()});
  EXPECT_EQ(st.diagnostics().refactorizations - st.diagnostics().residual_refactorizations, base + 1);
}

TEST(StructureState, TauMatchesFromScratch) {
  const auto b = test::random_bundle(14, 6, 2, 0.2);
  std::mt19937_64 rng(6);
  for (auto kind : {ObjectiveKind::Q, ObjectiveKind::QMatched, ObjectiveKind::RealizedGain, ObjectiveKind::AbsorbedPower}) {
    ObjectiveSpec s;
    s.kind = kind;
    s.zeta = 2;
    s.q_lb_ref = 1.0;
    const Objective obj(b, s);
    StructureState st(obj, test::random_word(n_opt(b), rng));
    for (const auto& c : st.evaluate_candidates()) {
      if (!c.feasible) continue;
      auto S = st.enabled();
      if (c.move.kind == MoveKind::Remove)
        S.erase(std::find(S.begin(), S.end(), c.move.dof));
      else
        S.insert(std::upper_bound(S.begin(), S.end(), c.move.dof), c.move.dof);
      const auto d = dense_solve(b, S);
      const double f = oracle_objective(b, s, d.full);
      EXPECT_NEAR(c.f, f, 1e-9 * std::max(1.0, std::abs(f))) << to_string(kind);
      EXPECT_NEAR(c.tau, f - st.f(), 1e-9 * std::max(1.0, std::abs(f))) << to_string(kind);
    }
  }
}

TEST(StructureState, ExcitationScaleLeavesTauUnchanged) {
  const auto b = test::random_bundle(10, 9);
  OperatorBundle s = b;
  s.V[0] *= 3.0 * std::polar(1.0, kPi / 4);
  const Objective o1(b, q_spec()), o2(s, q_spec());
  const Word w = Word::from_string("110100111");
  StructureState a(o1, w), c(o2, w);
  const auto ta = a.evaluate_candidates(), tc = c.evaluate_candidates();
  ASSERT_EQ(ta.size(), tc.size());
  for (std::size_t i = 0; i < ta.size(); ++i) {
    EXPECT_EQ(ta[i].move, tc[i].move);
    EXPECT_NEAR(ta[i].tau, tc[i].tau, 1e-12 * std::max(1.0, std::abs(ta[i].f)));
  }
}

TEST(StructureState, EmptyCandidateListAndErrors) {
  const auto b = gen_rlc_ladder({});
  const Objective obj(b, q_spec());
  StructureState st(obj, Word::zeros(0));
  EXPECT_TRUE(st.evaluate_candidates().empty());
  EXPECT_THROW(st.commit({MoveKind::Remove, 0}), std::logic_error);
}

TEST(StructureState, SingularSupportIsInfeasible) {
  CMatrix R = CMatrix::Zero(2, 2);
  R(0, 0) = 1;
  auto b = test::make_bundle(R, CMatrix::Zero(2, 2), CVector::Ones(2), {1, 0});
  b.W = R;
  const Objective obj(b, q_spec());
  EXPECT_THROW(StructureState(obj, Word::ones(1)), InfeasibleError);
  EXPECT_FALSE(dense_solve(b, Word::ones(1)).feasible);
  StructureState ok(obj, Word::zeros(1));
  const auto adds = ok.evaluate_candidates();
  ASSERT_EQ(adds.size(), 1u);
  EXPECT_FALSE(adds[0].feasible);
}
