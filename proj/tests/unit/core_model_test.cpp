#include "helpers.hpp"
#include "memdes/errors.hpp"

#include <gtest/gtest.h>

using namespace memdes;
using memdes::test::make_bundle;

namespace {

OperatorBundle four_dof() {
  return make_bundle(CMatrix::Identity(4, 4), CMatrix::Zero(4, 4), CVector::Unit(4, 0), {1, 0, 0, 0});
}

}  // namespace

TEST(Materialize, OnlyFixedSurvivesAllZero) {
  const auto b = four_dof();
  EXPECT_EQ(materialize(Word::zeros(3), b), (std::vector<Index>{0}));
}

TEST(Materialize, AllOnesIsFullStructure) {
  const auto b = four_dof();
  EXPECT_EQ(materialize(Word::ones(3), b), (std::vector<Index>{0, 1, 2, 3}));
}

TEST(Materialize, BitsFollowControllableOrder) {
  const auto b = four_dof();
  EXPECT_EQ(materialize(Word::from_string("101"), b), (std::vector<Index>{0, 1, 3}));
}

TEST(Materialize, LengthMismatchIsConfigError) {
  const auto b = four_dof();
  EXPECT_THROW(materialize(Word::zeros(2), b), ConfigError);
}

TEST(Materialize, InverseOfWordFromSupport) {
  const auto b = test::random_bundle(9, 4);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const Word w = test::random_word(n_opt(b), rng);
    const auto s = materialize(w, b);
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
    EXPECT_EQ(word_from_support(s, b), w);
  }
}

TEST(Word, StringRoundTripAndHamming) {
  const Word a = Word::from_string("0110");
  EXPECT_EQ(a.to_string(), "0110");
  EXPECT_EQ(a.popcount(), 2);
  EXPECT_EQ(hamming_distance(a, Word::from_string("1111")), 2);
  EXPECT_THROW(Word::from_string("01x"), ConfigError);
  EXPECT_THROW(hamming_distance(a, Word::zeros(3)), ConfigError);
}

TEST(Validate, GeneratedBundlesPass) {
  for (std::uint64_t s = 1; s <= 5; ++s) EXPECT_NO_THROW(validate(test::random_bundle(7, s, 2)));
  EXPECT_NO_THROW(validate(gen_rlc_ladder({})));
}

TEST(Validate, AsymmetricZNamesTheCheck) {
  auto b = test::random_bundle(6, 1);
  b.Z(1, 2) += 1e-3;
  try {
    validate(b);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.check(), "Z symmetry");
  }
}

TEST(Validate, FailedChecksAreReported) {
  auto b = test::random_bundle(6, 2);
  b.X(0, 1) += cplx(0, 0.5);
  b.Z = b.R0 + *b.R_rho + cplx(0, 1) * b.X;
  bool seen = false;
  for (const auto& c : check_bundle(b)) seen = seen || (!c.passed && c.name == "X Hermitian");
  EXPECT_TRUE(seen);

  auto m = test::random_bundle(6, 2);
  m.controllable_mask[0] = 1;  // DOF 0 is the fixed feed
  EXPECT_THROW(validate(m), ValidationError);
}

TEST(ObjectiveKind, NamesRoundTrip) {
  for (auto k : {ObjectiveKind::Q, ObjectiveKind::QMatched, ObjectiveKind::RealizedGain, ObjectiveKind::AbsorbedPower})
    EXPECT_EQ(parse_objective_kind(to_string(k)), k);
  EXPECT_THROW(parse_objective_kind("bandwidth"), ConfigError);
}

TEST(RunConfig, DefaultsAndValidation) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_DOUBLE_EQ(c.resolved_mutation_rate(10), 0.1);
  c.mutation_rate = 0.0;
  EXPECT_DOUBLE_EQ(c.resolved_mutation_rate(10), 0.0);
  c.n_agents = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  RunConfig d;
  d.crossover_rate = 1.5;
  EXPECT_THROW(d.validate(), ConfigError);
}
