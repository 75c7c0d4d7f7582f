#include "helpers.hpp"
#include "memdes/errors.hpp"
#include "memdes/objectives.hpp"
#include "memdes/oracle.hpp"

#include <gtest/gtest.h>

using namespace memdes;

namespace {

// Fine-grid (129 basis functions) resonance of a PEC dipole with a = λ/480,
// located by bisection on Im(Z_in) and frozen here.
constexpr double kFineResonance = 0.470601660378;
constexpr double kFineResistance = 72.881370048466;

cplx dipole_zin(double len, Index seg) {
  WireArrayParams p;
  p.n_dipoles = 1;
  p.length_over_lambda = len;
  p.segments_per_dipole = seg;
  p.conductivity = kInf;
  p.wire_radius = 0.5 * kC0 / p.frequency_hz / 240.0;
  const auto b = gen_wire_array(p);
  const auto I = dense_solve(b, Word::ones(n_opt(b))).full;
  return b.V[0](wire_layout(p).feed_dof) / I(wire_layout(p).feed_dof);
}

double min_eig(const CMatrix& m) { return Eigen::SelfAdjointEigenSolver<CMatrix>(m).eigenvalues()(0); }

}  // namespace

TEST(RlcLadder, SingleCellAtResonance) {
  RlcLadderParams p;
  p.R = {2.0};
  p.frequency_hz = series_resonance_hz(p.L[0], p.C[0]);
  const auto b = gen_rlc_ladder(p);
  const double w0 = 2 * kPi * p.frequency_hz;
  const CVector I = CVector::Ones(1);
  const QBreakdown q = eval_q(I, b);
  EXPECT_NEAR(q.q, w0 * p.L[0] / p.R[0], 1e-10 * q.q);
  EXPECT_NEAR(q.q_e, 0.0, 1e-12 * q.q);
}

TEST(RlcLadder, RemovingUncoupledCellKeepsQ) {
  RlcLadderParams p;
  p.n = 2;
  p.R = {1.0, 5.0};
  p.L = {1e-8, 3e-8};
  p.frequency_hz = 1.3e9;
  const auto b = gen_rlc_ladder(p);
  ObjectiveSpec s;
  const double alone = oracle_word_value(b, s, Word::from_string("0"));
  const double w = 2 * kPi * p.frequency_hz;
  const double x = w * 1e-8 - 1 / (w * 1e-12), wsum = w * 1e-8 + 1 / (w * 1e-12);
  EXPECT_NEAR(alone, 0.5 * (wsum + std::abs(x)) / 1.0, 1e-12 * alone);
}

TEST(RlcLadder, DomainErrors) {
  RlcLadderParams p;
  p.R = {0.0};
  EXPECT_THROW(gen_rlc_ladder(p), DomainError);
  RlcLadderParams q;
  q.n = 3;
  q.L = {1e-8, 2e-8};
  EXPECT_THROW(gen_rlc_ladder(q), DomainError);
}

TEST(RandomPassive, DeterministicPerSeed) {
  EXPECT_TRUE(bitwise_equal(test::random_bundle(9, 5, 2), test::random_bundle(9, 5, 2)));
  EXPECT_FALSE(bitwise_equal(test::random_bundle(9, 5), test::random_bundle(9, 6)));
}

TEST(RandomPassive, NoLossMeansNoAbsorption) {
  const auto b = test::random_bundle(8, 3, 2, 0.0);
  ASSERT_TRUE(b.R_rho.has_value());
  EXPECT_EQ(b.R_rho->norm(), 0.0);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    const auto d = dense_solve(b, test::random_word(n_opt(b), rng));
    if (d.feasible) EXPECT_EQ(eval_absorbed_power(d.full, b), 0.0);
  }
}

TEST(RandomPassive, R0PositiveDefinite) {
  const auto b = test::random_bundle(6, 1);
  // Frozen from an eigensolver run on this seed.
  EXPECT_NEAR(min_eig(b.R0), 0.0045257949360324673, 1e-12);
  EXPECT_GT(min_eig(b.R0), 0.0);
}

TEST(RandomPassive, StoredEnergiesNonNegative) {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto b = test::random_bundle(10, s, 2);
    EXPECT_GE(min_eig(*b.W + b.X), -1e-10 * b.W->norm());
    EXPECT_GE(min_eig(*b.W - b.X), -1e-10 * b.W->norm());
    EXPECT_GE(min_eig(*b.R_rho), -1e-10 * b.R_rho->norm());
  }
}

TEST(RandomPassive, FarFieldBoundedByRadiation) {
  const auto b = test::random_bundle(10, 8);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 50; ++t) {
    CVector I(10);
    for (auto& v : I) v = cplx(nd(rng), nd(rng));
    EXPECT_LE(std::norm((b.F[0] * I)(0)), 3.0 * I.dot(b.R0 * I).real() * (1 + 1e-12));
  }
}

TEST(TmProjector, DominatedByR0) {
  const auto b = test::random_bundle(10, 4);
  const CMatrix U = synthesize_tm_projector(b, 4, 9);
  EXPECT_EQ(U.rows(), 4);
  EXPECT_GE(min_eig(b.R0 - U.adjoint() * U), -1e-10 * b.R0.norm());
}

TEST(WireArray, DipoleResonanceMatchesFineGrid) {
  double lo = 0.40, hi = 0.52;
  ASSERT_LT(dipole_zin(lo, 21).imag(), 0.0);
  ASSERT_GT(dipole_zin(hi, 21).imag(), 0.0);
  for (int i = 0; i < 40; ++i) {
    const double m = 0.5 * (lo + hi);
    (dipole_zin(m, 21).imag() < 0 ? lo : hi) = m;
  }
  EXPECT_GE(lo, 0.45);
  EXPECT_LE(lo, 0.50);
  EXPECT_NEAR(lo, kFineResonance, 0.005);
  const double r = dipole_zin(lo, 21).real();
  EXPECT_GE(r, 60.0);
  EXPECT_LE(r, 90.0);
  EXPECT_NEAR(r, kFineResistance, 0.03 * kFineResistance);
}

TEST(WireArray, HalfWaveGainNearTextbook) {
  WireArrayParams p;
  p.n_dipoles = 1;
  p.length_over_lambda = 0.5;
  p.conductivity = kInf;
  const auto b = gen_wire_array(p);
  const auto I = dense_solve(b, Word::ones(n_opt(b))).full;
  const double g = std::norm((b.F[0] * I)(0)) / I.dot(b.R0 * I).real();
  EXPECT_NEAR(g, 1.64, 0.05);
}

TEST(WireArray, PerfectConductorHasNoLoss) {
  WireArrayParams p;
  p.segments_per_dipole = 7;
  p.conductivity = kInf;
  EXPECT_EQ(gen_wire_array(p).R_rho->norm(), 0.0);
  // Surface resistance goes as 1/sqrt(sigma), so R_rho does too.
  p.conductivity = 1e6;
  const double lo = gen_wire_array(p).R_rho->cwiseAbs().maxCoeff();
  p.conductivity = 1e12;
  const double hi = gen_wire_array(p).R_rho->cwiseAbs().maxCoeff();
  EXPECT_NEAR(hi / lo, 1e-3, 1e-12);
}

TEST(WireArray, StructureAndErrors) {
  WireArrayParams p;
  const auto b = gen_wire_array(p);
  EXPECT_EQ(b.n_dof, 63);
  EXPECT_EQ(n_opt(b), 62);
  EXPECT_EQ(b.fixed_mask[static_cast<std::size_t>(wire_layout(p).feed_dof)], 1);
  EXPECT_LE((b.Z - b.Z.transpose()).norm(), 1e-12 * b.Z.norm());
  EXPECT_GE(min_eig(b.R0), -1e-9 * b.R0.norm());
  EXPECT_NEAR(surface_resistance(b.meta.wavenumber, p.conductivity),
              std::sqrt(2 * kPi * p.frequency_hz * kMu0 / (2 * p.conductivity)), 1e-15);

  WireArrayParams overlap = p;
  overlap.spacing_over_lambda = 1e-4;
  EXPECT_THROW(gen_wire_array(overlap), DomainError);
  WireArrayParams even = p;
  even.segments_per_dipole = 20;
  EXPECT_THROW(gen_wire_array(even), DomainError);
}
