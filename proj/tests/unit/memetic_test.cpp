#include "helpers.hpp"
#include "memdes/errors.hpp"
#include "memdes/memetic.hpp"
#include "memdes/oracle.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace memdes;

namespace {

RunConfig quiet(std::uint64_t seed = 1) {
  RunConfig c;
  c.rng_seed = seed;
  c.log_wall_time = false;
  return c;
}

std::string csv(const MemeticResult& r) {
  std::ostringstream os;
  write_convergence_csv(os, r, false);
  return os.str();
}

}  // namespace

TEST(Memetic, NeverBelowAndUsuallyAtEnumeratedOptimum) {
  const auto b = test::random_bundle(13, 31);
  const ObjectiveSpec spec;
  const auto e = enumerate_optimum(b, spec);
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RunConfig c = quiet(seed);
    c.max_global_iters = 50;
    const auto r = memetic_optimize(b, spec, c);
    EXPECT_GE(r.best.f, e.best_f * (1 - 1e-12));
    hits += r.best.f <= e.best_f * (1 + 1e-12);
    EXPECT_NEAR(oracle_word_value(b, spec, r.best.word), r.best.f, 1e-9 * r.best.f);
  }
  EXPECT_GE(hits, 8);
}

TEST(Memetic, StationaryPopulation) {
  const auto b = test::random_bundle(12, 4);
  RunConfig c = quiet(3);
  c.mutation_rate = 0;
  c.crossover_rate = 0;
  c.elitism_count = c.n_agents;
  c.stall_generations = 5;
  c.max_global_iters = 8;
  const auto r = memetic_optimize(b, {}, c);
  ASSERT_GE(r.log.size(), 3u);
  for (std::size_t i = 2; i < r.log.size(); ++i) EXPECT_EQ(r.log[i].best_f, r.log[1].best_f);
}

TEST(Memetic, ThreadCountDoesNotChangeLog) {
  const auto b = test::random_bundle(16, 9, 2);
  for (auto kind : {ObjectiveKind::Q, ObjectiveKind::AbsorbedPower}) {
    ObjectiveSpec s;
    s.kind = kind;
    RunConfig one = quiet(11), many = quiet(11);
    one.threads = 1;
    many.threads = 8;
    EXPECT_EQ(csv(memetic_optimize(b, s, one)), csv(memetic_optimize(b, s, many)));
  }
}

TEST(Memetic, CountersAreCumulative) {
  const auto b = test::random_bundle(14, 2);
  const auto r = memetic_optimize(b, {}, quiet(5));
  ASSERT_FALSE(r.log.empty());
  const auto& last = r.log.back().counters_cum.back();
  EXPECT_EQ(last.removals_evaluated, r.counters.removals_evaluated);
  EXPECT_EQ(last.additions_evaluated, r.counters.additions_evaluated);
  // Iteration 1 scores random words without local search.
  for (const auto& c : r.log.front().counters_cum) EXPECT_EQ(c.total(), 0u);
  std::uint64_t prev = 0;
  for (const auto& l : r.log)
    for (const auto& c : l.counters_cum) {
      EXPECT_GE(c.total(), prev);
      prev = c.total();
    }
}

TEST(Memetic, BestNeverWorsens) {
  const auto b = test::random_bundle(20, 6);
  RunConfig c = quiet(2);
  c.stall_generations = 4;
  const auto r = memetic_optimize(b, {}, c);
  for (std::size_t i = 1; i < r.log.size(); ++i) EXPECT_LE(r.log[i].best_f, r.log[i - 1].best_f);
  EXPECT_EQ(r.best.f, r.log.back().best_f);
}

TEST(Memetic, AgentStreamsDistinct) {
  std::set<std::uint64_t> seen;
  for (int it = 1; it <= 5; ++it)
    for (int a = 0; a < 16; ++a) seen.insert(agent_stream(7, it, a));
  EXPECT_EQ(seen.size(), 80u);
  EXPECT_EQ(agent_stream(7, 2, 3), agent_stream(7, 2, 3));
  EXPECT_NE(agent_stream(7, 2, 3), agent_stream(8, 2, 3));
}

TEST(Memetic, MeanPairwiseHamming) {
  std::vector<Agent> a(3);
  a[0].word = Word::from_string("000");
  a[1].word = Word::from_string("011");
  a[2].word = Word::from_string("111");
  EXPECT_DOUBLE_EQ(mean_pairwise_hamming(a), (2.0 + 3.0 + 1.0) / 3.0);
}

TEST(Memetic, BestWordFileRoundTrip) {
  const auto p = std::filesystem::temp_directory_path() / "memdes_best_word.txt";
  write_best_word(p, Word::from_string("1001101"), 0x1234abcdull);
  std::uint64_t h = 0;
  EXPECT_EQ(read_best_word(p, &h), Word::from_string("1001101"));
  EXPECT_EQ(h, 0x1234abcdull);
  std::filesystem::remove(p);
}

TEST(Pareto, DominanceDefinition) {
  const auto f = dominated_flags({{1, 3}, {2, 2}, {3, 1}, {3, 3}});
  EXPECT_EQ(f, (std::vector<bool>{false, false, false, true}));
  EXPECT_EQ(dominated_flags({{1, 1}}), (std::vector<bool>{false}));
  EXPECT_EQ(dominated_flags({{1, 1}, {1, 1}}), (std::vector<bool>{false, false}));
}

TEST(Pareto, ZetaSpecParsing) {
  const auto z = parse_zeta_spec("0:5:41");
  ASSERT_EQ(z.size(), 41u);
  EXPECT_EQ(z.front(), 0.0);
  EXPECT_EQ(z.back(), 5.0);
  EXPECT_DOUBLE_EQ(z[8], 1.0);
  EXPECT_EQ(parse_zeta_spec("0.5,2"), (std::vector<double>{0.5, 2.0}));
  EXPECT_EQ(parse_zeta_spec("3"), (std::vector<double>{3.0}));
  EXPECT_THROW(parse_zeta_spec("a:b"), ConfigError);
}

TEST(Pareto, SweepFrontierIsNondominated) {
  RandomPassiveParams p;
  p.n = 10;
  p.seed = 3;
  p.impedance_scale = 50;
  const auto b = gen_random_passive(p);
  ObjectiveSpec s;
  s.kind = ObjectiveKind::QMatched;
  const auto pts = pareto_sweep(b, s, parse_zeta_spec("0:4:9"), quiet());
  ASSERT_EQ(pts.size(), 9u);
  // Independent dominance scan.
  for (const auto& a : pts) {
    bool dom = false;
    for (const auto& o : pts)
      dom = dom || (o.q_over_qlb <= a.q_over_qlb && o.gamma_sq <= a.gamma_sq &&
                    (o.q_over_qlb < a.q_over_qlb || o.gamma_sq < a.gamma_sq));
    EXPECT_EQ(dom, a.dominated);
  }
  std::ostringstream os;
  write_frontier_csv(os, pts);
  const std::string text = os.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 10);

  const auto one = pareto_sweep(b, s, {1.0}, quiet());
  ASSERT_EQ(one.size(), 1u);
  EXPECT_FALSE(one[0].dominated);

  ObjectiveSpec q;
  EXPECT_THROW(pareto_sweep(b, q, {1.0}, quiet()), ConfigError);
}
