// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Details that do not fit on the line go to acceptance_details.txt and
// acceptance_counters.csv in the working directory.

#include "memdes/bounds.hpp"
#include "memdes/errors.hpp"
#include "memdes/local_search.hpp"
#include "memdes/memetic.hpp"
#include "memdes/objectives.hpp"
#include "memdes/operator_io.hpp"
#include "memdes/opgen.hpp"
#include "memdes/oracle.hpp"
#include "memdes/reanalysis.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace memdes;
namespace fs = std::filesystem;

namespace {

std::ofstream details("acceptance_details.txt");

struct Outcome {
  bool pass = false;
  std::string summary;
};

RandomPassiveParams rp(Index n, std::uint64_t seed, Index chip = 0, double loss = 0.1) {
  RandomPassiveParams p;
  p.n = n;
  p.seed = seed;
  p.chip_count = chip;
  p.loss_fraction = loss;
  return p;
}

Word random_word(Index n, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  Word w = Word::zeros(n);
  for (auto& b : w.bits) b = coin(rng) ? 1 : 0;
  return w;
}

double rel(const CVector& a, const CVector& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

RunConfig run_config(std::uint64_t seed) {
  RunConfig c;
  c.n_agents = 16;
  c.max_global_iters = 50;
  c.rng_seed = seed;
  c.log_wall_time = false;
  return c;
}

// 1. Incremental currents along random add/remove walks against dense solves.
Outcome exact_reanalysis() {
  double worst = 0;
  std::uint64_t checks = 0;
  for (std::uint64_t c = 0; c < 200; ++c) {
    const auto b = gen_random_passive(rp(40, 1000 + c));
    const Objective obj(b, {});
    std::mt19937_64 rng(c);
    StructureState st(obj, random_word(n_opt(b), rng));
    for (int step = 0; step < 200; ++step) {
      const auto rem = st.removal_set(), add = st.addition_set();
      const bool do_add = rem.empty() || (!add.empty() && rng() % 2 == 0);
      const auto& pool = do_add ? add : rem;
      st.commit({do_add ? MoveKind::Add : MoveKind::Remove, pool[rng() % pool.size()]});
      const auto d = dense_solve(b, st.enabled());
      if (!d.feasible) continue;
      worst = std::max(worst, rel(st.I(), d.current));
      ++checks;
    }
  }
  return {worst <= 1e-9, std::to_string(checks) + " states, max rel err " + fmt(worst) + " (tol 1e-9)"};
}

// 2. Batch τ against from-scratch evaluation of each perturbed structure.
Outcome batch_sensitivity() {
  const ObjectiveKind kinds[] = {ObjectiveKind::Q, ObjectiveKind::QMatched, ObjectiveKind::RealizedGain,
                                 ObjectiveKind::AbsorbedPower};
  double worst = 0;
  std::uint64_t n = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto b = gen_random_passive(rp(24, 2000 + s, 2, 0.2));
    ObjectiveSpec spec;
    spec.kind = kinds[s % 4];
    spec.zeta = 1.0;
    spec.q_lb_ref = 1.0;
    const Objective obj(b, spec);
    std::mt19937_64 rng(s);
    StructureState st(obj, random_word(n_opt(b), rng));
    for (const auto& c : st.evaluate_candidates()) {
      auto S = st.enabled();
      if (c.move.kind == MoveKind::Remove)
        S.erase(std::find(S.begin(), S.end(), c.move.dof));
      else
        S.insert(std::upper_bound(S.begin(), S.end(), c.move.dof), c.move.dof);
      const auto d = dense_solve(b, S);
      if (d.feasible != c.feasible) return {false, "feasibility disagrees at DOF " + std::to_string(c.move.dof)};
      if (!c.feasible) continue;
      const double tau = oracle_objective(b, spec, d.full) - oracle_objective(b, spec, dense_solve(b, st.enabled()).full);
      worst = std::max(worst, std::abs(c.tau - tau) / std::max(1.0, std::abs(c.f)));
      ++n;
    }
  }
  return {worst <= 1e-9, std::to_string(n) + " candidates, max |dtau| " + fmt(worst) + " (tol 1e-9)"};
}

// 3. Monotone traces and 1-swap optimal terminal words.
Outcome local_step() {
  int bad_trace = 0, bad_term = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto b = gen_random_passive(rp(12, 3000 + s));
    const ObjectiveSpec spec;
    const Objective obj(b, spec);
    std::mt19937_64 rng(s);
    StructureState st(obj, random_word(n_opt(b), rng));
    const auto r = local_search(st, 1e-12, 100000);
    double prev = r.f_initial;
    for (const auto& t : r.trace) {
      if (!(t.f <= prev)) ++bad_trace;
      prev = t.f;
    }
    const Word w = st.word();
    const double f = oracle_word_value(b, spec, w);
    for (Index i = 0; i < w.size(); ++i) {
      Word nb = w;
      nb.bits[static_cast<std::size_t>(i)] ^= 1;
      if (oracle_word_value(b, spec, nb) < f * (1 - 1e-12)) {
        ++bad_term;
        break;
      }
    }
  }
  return {bad_trace == 0 && bad_term == 0, "50 bundles, " + std::to_string(bad_trace) + " increasing steps, " +
                                               std::to_string(bad_term) + " improvable terminal words"};
}

// 4. Memetic result against exhaustive enumeration.
Outcome global_optimality() {
  std::ofstream csv("acceptance_counters.csv");
  csv << "bundle,seed,n_opt,f,f_opt,iterations,removals_evaluated,additions_evaluated,total\n";
  int hits = 0, below = 0, runs = 0;
  for (std::uint64_t bs = 0; bs < 5; ++bs) {
    const auto b = gen_random_passive(rp(15, 4000 + bs));
    const ObjectiveSpec spec;
    const auto e = enumerate_optimum(b, spec);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto r = memetic_optimize(b, spec, run_config(seed));
      ++runs;
      hits += r.best.f <= e.best_f * (1 + 1e-12);
      below += r.best.f < e.best_f * (1 - 1e-12);
      csv << bs << ',' << seed << ',' << n_opt(b) << ',' << format_double(r.best.f) << ','
          << format_double(e.best_f) << ',' << r.iterations << ',' << r.counters.removals_evaluated << ','
          << r.counters.additions_evaluated << ',' << r.counters.total() << '\n';
    }
  }
  const double rate = static_cast<double>(hits) / runs;
  return {rate >= 0.8 && below == 0, std::to_string(hits) + "/" + std::to_string(runs) +
                                         " runs at the optimum (need 80%), " + std::to_string(below) +
                                         " below it; counters in acceptance_counters.csv"};
}

// 5. Series RLC anchor.
Outcome rlc_anchor() {
  RlcLadderParams p;
  p.R = {0.7};
  p.L = {2.2e-8};
  p.C = {3.3e-12};
  p.frequency_hz = series_resonance_hz(p.L[0], p.C[0]);
  const auto b = gen_rlc_ladder(p);
  const double ref = 2 * kPi * p.frequency_hz * p.L[0] / p.R[0];
  const auto d = dense_solve(b, Word::zeros(0));
  const double q = eval_q(d.full, b).q;
  const double lb = q_lower_bound(b).value;
  const double eq = std::abs(q - ref) / ref, el = std::abs(lb - ref) / ref;
  return {eq <= 1e-10 && el <= 1e-10,
          "Q rel err " + fmt(eq) + ", Q_lb rel err " + fmt(el) + " vs w0 L/R = " + fmt(ref) + " (tol 1e-10)"};
}

// 6. Bounds dominate every realizable design.
Outcome bound_dominance() {
  int violations = 0;
  double worst_q = 0, worst_g = 0, worst_p = 0, worst_tm = 0;
  int bundles = 0;
  for (std::uint64_t s = 0; s < 8; ++s) {
    const Index n = 8 + static_cast<Index>(s % 5);  // N_opt = n - 1 - chip ≤ 12
    auto b = gen_random_passive(rp(n + 2, 5000 + s, 2, 0.15));
    b.tm_projector = synthesize_tm_projector(b, (n + 2) / 2, 7 + s);
    ++bundles;
    const auto qb = q_lower_bound(b);
    const auto tm = q_lower_bound(b, true);
    worst_tm = std::max(worst_tm, qb.value / tm.value);
    if (qb.value > tm.value * (1 + 1e-9)) ++violations;

    const ObjectiveSpec qs;
    for (double f : enumerate_optimum(b, qs).values) {
      if (!std::isfinite(f)) continue;
      worst_q = std::max(worst_q, qb.value / f);
      if (qb.value > f + 1e-9 * f) ++violations;
    }

    ObjectiveSpec gs, ps;
    gs.kind = ObjectiveKind::RealizedGain;
    ps.kind = ObjectiveKind::AbsorbedPower;
    const double gb = realized_gain_bound(b).value, pb = absorbed_power_bound(b).value;
    std::vector<Word> words;
    std::mt19937_64 rng(s);
    for (int t = 0; t < 100; ++t) words.push_back(random_word(n_opt(b), rng));
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      words.push_back(memetic_optimize(b, gs, run_config(seed)).best.word);
      words.push_back(memetic_optimize(b, ps, run_config(seed)).best.word);
    }
    for (const auto& w : words) {
      const double g = -oracle_word_value(b, gs, w), pa = -oracle_word_value(b, ps, w);
      if (std::isfinite(g)) {
        worst_g = std::max(worst_g, g / gb);
        if (g > gb * (1 + 1e-6)) ++violations;
      }
      if (std::isfinite(pa)) {
        worst_p = std::max(worst_p, pa / pb);
        if (pa > pb * (1 + 1e-6)) ++violations;
      }
    }
  }
  return {violations == 0, std::to_string(bundles) + " bundles, " + std::to_string(violations) +
                               " violations; max Q_lb/Q " + fmt(worst_q) + ", Q_lb/Q_lb_TM " + fmt(worst_tm) +
                               ", G_r/bound " + fmt(worst_g) + ", P/bound " + fmt(worst_p)};
}

// 7. Bound solvers against the sampling oracle on small bundles.
Outcome oracle_agreement() {
  double worst = 0;
  int n = 0, flagged = 0;
  for (std::uint64_t s = 0; s < 4; ++s) {
    const Index dof = 3 + static_cast<Index>(s % 3);
    const auto b = gen_random_passive(rp(dof, 6000 + s, 1, 0.2));
    SampleOptions o;
    o.seed = s + 1;
    const auto q = q_lower_bound(b);
    if (q.has_flag("tuning_limited")) ++flagged;
    const struct {
      BoundProblem p;
      double bound;
    } cases[] = {{BoundProblem::Q, q.value},
                 {BoundProblem::RealizedGain, realized_gain_bound(b).value},
                 {BoundProblem::AbsorbedPower, absorbed_power_bound(b).value}};
    for (const auto& c : cases) {
      const auto e = sample_feasible_bound_oracle(b, c.p, 20000, o);
      const double r = std::abs(e.value - c.bound) / std::abs(c.bound);
      details << "c7 bundle " << s << " problem " << static_cast<int>(c.p) << " bound " << c.bound << " sampled "
              << e.value << " rel " << r << '\n';
      worst = std::max(worst, r);
      ++n;
    }
  }
  return {worst <= 0.005, std::to_string(n) + " bound/oracle pairs on N <= 5, max rel gap " + fmt(worst) +
                              " (tol 0.5%), " + std::to_string(flagged) + " tuning-limited"};
}

// 8. Three-element wire array, realized gain.
Outcome wire_array() {
  auto db = [](double g) { return 10 * std::log10(g); };
  ObjectiveSpec s;
  s.kind = ObjectiveKind::RealizedGain;
  auto optimized = [&](double d, double* full, double* single) {
    WireArrayParams p;
    p.spacing_over_lambda = d;
    const auto b = gen_wire_array(p);
    if (full) *full = -oracle_word_value(b, s, Word::ones(n_opt(b)));
    if (single) {
      WireArrayParams one = p;
      one.n_dipoles = 1;
      const auto b1 = gen_wire_array(one);
      *single = -oracle_word_value(b1, s, Word::ones(n_opt(b1)));
    }
    return -memetic_optimize(b, s, run_config(1)).best.f;
  };
  double full = 0, single = 0;
  const double g = optimized(0.25, &full, &single);
  const bool beats = db(g) >= db(full) + 1 && db(g) >= db(single) + 1;

  std::vector<double> sweep;
  std::ostringstream curve;
  for (int i = 0; i <= 8; ++i) {
    const double d = 0.1 + 0.05 * i;
    sweep.push_back(optimized(d, nullptr, nullptr));
    curve << (i ? " " : "") << fmt(db(sweep.back()));
  }
  const auto arg = std::max_element(sweep.begin(), sweep.end()) - sweep.begin();
  const bool interior = arg > 0 && arg + 1 < static_cast<std::ptrdiff_t>(sweep.size());
  details << "c8 optimized-G_r sweep d/lambda 0.1:0.05:0.5 [dBi]: " << curve.str() << '\n';
  return {beats && interior, "G_r " + fmt(db(g)) + " dBi vs full " + fmt(db(full)) + " and single " + fmt(db(single)) +
                                 " dBi; sweep max at d/lambda = " + fmt(0.1 + 0.05 * arg)};
}

// 9. ζ sweep on a 14-DOF bundle.
Outcome zeta_sweep() {
  RandomPassiveParams p = rp(14, 16);
  p.impedance_scale = 50;
  const auto b = gen_random_passive(p);
  ObjectiveSpec s;
  s.kind = ObjectiveKind::QMatched;
  const auto pts = pareto_sweep(b, s, parse_zeta_spec("0:5:41"), run_config(1));
  double qmin = kInf, gmin = kInf, zg = -1;
  int front = 0;
  for (const auto& x : pts) {
    qmin = std::min(qmin, x.q_over_qlb);
    if (x.zeta > 0 && x.gamma_sq < gmin) {
      gmin = x.gamma_sq;
      zg = x.zeta;
    }
    front += !x.dominated;
    details << "c9 zeta " << x.zeta << " q/q_lb " << x.q_over_qlb << " |G|^2 " << x.gamma_sq
            << (x.dominated ? " dominated" : "") << '\n';
  }
  const bool ok = pts.size() == 41 && pts[0].q_over_qlb <= qmin && gmin < 1e-3 && front > 0;
  return {ok, std::to_string(pts.size()) + " runs, " + std::to_string(front) + " on the frontier; zeta=0 Q/Q_lb " +
                  fmt(pts[0].q_over_qlb) + " (min " + fmt(qmin) + "), min |G|^2 " + fmt(gmin) + " at zeta " +
                  fmt(zg)};
}

// 10. Thread count never changes the convergence log (through the CLI).
Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "memdes_acceptance_c10";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_bundle(gen_random_passive(rp(24, 7000, 2, 0.2)), dir / "b.opb");
  std::ofstream(dir / "job.ini") << "bundle = b.opb\n[objective]\nkind = absorbed_power\n[ga]\nn_agents = 16\n"
                                    "max_global_iters = 50\nseed = 5\nstall_generations = 3\n"
                                    "[output]\ndir = out\nlog_wall_time = false\n";
  auto run = [&](int threads) {
    const std::string cmd = "MEMDES_THREADS=" + std::to_string(threads) + " '" MEMDES_BIN "' optimize '" +
                            (dir / "job.ini").string() + "' > /dev/null";
    const int st = std::system(cmd.c_str());
    std::ifstream is(dir / "out" / "convergence.csv", std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return std::make_pair(WIFEXITED(st) ? WEXITSTATUS(st) : -1, ss.str());
  };
  const auto a = run(1), c = run(8);
  fs::remove_all(dir);
  const bool ok = a.first == 0 && c.first == 0 && !a.second.empty() && a.second == c.second;
  return {ok, "MEMDES_THREADS=1 vs 8: " + std::to_string(a.second.size()) + " bytes, " +
                  (a.second == c.second ? "identical" : "DIFFERENT")};
}

// 11. OPB1 round trip and symmetry corruption.
Outcome format_round_trip() {
  const fs::path path = fs::temp_directory_path() / "memdes_acceptance_c11.opb";
  int bad = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Index n = 2 + static_cast<Index>(s % 20);
    auto b = gen_random_passive(rp(n, 8000 + s, std::min<Index>(static_cast<Index>(s % 3), n - 1)));
    if (s % 4 == 0) b.tm_projector = synthesize_tm_projector(b, std::min<Index>(1 + static_cast<Index>(s % 3), n), s);
    write_bundle(b, path);
    if (!bitwise_equal(b, read_bundle(path))) ++bad;
  }
  auto b = gen_random_passive(rp(8, 1));
  b.Z(2, 5) += 1e-3;
  write_bundle(b, path);
  std::string check;
  try {
    read_bundle(path);
  } catch (const ValidationError& e) {
    check = e.check();
  }
  fs::remove(path);
  return {bad == 0 && check == "Z symmetry", "100 bundles, " + std::to_string(bad) +
                                                 " mismatches; corrupted file rejected by check '" + check + "'"};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"exact reanalysis equivalence", exact_reanalysis},
      {"batch sensitivity correctness", batch_sensitivity},
      {"local-step monotonicity and 1-swap optimality", local_step},
      {"memetic global optimality", global_optimality},
      {"RLC convention anchor", rlc_anchor},
      {"bound dominance", bound_dominance},
      {"bound solvers vs sampling oracle", oracle_agreement},
      {"3-element wire array", wire_array},
      {"zeta sweep trade-off", zeta_sweep},
      {"thread-count determinism", determinism},
      {"OPB1 round trip", format_round_trip},
  };
  int failed = 0, k = 0;
  for (const auto& [name, fn] : criteria) {
    ++k;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // Runtime targets: 60 s for criterion 1, 10 min for criterion 8.
    if (k == 1 && secs > 60) o = {false, o.summary + "; over the 60 s budget"};
    if (k == 8 && secs > 600) o = {false, o.summary + "; over the 10 min budget"};
    failed += !o.pass;
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", k, name, o.summary.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", k - failed, k);
  return failed == 0 ? 0 : 1;
}
