#include "commands.hpp"

#include "job_config.hpp"
#include "memdes/bounds.hpp"
#include "memdes/errors.hpp"
#include "memdes/local_search.hpp"
#include "memdes/memetic.hpp"
#include "memdes/objectives.hpp"
#include "memdes/operator_io.hpp"
#include "memdes/oracle.hpp"
#include "memdes/reanalysis.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <random>

namespace memdes::cli {

using json = nlohmann::ordered_json;

int guarded(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const DomainError& e) {
    std::cerr << "invalid parameters: " << e.what() << '\n';
    return kUsage;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kData;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kData;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kData;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolver;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolver;
  }
}

namespace {

// Finite doubles as numbers, the rest as strings, so the JSON stays valid.
json num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

json cplx_json(cplx z) { return json::array({num(z.real()), num(z.imag())}); }

OperatorBundle load(const std::filesystem::path& p) {
  std::vector<std::string> warnings;
  OperatorBundle b = read_bundle(p, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return b;
}

// Missing matrices are a property of the data, not of the command line.
void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("requirement", what);
}

void require_for(const OperatorBundle& b, const ObjectiveSpec& s) {
  switch (s.kind) {
    case ObjectiveKind::Q:
    case ObjectiveKind::QMatched:
      require(b.W.has_value(), "objective " + to_string(s.kind) + " needs the W matrix (Wmat)");
      break;
    case ObjectiveKind::RealizedGain:
      require(s.field_index >= 0 && s.field_index < static_cast<Index>(b.F.size()),
              "realized gain needs far-field row " + std::to_string(s.field_index) + " (Fmat)");
      break;
    case ObjectiveKind::AbsorbedPower:
      require(b.R_rho.has_value(), "absorbed power needs the loss matrix (Rrho)");
      require(b.chip_mask.has_value(), "absorbed power needs a chip mask (CHIP)");
      break;
  }
  require(s.excitation_index >= 0 && s.excitation_index < static_cast<Index>(b.V.size()),
          "bundle has no excitation " + std::to_string(s.excitation_index) + " (Vexc)");
}

json objective_json(const ObjectiveSpec& s) {
  return {{"kind", to_string(s.kind)},   {"zeta", s.zeta},
          {"z0", cplx_json(s.z0)},       {"q_lb_ref", num(s.q_lb_ref)},
          {"field_index", s.field_index}, {"feed_index", s.feed_index},
          {"excitation_index", s.excitation_index}};
}

json counters_json(const Counters& c) {
  return {{"removals_evaluated", c.removals_evaluated},
          {"additions_evaluated", c.additions_evaluated},
          {"total", c.total()}};
}

json bound_json(const BoundResult& r, const OperatorBundle& b) {
  json j;
  j["metric"] = r.metric;
  j["value"] = num(r.value);
  j["multipliers"] = json::array();
  for (double m : r.multipliers) j["multipliers"].push_back(num(m));
  j["residuals"] = json::array();
  for (double m : r.residuals) j["residuals"].push_back(num(m));
  j["iterations"] = r.iterations;
  j["flags"] = r.flags;
  j["n_dof"] = b.n_dof;
  j["bundle_hash"] = hash_hex(bundle_hash(b));
  return j;
}

std::optional<BoundResult> bound_for(const OperatorBundle& b, const ObjectiveSpec& s) {
  switch (s.kind) {
    case ObjectiveKind::Q:
    case ObjectiveKind::QMatched:
      return q_lower_bound(b);
    case ObjectiveKind::RealizedGain: {
      GainBoundOptions o;
      o.field_index = s.field_index;
      o.z0 = s.z0;
      o.excitation_index = s.excitation_index;
      o.feed_index = s.feed_index;
      return realized_gain_bound(b, o);
    }
    case ObjectiveKind::AbsorbedPower:
      return absorbed_power_bound(b, s.excitation_index);
  }
  return std::nullopt;
}

// Physical breakdown of one design, for the run summary.
json design_json(const OperatorBundle& b, const Objective& obj, const Word& w, int refactor) {
  json j;
  try {
    StructureState st(obj, w, refactor);
    const CVector I = st.full_current();
    const auto& s = obj.spec();
    j["f"] = num(st.f());
    if (b.W) {
      const QBreakdown q = eval_q(I, b);
      j["q"] = num(q.q);
      j["q_u"] = num(q.q_u);
      j["q_e"] = num(q.q_e);
    }
    const Index feed = s.feed_index >= 0 ? s.feed_index : default_feed_index(b, s.excitation_index);
    const CVector& V = b.V[static_cast<std::size_t>(s.excitation_index)];
    const GammaResult g = eval_gamma(I, V, feed, s.z0);
    j["z_in"] = cplx_json(g.z_in);
    j["gamma_sq"] = num(std::norm(g.gamma));
    if (s.field_index < static_cast<Index>(b.F.size())) {
      const GainResult gr = eval_realized_gain(I, V, b, s.field_index, s.z0, feed);
      j["gain"] = num(gr.gain);
      j["realized_gain"] = num(gr.realized_gain);
    }
    if (b.R_rho && b.chip_mask) j["absorbed_power"] = num(eval_absorbed_power(I, b));
  } catch (const InfeasibleError&) {
    j["f"] = "inf";
  }
  return j;
}

void print_checks(const OperatorBundle& b) {
  const auto checks = check_bundle(b);
  std::size_t passed = 0;
  for (const auto& c : checks) passed += c.passed ? 1 : 0;
  std::cout << "validation: " << passed << "/" << checks.size() << " checks passed\n";
  for (const auto& c : checks)
    if (!c.passed) std::cout << "  FAILED " << c.name << ": " << c.detail << '\n';
}

ObjectiveSpec resolve_objective(const JobConfig& job, const OperatorBundle& b) {
  ObjectiveSpec s = job.objective;
  require_for(b, s);
  if (s.kind == ObjectiveKind::QMatched && (job.q_lb_auto || !(s.q_lb_ref > 0.0))) s.q_lb_ref = q_lower_bound(b).value;
  return s;
}

}  // namespace

int cmd_gen(const GenOptions& o) {
  OperatorBundle b;
  if (o.kind == "rlc") {
    b = gen_rlc_ladder(o.rlc);
  } else if (o.kind == "random") {
    b = gen_random_passive(o.random);
  } else if (o.kind == "wire") {
    b = gen_wire_array(o.wire);
  } else {
    throw ConfigError("unknown generator '" + o.kind + "'");
  }
  if (o.tm_modes > 0) b.tm_projector = synthesize_tm_projector(b, o.tm_modes, o.tm_seed);
  write_bundle(b, o.out);
  std::cout << "wrote " << o.out.string() << '\n'
            << "bundle_hash=" << hash_hex(bundle_hash(b)) << " n_dof=" << b.n_dof << " n_opt=" << n_opt(b) << '\n';
  print_checks(b);
  return kOk;
}

int cmd_bound(const BoundOptions& o) {
  const OperatorBundle b = load(o.bundle);
  BoundResult r;
  const std::string m = o.metric;
  if (m == "q" || m == "q_tm") {
    const bool tm = o.tm || m == "q_tm";
    require(b.W.has_value(), "Q bound needs the W matrix (Wmat)");
    if (tm) require(b.tm_projector.has_value(), "TM bound needs a TM projector (TMPR)");
    r = q_lower_bound(b, tm);
  } else if (m == "gain" || m == "realized_gain") {
    require(o.field_index >= 0 && o.field_index < static_cast<Index>(b.F.size()),
            "gain bound needs far-field row " + std::to_string(o.field_index) + " (Fmat)");
    require(o.excitation_index >= 0 && o.excitation_index < static_cast<Index>(b.V.size()),
            "gain bound needs excitation " + std::to_string(o.excitation_index) + " (Vexc)");
    GainBoundOptions g;
    g.field_index = o.field_index;
    g.z0 = o.z0;
    g.v_in = o.v_in;
    g.excitation_index = o.excitation_index;
    g.feed_index = o.feed_index;
    g.validation_mode = o.validation_mode;
    r = realized_gain_bound(b, g);
  } else if (m == "pabs" || m == "absorbed_power") {
    require(b.R_rho.has_value(), "absorbed-power bound needs the loss matrix (Rrho)");
    require(b.chip_mask.has_value(), "absorbed-power bound needs a chip mask (CHIP)");
    require(o.excitation_index >= 0 && o.excitation_index < static_cast<Index>(b.V.size()),
            "absorbed-power bound needs excitation " + std::to_string(o.excitation_index) + " (Vexc)");
    r = absorbed_power_bound(b, o.excitation_index);
  } else {
    throw ConfigError("unknown bound metric '" + m + "' (q, q_tm, gain, pabs)");
  }
  std::cout << bound_json(r, b).dump(2) << '\n';
  return kOk;
}

int cmd_optimize(const std::filesystem::path& config, int threads) {
  JobConfig job = load_job_config(config);
  job.run.threads = threads_from_env(threads > 0 ? threads : job.run.threads);
  const OperatorBundle b = load(job.bundle_path);
  const ObjectiveSpec spec = resolve_objective(job, b);
  const std::uint64_t hash = bundle_hash(b);

  const MemeticResult res = memetic_optimize(b, spec, job.run);
  const Objective obj(b, spec);

  const std::filesystem::path dir = job.run.output_dir;
  std::filesystem::create_directories(dir);
  write_convergence_csv(dir / "convergence.csv", res, job.run.log_wall_time);
  write_best_word(dir / "best_word.txt", res.best.word, hash);

  json s;
  s["bundle"] = job.bundle_path.string();
  s["bundle_hash"] = hash_hex(hash);
  s["objective"] = objective_json(spec);
  s["n_dof"] = b.n_dof;
  s["n_opt"] = n_opt(b);
  s["n_agents"] = job.run.n_agents;
  s["seed"] = job.run.rng_seed;
  s["iterations"] = res.iterations;
  s["final_f"] = num(res.best.f);
  s["final_metric"] = num(obj.metric(res.best.f));
  s["best_word"] = res.best.word.to_string();
  s["counters"] = counters_json(res.counters);
  s["wall_time_s"] = job.run.log_wall_time ? json(res.wall_s) : json(nullptr);
  const double first = res.log.front().best_f;
  s["iteration1_best_metric"] = num(obj.metric(first));
  s["improvement_over_iteration1"] = num(obj.metric(res.best.f) - obj.metric(first));
  if (spec.kind == ObjectiveKind::RealizedGain && obj.metric(first) > 0.0 && obj.metric(res.best.f) > 0.0)
    s["improvement_over_iteration1_db"] = 10.0 * std::log10(obj.metric(res.best.f) / obj.metric(first));
  s["design"] = design_json(b, obj, res.best.word, job.run.refactor_period);
  json per = json::array();
  for (const auto& l : res.log) per.push_back(num(l.best_f));
  s["best_f_per_iteration"] = per;

  std::optional<double> bound = job.bound_value;
  if (job.bound_auto) {
    const auto r = bound_for(b, spec);
    if (r) bound = r->value;
  }
  if (bound) {
    s["bound"] = num(*bound);
    double metric = obj.metric(res.best.f);
    if (spec.kind == ObjectiveKind::QMatched) metric = s["design"].value("q", kNaN);
    s["metric_over_bound"] = num(metric / *bound);
  }
  std::ofstream(dir / "summary.json") << s.dump(2) << '\n';
  std::cout << "best f=" << format_double(res.best.f) << " after " << res.iterations << " iterations, "
            << res.counters.total() << " candidates evaluated; outputs in " << dir.string() << '\n';
  return kOk;
}

int cmd_sweep(const std::filesystem::path& config, const std::string& zeta_override, int threads) {
  JobConfig job = load_job_config(config);
  job.run.threads = threads_from_env(threads > 0 ? threads : job.run.threads);
  const std::string zs = zeta_override.empty() ? job.zeta_spec : zeta_override;
  if (zs.empty()) throw ConfigError("sweep needs --zeta or [sweep] zeta");
  const auto zetas = parse_zeta_spec(zs);
  job.objective.kind = ObjectiveKind::QMatched;
  const OperatorBundle b = load(job.bundle_path);
  const ObjectiveSpec spec = resolve_objective(job, b);

  const auto pts = pareto_sweep(b, spec, zetas, job.run);
  const std::filesystem::path dir = job.run.output_dir;
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "frontier.csv", std::ios::binary);
    if (!os) throw IoError("cannot write frontier.csv");
    write_frontier_csv(os, pts);
  }
  json s;
  s["bundle_hash"] = hash_hex(bundle_hash(b));
  s["q_lb_ref"] = spec.q_lb_ref;
  s["runs"] = json::array();
  for (const auto& p : pts)
    s["runs"].push_back({{"zeta", p.zeta},
                         {"f", num(p.f)},
                         {"q_over_qlb", num(p.q_over_qlb)},
                         {"gamma_sq", num(p.gamma_sq)},
                         {"dominated", p.dominated},
                         {"iterations", p.iterations},
                         {"best_word", p.word.to_string()},
                         {"counters", counters_json(p.counters)}});
  std::ofstream(dir / "sweep.json") << s.dump(2) << '\n';
  std::cout << pts.size() << " runs; frontier in " << (dir / "frontier.csv").string() << '\n';
  return kOk;
}

int cmd_inspect(const std::filesystem::path& path, bool verify, std::uint64_t seed) {
  const OperatorBundle b = load(path);
  std::cout << "bundle_hash=" << hash_hex(bundle_hash(b)) << '\n'
            << "n_dof=" << b.n_dof << " n_opt=" << n_opt(b) << " fixed=" << fixed_indices(b).size()
            << " chip=" << chip_indices(b).size() << '\n'
            << "W=" << (b.W ? "yes" : "no") << " Rrho=" << (b.R_rho ? "yes" : "no") << " F rows=" << b.F.size()
            << " V columns=" << b.V.size() << " TM=" << (b.tm_projector ? "yes" : "no") << '\n'
            << "f=" << format_double(b.meta.frequency_hz) << " k=" << format_double(b.meta.wavenumber)
            << " a=" << format_double(b.meta.radius) << '\n';
  print_checks(b);
  if (!verify) return kOk;

  bool ok = true;
  auto report = [&](const std::string& name, bool pass, const std::string& detail) {
    ok = ok && pass;
    std::cout << (pass ? "ok   " : "FAIL ") << name << ": " << detail << '\n';
  };

  // Reanalysis against dense re-solves on random words.
  ObjectiveSpec spec;
  spec.kind = b.W ? ObjectiveKind::Q : (!b.F.empty() ? ObjectiveKind::RealizedGain : ObjectiveKind::AbsorbedPower);
  if (spec.kind == ObjectiveKind::AbsorbedPower && !(b.R_rho && b.chip_mask)) {
    report("reanalysis", false, "bundle supports no objective");
    return kSolver;
  }
  const Objective obj(b, spec);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  double worst = 0;
  int checked = 0;
  for (int t = 0; t < 10; ++t) {
    Word w = Word::zeros(n_opt(b));
    for (auto& bit : w.bits) bit = coin(rng) ? 1 : 0;
    try {
      StructureState st(obj, w);
      auto check = [&](const std::vector<CandidateCurrent>& cands) {
        for (const auto& c : cands) {
          if (!c.feasible) continue;
          const DenseSolution d = dense_solve(b, c.support, spec.excitation_index);
          if (!d.feasible) continue;
          worst = std::max(worst, (c.current - d.current).norm() / d.current.norm());
          ++checked;
        }
      };
      check(st.removal_currents());
      check(st.addition_currents());
    } catch (const InfeasibleError&) {
    }
  }
  report("reanalysis vs dense solve", worst <= 1e-9,
         std::to_string(checked) + " candidate currents, max relative error " + format_double(worst));

  if (b.n_dof <= 16) {
    SampleOptions so;
    so.seed = seed;
    auto compare = [&](const std::string& name, double bound, BoundProblem prob, bool lower) {
      const SampledExtremum e = sample_feasible_bound_oracle(b, prob, 4000, so);
      const bool dominates = lower ? bound <= e.value * (1 + 1e-9) : bound >= e.value * (1 - 1e-9);
      report(name, dominates,
             "bound " + format_double(bound) + ", sampled " + format_double(e.value) + ", gap " +
                 format_double(std::abs(bound - e.value) / std::max(std::abs(e.value), 1e-300)));
    };
    if (b.W) compare("Q bound vs sampling", q_lower_bound(b).value, BoundProblem::Q, true);
    if (b.W && b.tm_projector) compare("TM Q bound vs sampling", q_lower_bound(b, true).value, BoundProblem::QTm, true);
    if (!b.F.empty() && b.n_dof > 1)
      compare("gain bound vs sampling", realized_gain_bound(b).value, BoundProblem::RealizedGain, false);
    if (b.R_rho && b.chip_mask && !chip_indices(b).empty())
      compare("absorbed-power bound vs sampling", absorbed_power_bound(b).value, BoundProblem::AbsorbedPower, false);
  } else {
    std::cout << "skip bound sampling: n_dof > 16\n";
  }
  return ok ? kOk : kSolver;
}

int cmd_sensitivity(const std::filesystem::path& bundle, const std::filesystem::path& word_path,
                    const ObjectiveFlags& f, const std::optional<std::filesystem::path>& out) {
  const OperatorBundle b = load(bundle);
  std::uint64_t hash = 0;
  const Word w = read_best_word(word_path, &hash);
  if (hash != 0 && hash != bundle_hash(b))
    throw ValidationError("word/bundle mismatch", "word file was written for bundle " + hash_hex(hash) +
                                                      ", this bundle is " + hash_hex(bundle_hash(b)));
  if (static_cast<Index>(w.bits.size()) != n_opt(b))
    throw ValidationError("word/bundle mismatch", "word has " + std::to_string(w.bits.size()) +
                                                      " bits, bundle has " + std::to_string(n_opt(b)) +
                                                      " controllable DOF");
  ObjectiveSpec s;
  s.kind = parse_objective_kind(f.kind);
  s.zeta = f.zeta;
  s.z0 = f.z0;
  s.field_index = f.field_index;
  s.feed_index = f.feed_index;
  s.excitation_index = f.excitation_index;
  require_for(b, s);
  if (s.kind == ObjectiveKind::QMatched) {
    if (f.q_lb == "auto") {
      s.q_lb_ref = q_lower_bound(b).value;
    } else {
      try {
        s.q_lb_ref = std::stod(f.q_lb);
      } catch (const std::exception&) {
        throw ConfigError("bad --q-lb value '" + f.q_lb + "'");
      }
    }
  }
  const Objective obj(b, s);
  StructureState st(obj, w);
  const auto rows = sensitivity_map(st);
  if (out) {
    write_sensitivity_csv(*out, rows);
    std::cout << rows.size() << " rows written to " << out->string() << '\n';
  } else {
    write_sensitivity_csv(std::cout, rows);
  }
  return kOk;
}

}  // namespace memdes::cli
