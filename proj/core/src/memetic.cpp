#include "memdes/memetic.hpp"

#include "memdes/bounds.hpp"
#include "memdes/errors.hpp"
#include "memdes/local_search.hpp"
#include "memdes/objectives.hpp"
#include "memdes/operator_io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <mutex>
#include <thread>

namespace memdes {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  const int workers = std::min(n, threads);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
  }
  if (error) std::rethrow_exception(error);
}

bool better(const Agent& a, const Agent& b) { return a.f < b.f; }

// Scores a word directly, without local search.
void score(Agent& a, const Objective& obj, int refactor_period) {
  try {
    StructureState st(obj, a.word, refactor_period);
    a.f = st.f();
  } catch (const InfeasibleError&) {
    a.f = kInf;
  }
}

void improve(Agent& a, const Objective& obj, const RunConfig& cfg) {
  a.local = true;
  a.counters = {};
  a.local_commits = 0;
  try {
    StructureState st(obj, a.word, cfg.refactor_period);
    const LocalResult lr = local_search(st, cfg.eps_loc, static_cast<std::uint64_t>(cfg.max_local_iters));
    a.word = st.word();
    a.f = st.f();
    a.counters = lr.counters;
    a.local_commits = lr.commits();
  } catch (const InfeasibleError&) {
    a.f = kInf;
  }
}

Index tournament(const std::vector<Agent>& pop, int size, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
  Index best = static_cast<Index>(pick(rng));
  for (int k = 1; k < size; ++k) {
    const auto c = static_cast<Index>(pick(rng));
    const auto& a = pop[static_cast<std::size_t>(c)];
    const auto& b = pop[static_cast<std::size_t>(best)];
    if (a.f < b.f || (a.f == b.f && c < best)) best = c;
  }
  return best;
}

bool relative_stall(double prev, double cur, double eps) {
  if (!std::isfinite(prev) && !std::isfinite(cur)) return true;
  if (!std::isfinite(prev)) return false;
  return std::abs(prev - cur) < eps * std::abs(prev);
}

}  // namespace

std::uint64_t agent_stream(std::uint64_t seed, int iter, int agent) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(iter));
  return splitmix64(h ^ (static_cast<std::uint64_t>(agent) << 32));
}

double mean_pairwise_hamming(const std::vector<Agent>& agents) {
  const std::size_t n = agents.size();
  if (n < 2) return 0.0;
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) sum += static_cast<double>(hamming_distance(agents[i].word, agents[j].word));
  return sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

MemeticResult memetic_optimize(const OperatorBundle& bundle, const ObjectiveSpec& spec, const RunConfig& cfg,
                               const ProgressFn& progress) {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const Objective obj(bundle, spec);
  const Index nopt = n_opt(bundle);
  const double mut = cfg.resolved_mutation_rate(nopt);
  const int threads = resolve_threads(cfg.threads);
  const int na = cfg.n_agents;

  MemeticResult res;
  std::vector<Agent> pop(static_cast<std::size_t>(na));
  Counters cum;
  double prev_best = kInf;
  int stall = 0;

  for (int j = 1; j <= cfg.max_global_iters; ++j) {
    std::vector<Agent> next(static_cast<std::size_t>(na));
    if (j == 1) {
      parallel_for(na, threads, [&](int a) {
        Agent& ag = next[static_cast<std::size_t>(a)];
        ag.rng_stream = agent_stream(cfg.rng_seed, j, a);
        std::mt19937_64 rng(ag.rng_stream);
        std::bernoulli_distribution fill(cfg.init_fill_probability);
        ag.word = Word::zeros(nopt);
        for (auto& bit : ag.word.bits) bit = fill(rng) ? 1 : 0;
        score(ag, obj, cfg.refactor_period);
      });
    } else {
      // Elites keep their slot order by f, ties by index.
      std::vector<std::size_t> order(pop.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return better(pop[x], pop[y]); });
      const int ne = cfg.elitism_count;
      parallel_for(na, threads, [&](int a) {
        Agent& ag = next[static_cast<std::size_t>(a)];
        const std::uint64_t stream = agent_stream(cfg.rng_seed, j, a);
        if (a < ne) {
          ag = pop[order[static_cast<std::size_t>(a)]];
          ag.rng_stream = stream;
          if (!ag.local) {
            improve(ag, obj, cfg);
          } else {
            ag.counters = {};
            ag.local_commits = 0;
          }
          return;
        }
        ag.rng_stream = stream;
        std::mt19937_64 rng(stream);
        const Word& p1 = pop[static_cast<std::size_t>(tournament(pop, cfg.tournament_size, rng))].word;
        const Word& p2 = pop[static_cast<std::size_t>(tournament(pop, cfg.tournament_size, rng))].word;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        ag.word = p1;
        if (u(rng) < cfg.crossover_rate)
          for (std::size_t k = 0; k < ag.word.bits.size(); ++k)
            if (u(rng) < 0.5) ag.word.bits[k] = p2.bits[k];
        for (auto& bit : ag.word.bits)
          if (u(rng) < mut) bit ^= 1u;
        improve(ag, obj, cfg);
      });
    }
    pop = std::move(next);

    IterationLog log;
    log.iter = j;
    log.counters_cum.reserve(pop.size());
    double sum = 0;
    std::size_t best = 0;
    for (std::size_t a = 0; a < pop.size(); ++a) {
      cum += pop[a].counters;
      log.counters_cum.push_back(cum);
      sum += pop[a].f;
      if (pop[a].f < pop[best].f) best = a;
    }
    log.agents = pop;
    log.best_f = pop[best].f;
    log.mean_f = sum / static_cast<double>(pop.size());
    log.best_word = pop[best].word;
    log.hamming_mean = mean_pairwise_hamming(pop);
    log.elapsed_s = std::chrono::duration<double>(clock::now() - t0).count();

    if (j == 1 || pop[best].f < res.best.f) res.best = pop[best];
    res.log.push_back(std::move(log));
    res.iterations = j;
    if (progress) progress(res.log.back());

    if (j > 1) {
      stall = relative_stall(prev_best, res.best.f, cfg.eps_glob) ? stall + 1 : 0;
      if (stall >= cfg.stall_generations) break;
    }
    prev_best = res.best.f;
  }
  res.counters = cum;
  res.wall_s = std::chrono::duration<double>(clock::now() - t0).count();
  return res;
}

void write_convergence_csv(std::ostream& os, const MemeticResult& r, bool wall_time) {
  os << "iter,agent,f,hamming_mean,removals_cum,additions_cum,elapsed_s\n";
  for (const auto& log : r.log) {
    const std::string ham = format_double(log.hamming_mean);
    const std::string el = wall_time ? format_double(log.elapsed_s) : "0";
    for (std::size_t a = 0; a < log.agents.size(); ++a)
      os << log.iter << ',' << a << ',' << format_double(log.agents[a].f) << ',' << ham << ','
         << log.counters_cum[a].removals_evaluated << ',' << log.counters_cum[a].additions_evaluated << ',' << el
         << '\n';
  }
}

void write_convergence_csv(const std::filesystem::path& path, const MemeticResult& r, bool wall_time) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  write_convergence_csv(os, r, wall_time);
}

void write_best_word(const std::filesystem::path& path, const Word& word, std::uint64_t hash) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << "# bundle_hash=" << hash_hex(hash) << '\n' << word.to_string() << '\n';
}

Word read_best_word(const std::filesystem::path& path, std::uint64_t* hash) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  std::string line, bits;
  bool have_hash = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("bundle_hash=");
      if (pos != std::string::npos && hash) {
        *hash = std::stoull(line.substr(pos + 12), nullptr, 16);
        have_hash = true;
      }
      continue;
    }
    bits = line;
    break;
  }
  if (bits.empty()) throw FormatError(path.string() + " holds no word");
  if (hash && !have_hash) *hash = 0;
  return Word::from_string(bits);
}

std::vector<bool> dominated_flags(const std::vector<std::pair<double, double>>& pts) {
  std::vector<bool> out(pts.size(), false);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t k = 0; k < pts.size() && !out[i]; ++k) {
      if (k == i) continue;
      const auto& p = pts[k];
      const auto& q = pts[i];
      if (p.first <= q.first && p.second <= q.second && (p.first < q.first || p.second < q.second)) out[i] = true;
    }
  return out;
}

std::vector<SweepPoint> pareto_sweep(const OperatorBundle& bundle, const ObjectiveSpec& templ,
                                     const std::vector<double>& zetas, const RunConfig& cfg) {
  if (zetas.empty()) throw ConfigError("zeta list is empty");
  if (templ.kind != ObjectiveKind::QMatched) throw ConfigError("sweep needs the q_matched objective");
  ObjectiveSpec base = templ;
  if (!(base.q_lb_ref > 0.0)) base.q_lb_ref = q_lower_bound(bundle).value;

  std::vector<SweepPoint> pts;
  for (double z : zetas) {
    ObjectiveSpec s = base;
    s.zeta = z;
    const MemeticResult r = memetic_optimize(bundle, s, cfg);
    SweepPoint p;
    p.zeta = z;
    p.f = r.best.f;
    p.word = r.best.word;
    p.counters = r.counters;
    p.iterations = r.iterations;
    const Objective obj(bundle, s);
    try {
      StructureState st(obj, r.best.word, cfg.refactor_period);
      const auto parts = obj.matched_parts(st.forms());
      p.q_over_qlb = parts.q_over_qlb;
      p.gamma_sq = parts.gamma_sq;
    } catch (const InfeasibleError&) {
    }
    pts.push_back(p);
  }
  std::vector<std::pair<double, double>> xy;
  for (const auto& p : pts) xy.emplace_back(p.q_over_qlb, p.gamma_sq);
  const auto dom = dominated_flags(xy);
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i].dominated = dom[i];
  return pts;
}

void write_frontier_csv(std::ostream& os, const std::vector<SweepPoint>& pts) {
  os << "zeta,q_over_qlb,gamma_sq,dominated\n";
  for (const auto& p : pts)
    os << format_double(p.zeta) << ',' << format_double(p.q_over_qlb) << ',' << format_double(p.gamma_sq) << ','
       << (p.dominated ? 1 : 0) << '\n';
}

std::vector<double> parse_zeta_spec(const std::string& spec) {
  std::vector<double> out;
  auto num = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw ConfigError("bad zeta value '" + s + "'");
    }
    if (used != s.size()) throw ConfigError("bad zeta value '" + s + "'");
    return v;
  };
  if (std::count(spec.begin(), spec.end(), ':') == 2) {
    const auto a = spec.find(':');
    const auto b = spec.find(':', a + 1);
    const double lo = num(spec.substr(0, a));
    const double hi = num(spec.substr(a + 1, b - a - 1));
    const double nd = num(spec.substr(b + 1));
    const auto n = static_cast<long>(nd);
    if (n < 1 || static_cast<double>(n) != nd) throw ConfigError("zeta sample count must be a positive integer");
    for (long i = 0; i < n; ++i) out.push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  } else {
    std::stringstream ss(spec);
    for (std::string cell; std::getline(ss, cell, ',');) out.push_back(num(cell));
  }
  if (out.empty()) throw ConfigError("empty zeta specification");
  for (double z : out)
    if (!(z >= 0.0)) throw ConfigError("zeta must be non-negative");
  return out;
}

}  // namespace memdes
