#include "job_config.hpp"

#include "memdes/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdlib>
#include <limits>
#include <set>

namespace memdes::cli {
namespace {

namespace pt = boost::property_tree;

template <typename T>
T get(const pt::ptree& node, const std::string& key, T fallback) {
  const auto child = node.get_child_optional(key);
  if (!child) return fallback;
  const auto v = child->get_value_optional<T>();
  if (!v) throw ConfigError("bad value for '" + key + "': '" + child->data() + "'");
  return *v;
}

bool get_bool(const pt::ptree& node, const std::string& key, bool fallback) {
  const auto child = node.get_child_optional(key);
  if (!child) return fallback;
  const std::string s = child->data();
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("bad boolean for '" + key + "': '" + s + "'");
}

void check_keys(const pt::ptree& node, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : node) {
    if (!v.empty()) continue;  // a section; checked separately
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

}  // namespace

JobConfig load_job_config(const std::filesystem::path& path) {
  pt::ptree root;
  try {
    pt::read_ini(path.string(), root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  const std::set<std::string> sections{"objective", "ga", "local", "output", "sweep"};
  for (const auto& [k, v] : root)
    if (!v.empty() && !sections.count(k)) throw ConfigError("unknown section [" + k + "]");
  check_keys(root, "the top level", {"bundle"});

  JobConfig job;
  const auto base = path.parent_path();
  const auto bundle = root.get_optional<std::string>("bundle");
  if (!bundle || bundle->empty()) throw ConfigError("config needs 'bundle = <path>'");
  job.bundle_path = std::filesystem::path(*bundle).is_absolute() ? std::filesystem::path(*bundle) : base / *bundle;

  const pt::ptree empty;
  const auto& obj = root.get_child("objective", empty);
  check_keys(obj, "[objective]", {"kind", "zeta", "z0", "z0_imag", "q_lb_ref", "field_index", "feed_index",
                                  "excitation_index", "sign"});
  job.objective.kind = parse_objective_kind(get<std::string>(obj, "kind", "q"));
  job.objective.zeta = get<double>(obj, "zeta", 0.0);
  job.objective.z0 = cplx(get<double>(obj, "z0", 50.0), get<double>(obj, "z0_imag", 0.0));
  const std::string qlb = get<std::string>(obj, "q_lb_ref", "auto");
  if (qlb == "auto") {
    job.q_lb_auto = true;
  } else {
    job.objective.q_lb_ref = get<double>(obj, "q_lb_ref", kNaN);
  }
  job.objective.field_index = get<Index>(obj, "field_index", 0);
  job.objective.feed_index = get<Index>(obj, "feed_index", -1);
  job.objective.excitation_index = get<Index>(obj, "excitation_index", 0);
  job.objective.sign = get<int>(obj, "sign", 0);
  if (job.objective.sign < -1 || job.objective.sign > 1) throw ConfigError("sign must be -1, 0 or 1");
  if (job.objective.zeta < 0.0) throw ConfigError("zeta must be non-negative");

  RunConfig& r = job.run;
  const auto& ga = root.get_child("ga", empty);
  check_keys(ga, "[ga]", {"n_agents", "max_global_iters", "eps_glob", "seed", "crossover_rate", "mutation_rate",
                          "tournament_size", "elitism_count", "init_fill_probability", "stall_generations",
                          "threads"});
  r.n_agents = get<int>(ga, "n_agents", r.n_agents);
  r.max_global_iters = get<int>(ga, "max_global_iters", r.max_global_iters);
  r.eps_glob = get<double>(ga, "eps_glob", r.eps_glob);
  r.rng_seed = get<std::uint64_t>(ga, "seed", r.rng_seed);
  r.crossover_rate = get<double>(ga, "crossover_rate", r.crossover_rate);
  const std::string mut = get<std::string>(ga, "mutation_rate", "auto");
  r.mutation_rate = mut == "auto" ? -1.0 : get<double>(ga, "mutation_rate", -1.0);
  r.tournament_size = get<int>(ga, "tournament_size", r.tournament_size);
  r.elitism_count = get<int>(ga, "elitism_count", r.elitism_count);
  r.init_fill_probability = get<double>(ga, "init_fill_probability", r.init_fill_probability);
  r.stall_generations = get<int>(ga, "stall_generations", r.stall_generations);
  r.threads = get<int>(ga, "threads", r.threads);

  const auto& loc = root.get_child("local", empty);
  check_keys(loc, "[local]", {"eps_loc", "max_local_iters", "refactor_period"});
  r.eps_loc = get<double>(loc, "eps_loc", r.eps_loc);
  r.max_local_iters = get<int>(loc, "max_local_iters", r.max_local_iters);
  r.refactor_period = get<int>(loc, "refactor_period", r.refactor_period);

  const auto& out = root.get_child("output", empty);
  check_keys(out, "[output]", {"dir", "log_wall_time", "bound"});
  const std::string dir = get<std::string>(out, "dir", ".");
  r.output_dir = std::filesystem::path(dir).is_absolute() ? dir : (base / dir).string();
  r.log_wall_time = get_bool(out, "log_wall_time", true);
  const std::string bound = get<std::string>(out, "bound", "none");
  if (bound == "auto")
    job.bound_auto = true;
  else if (bound != "none")
    job.bound_value = get<double>(out, "bound", kNaN);

  const auto& sw = root.get_child("sweep", empty);
  check_keys(sw, "[sweep]", {"zeta"});
  job.zeta_spec = get<std::string>(sw, "zeta", "");

  r.validate();
  return job;
}

int threads_from_env(int flag) {
  if (const char* env = std::getenv("MEMDES_THREADS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 0 || v > std::numeric_limits<int>::max())
      throw ConfigError(std::string("bad MEMDES_THREADS value '") + env + "'");
    return static_cast<int>(v);
  }
  return flag;
}

}  // namespace memdes::cli
