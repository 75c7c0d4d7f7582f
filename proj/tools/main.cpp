#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace memdes::cli;

namespace {

void add_rlc(CLI::App* sub, GenOptions& g) {
  sub->add_option("--n", g.rlc.n, "Number of cells")->check(CLI::PositiveNumber);
  sub->add_option("--R", g.rlc.R, "Series resistance per cell (Ohm); one value broadcasts");
  sub->add_option("--L", g.rlc.L, "Inductance per cell (H)");
  sub->add_option("--C", g.rlc.C, "Capacitance per cell (F)");
  sub->add_option("--coupling", g.rlc.coupling, "Mutual coupling factor between neighbours");
  sub->add_option("--f", g.rlc.frequency_hz, "Frequency (Hz)");
  sub->add_flag("!--no-feed", g.rlc.fix_feed, "Do not fix cell 0 as the feed");
}

void add_random(CLI::App* sub, GenOptions& g) {
  sub->add_option("--n", g.random.n, "Number of DOF")->check(CLI::PositiveNumber);
  sub->add_option("--seed", g.random.seed, "Generator seed");
  sub->add_option("--loss", g.random.loss_fraction, "Relative ohmic loss");
  sub->add_option("--scale", g.random.impedance_scale, "Impedance scale");
  sub->add_option("--chip", g.random.chip_count, "Trailing DOF forming the lossy chip");
  sub->add_flag("!--no-feed", g.random.with_feed, "No fixed delta-gap DOF");
  sub->add_option("--tm-modes", g.tm_modes, "Also synthesize a TM projector with this many rows");
  sub->add_option("--tm-seed", g.tm_seed, "Seed of the TM projector");
}

void add_wire(CLI::App* sub, GenOptions& g) {
  sub->add_option("--ndip", g.wire.n_dipoles, "Number of dipoles")->check(CLI::PositiveNumber);
  sub->add_option("--length", g.wire.length_over_lambda, "Dipole length / wavelength");
  sub->add_option("--spacing", g.wire.spacing_over_lambda, "Dipole spacing / wavelength");
  sub->add_option("--segments", g.wire.segments_per_dipole, "Basis functions per dipole (odd)");
  sub->add_option("--radius", g.wire.wire_radius, "Wire radius (m); 0 picks length/240");
  sub->add_option("--sigma", g.wire.conductivity, "Conductivity (S/m); inf for PEC");
  sub->add_option("--f", g.wire.frequency_hz, "Frequency (Hz)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memetic topology optimization over MoM operator bundles"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = logical cores; MEMDES_THREADS overrides)");

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate an operator bundle");
  gen_cmd->require_subcommand(1);
  gen_cmd->add_option("-o,--out", gen.out, "Output OPB1 file")->required();
  auto* gen_rlc = gen_cmd->add_subcommand("rlc", "Coupled series RLC ladder");
  auto* gen_random = gen_cmd->add_subcommand("random", "Random passive bundle");
  auto* gen_wire = gen_cmd->add_subcommand("wire", "Array of thin-wire dipoles");
  add_rlc(gen_rlc, gen);
  add_random(gen_random, gen);
  add_wire(gen_wire, gen);

  BoundOptions bound;
  double bound_z0 = 50;
  auto* bound_cmd = app.add_subcommand("bound", "Fundamental bound of a bundle");
  bound_cmd->add_option("metric", bound.metric, "q, q_tm, gain or pabs")->required();
  bound_cmd->add_option("bundle", bound.bundle, "OPB1 file")->required();
  bound_cmd->add_flag("--tm", bound.tm, "Use the TM projector in the Q bound");
  bound_cmd->add_option("--field", bound.field_index, "Far-field row");
  bound_cmd->add_option("--z0", bound_z0, "Reference impedance (Ohm)");
  bound_cmd->add_option("--vin", bound.v_in, "Feed voltage magnitude (V)");
  bound_cmd->add_option("--excitation", bound.excitation_index, "Excitation column");
  bound_cmd->add_option("--feed", bound.feed_index, "Delta-gap DOF");
  bound_cmd->add_flag("--validation", bound.validation_mode, "Gain: drop matching and power balance");

  std::filesystem::path opt_config;
  auto* opt_cmd = app.add_subcommand("optimize", "Run the memetic optimizer on a job file");
  opt_cmd->add_option("config", opt_config, "Job INI file")->required();

  std::filesystem::path sweep_config;
  std::string zeta_spec;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep the matching weight of a Q job");
  sweep_cmd->add_option("config", sweep_config, "Job INI file")->required();
  sweep_cmd->add_option("--zeta", zeta_spec, "a:b:n, a,b,c or a single value");

  std::filesystem::path inspect_bundle;
  bool verify = false;
  std::uint64_t verify_seed = 1;
  auto* inspect_cmd = app.add_subcommand("inspect", "Summarize and check a bundle");
  inspect_cmd->add_option("bundle", inspect_bundle, "OPB1 file")->required();
  inspect_cmd->add_flag("--verify", verify, "Check reanalysis and bounds against the oracles");
  inspect_cmd->add_option("--seed", verify_seed, "Seed of the verification samples");

  std::filesystem::path sens_bundle, sens_word;
  std::optional<std::filesystem::path> sens_out;
  ObjectiveFlags obj;
  auto* sens_cmd = app.add_subcommand("sensitivity", "Per-DOF τ map of a word");
  sens_cmd->add_option("bundle", sens_bundle, "OPB1 file")->required();
  sens_cmd->add_option("word", sens_word, "Word file (best_word.txt)")->required();
  sens_cmd->add_option("--objective", obj.kind, "q, q_matched, realized_gain or absorbed_power");
  sens_cmd->add_option("--zeta", obj.zeta, "Matching weight");
  sens_cmd->add_option("--z0", obj.z0, "Reference impedance (Ohm)");
  sens_cmd->add_option("--q-lb", obj.q_lb, "Q normalization: auto or a value");
  sens_cmd->add_option("--field", obj.field_index, "Far-field row");
  sens_cmd->add_option("--feed", obj.feed_index, "Delta-gap DOF");
  sens_cmd->add_option("--excitation", obj.excitation_index, "Excitation column");
  sens_cmd->add_option("-o,--out", sens_out, "CSV file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  return guarded([&]() -> int {
    if (*gen_cmd) {
      gen.kind = *gen_rlc ? "rlc" : *gen_random ? "random" : "wire";
      return cmd_gen(gen);
    }
    if (*bound_cmd) {
      bound.z0 = bound_z0;
      return cmd_bound(bound);
    }
    if (*opt_cmd) return cmd_optimize(opt_config, threads);
    if (*sweep_cmd) return cmd_sweep(sweep_config, zeta_spec, threads);
    if (*inspect_cmd) return cmd_inspect(inspect_bundle, verify, verify_seed);
    return cmd_sensitivity(sens_bundle, sens_word, obj, sens_out);
  });
}
