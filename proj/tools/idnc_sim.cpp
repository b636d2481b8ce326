#include "idnc/idnc.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_guard = 3;
constexpr int exit_internal = 4;

struct Options {
  std::string config;
  std::string schedulers;
  std::string sweep;
  std::size_t runs = 0;
  std::uint64_t seed = 0;
  std::string out;
  bool dump_transcripts = false;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* runs_opt = nullptr;
};

idnc::ExperimentSpec load(const Options& o) {
  idnc::ExperimentSpec spec = idnc::load_experiment(o.config);
  if (!o.schedulers.empty()) spec.schedulers = idnc::split_names(o.schedulers);
  if (!o.sweep.empty()) spec.sweep = idnc::parse_sweep_flag(o.sweep);
  if (o.runs_opt != nullptr && o.runs_opt->count() > 0) spec.runs = o.runs;
  if (o.seed_opt != nullptr && o.seed_opt->count() > 0) spec.scenario.seed = o.seed;
  if (!o.out.empty()) spec.out = o.out;
  spec.dump_transcripts = o.dump_transcripts;
  return spec;
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream file(out, std::ios::binary);
  if (!file) throw idnc::ConfigError("cannot write " + out);
  file << text;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instantly decodable network coding for layered video over D2D links"};
  app.require_subcommand(1);
  app.footer(
      "CSV written by run and sweep:\n"
      "  sweep_variable,scheduler,runs,mean_psnr,std_psnr,mean_distortion\n"
      "sweep_variable is the axis value, or \"-\" without a sweep. PSNR in dB,\n"
      "std_psnr is the sample standard deviation over runs, mean_distortion is the\n"
      "final distortion averaged over devices and runs.\n\n"
      "Exit codes: 0 success, 2 bad input, 3 instance too large, 4 internal error.");

  Options o;
  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "Write the report here instead of stdout");
    sub->add_option("--seed", o.seed, "Override the master seed");
  };

  auto* dump = app.add_subcommand("graph-dump", "Print the IDNC graph and its maximal independent sets");
  add_common(dump);

  auto* run = app.add_subcommand("run", "Monte-Carlo runs of one or more schedulers");
  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo runs over a parameter sweep");
  for (auto* sub : {run, sweep}) {
    add_common(sub);
    sub->add_option("--scheduler", o.schedulers, "Comma list of tsmis, pcb, fcd, mdp");
    o.runs_opt = sub->add_option("--runs", o.runs, "Episodes per cell");
    sub->add_flag("--dump-transcripts", o.dump_transcripts, "Per-slot transcripts on stderr");
  }
  sweep->add_option("--sweep", o.sweep, "axis=v1,v2,... with axis theta, connectivity or devices");

  auto* solve = app.add_subcommand("mdp-solve", "Solve the finite-horizon MDP from the initial state");
  add_common(solve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }
  for (auto* sub : {dump, run, sweep, solve}) {
    if (sub->parsed()) {
      o.seed_opt = sub->get_option("--seed");
      if (sub == run || sub == sweep) o.runs_opt = sub->get_option("--runs");
    }
  }

  try {
    idnc::ExperimentSpec spec = load(o);
    if (dump->parsed()) {
      emit(idnc::graph_dump(spec), spec.out);
    } else if (solve->parsed()) {
      emit(idnc::mdp_solve(spec), spec.out);
    } else {
      if (run->parsed()) spec.sweep.reset();
      if (sweep->parsed() && !spec.sweep) throw idnc::ConfigError("sweep needs --sweep or a sweep block");
      emit(idnc::run_sweep(spec, spec.dump_transcripts ? &std::cerr : nullptr), spec.out);
    }
    return exit_ok;
  } catch (const idnc::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_config;
  } catch (const idnc::GuardExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_guard;
  } catch (const idnc::UnreachableDevice& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return exit_internal;
  }
}
