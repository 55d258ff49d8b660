#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "pising/app.hpp"

namespace {

struct Options {
  std::string config_path;
  std::map<std::string, std::string> flags;
};

void add_config_options(CLI::App& cmd, Options& o) {
  cmd.add_option("--config", o.config_path, "flat key = value file ('#' comments)");
  const std::map<std::string, std::string> help{
      {"m", "lattice extent along the cell axis (multiple of 4, >= 4)"},
      {"n", "lattice extent along the memory axis (multiple of 32, >= 32)"},
      {"temperature", "comma-separated temperatures (overrides the range)"},
      {"t_start", "first temperature of an inclusive range"},
      {"t_stop", "last temperature of an inclusive range"},
      {"t_step", "temperature step (> 0)"},
      {"J", "coupling constant (> 0)"},
      {"sweeps", "number of sweeps (timed sweeps for bench)"},
      {"measure_interval", "sweeps between measurements"},
      {"n_sim", "independent simulations per temperature"},
      {"seed", "master seed"},
      {"init", "initial state: random | all-up"},
      {"output", "CSV output path (default: standard output)"},
      {"threads", "worker threads, 0 = all hardware threads"},
      {"tolerance", "validate: replace the built-in |M| tolerances"},
      {"warmup", "bench: untimed sweeps before each timed window"},
  };
  for (const auto& key : pising::config_keys()) {
    cmd.add_option_function<std::string>(
        "--" + key, [&o, key](const std::string& v) { o.flags[key] = v; }, help.at(key));
  }
}

pising::SimConfig resolve(const Options& o) {
  std::map<std::string, std::string> settings;
  if (!o.config_path.empty()) settings = pising::read_config_file(o.config_path);
  if (const char* env = std::getenv(pising::kThreadsEnv); env != nullptr && *env != '\0') {
    settings["threads"] = env;
  }
  for (const auto& [k, v] : o.flags) settings[k] = v;
  return pising::make_config(settings);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bit-packed checkerboard Metropolis simulator for the 2D Ising model"};
  app.require_subcommand(1);
  app.footer(std::string("Environment: ") + pising::kThreadsEnv +
             " overrides the thread count of the config file; --threads overrides both.");

  Options sim_opts, val_opts, bench_opts;
  auto* sim = app.add_subcommand("simulate", "run simulations and write a CSV trajectory");
  add_config_options(*sim, sim_opts);
  auto* val = app.add_subcommand("validate", "compare |M| with the exact solution, estimate Tc");
  add_config_options(*val, val_opts);
  auto* bench = app.add_subcommand("bench", "measure flips/ns and iteration period");
  add_config_options(*bench, bench_opts);

  pising::RngTestOptions rng_opts;
  auto* rng = app.add_subcommand("rngtest", "statistical battery over the random number generator");
  rng->add_option("--source", rng_opts.source, "internal | file")->capture_default_str();
  rng->add_option("--file", rng_opts.file, "bit file: ASCII 0/1 ('#' comments) or raw binary");
  rng->add_option("--bits", rng_opts.bits, "bits for the battery")->capture_default_str();
  rng->add_option("--floats", rng_opts.floats, "floats for histogram and lag-1 tests")->capture_default_str();
  rng->add_option("--median-floats", rng_opts.median_floats, "floats thresholded at the median")
      ->capture_default_str();
  rng->add_option("--seed", rng_opts.seed, "generator seed")->capture_default_str();

  bool inject_fault = false;
  auto* self = app.add_subcommand("selftest", "fast invariant suite (under a minute)");
  self->add_flag("--inject-fault", inject_fault, "run with a broken adder carry; checks must fail");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      const auto cfg = resolve(sim_opts);
      const auto traj = pising::simulate(cfg);
      if (cfg.output.empty() || cfg.output == "-") pising::write_csv(traj, std::cout);
      return 0;
    }
    if (*val) {
      const auto rep = pising::validate(resolve(val_opts));
      pising::print(rep, std::cout);
      return rep.pass ? 0 : 1;
    }
    if (*bench) {
      const auto rep = pising::bench(resolve(bench_opts));
      pising::print(rep, std::cout);
      return rep.counts_ok() ? 0 : 1;
    }
    if (*rng) {
      const auto rep = pising::rngtest(rng_opts);
      pising::print(rep, std::cout);
      return rep.pass() ? 0 : 1;
    }
    if (*self) {
      const auto checks = pising::selftest(inject_fault);
      pising::print(checks, std::cout);
      return pising::all_pass(checks) ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
