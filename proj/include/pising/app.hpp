#pragma once

// Command implementations behind the pising executable: configuration,
// simulate, validate, bench, rngtest and selftest.  Each command returns a
// report; printing is separate so the commands are testable.

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "pising/engine.hpp"
#include "pising/observables.hpp"
#include "pising/randomness.hpp"
#include "pising/reference.hpp"
#include "pising/rng.hpp"

namespace pising {

inline constexpr const char* kThreadsEnv = "PISING_THREADS";

struct SimConfig {
  int m = 64;
  int n = 64;
  std::vector<double> temperatures;  // takes precedence over the range
  std::optional<double> t_start, t_stop, t_step;
  double coupling = 1.0;
  std::uint64_t sweeps = 1000;
  std::uint64_t measure_interval = 100;
  int n_sim = 1;
  std::uint64_t seed = 1;
  InitMode init = InitMode::Random;
  std::string output;  // empty or "-" = standard output
  int threads = 0;
  std::optional<double> tolerance;  // validate: overrides the built-in bands
  std::uint64_t warmup = 10;        // bench: untimed sweeps before timing
};

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "m",      "n",    "temperature", "t_start", "t_stop",  "t_step",    "J",     "sweeps",
      "measure_interval", "n_sim", "seed", "init", "output", "threads", "tolerance", "warmup"};
  return keys;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty()) {
    throw std::invalid_argument("invalid value for '" + key + "': '" + text + "'");
  }
  return value;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_number<double>(key, item));
  }
  if (out.empty()) throw std::invalid_argument("empty list for '" + key + "'");
  return out;
}

}  // namespace detail

/// Parses flat `key = value` lines; '#' starts a comment.
inline std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(number) +
                                  ": expected 'key = value'");
    }
    const auto key = detail::trim(std::string_view(body).substr(0, eq));
    const auto value = detail::trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config line " + std::to_string(number) + ": missing key");
    }
    out[key] = value;
  }
  return out;
}

inline std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

inline void apply_setting(SimConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_number;
  if (key == "m") {
    c.m = parse_number<int>(key, value);
  } else if (key == "n") {
    c.n = parse_number<int>(key, value);
  } else if (key == "temperature") {
    c.temperatures = detail::parse_list(key, value);
  } else if (key == "t_start") {
    c.t_start = parse_number<double>(key, value);
  } else if (key == "t_stop") {
    c.t_stop = parse_number<double>(key, value);
  } else if (key == "t_step") {
    c.t_step = parse_number<double>(key, value);
  } else if (key == "J") {
    c.coupling = parse_number<double>(key, value);
  } else if (key == "sweeps") {
    c.sweeps = parse_number<std::uint64_t>(key, value);
  } else if (key == "measure_interval") {
    c.measure_interval = parse_number<std::uint64_t>(key, value);
  } else if (key == "n_sim") {
    c.n_sim = parse_number<int>(key, value);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "init") {
    if (value == "random") {
      c.init = InitMode::Random;
    } else if (value == "all-up" || value == "all_up") {
      c.init = InitMode::AllUp;
    } else {
      throw std::invalid_argument("init must be 'random' or 'all-up', got '" + value + "'");
    }
  } else if (key == "output") {
    c.output = value;
  } else if (key == "threads") {
    c.threads = parse_number<int>(key, value);
  } else if (key == "tolerance") {
    c.tolerance = parse_number<double>(key, value);
  } else if (key == "warmup") {
    c.warmup = parse_number<std::uint64_t>(key, value);
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

inline SimConfig make_config(const std::map<std::string, std::string>& settings,
                             SimConfig base = {}) {
  for (const auto& [k, v] : settings) apply_setting(base, k, v);
  return base;
}

/// Explicit temperature list, or the inclusive range t_start..t_stop.
inline std::vector<double> resolve_temperatures(const SimConfig& c) {
  if (!c.temperatures.empty()) return c.temperatures;
  if (!c.t_start && !c.t_stop && !c.t_step) {
    throw std::invalid_argument("no temperatures: set 'temperature' or t_start/t_stop/t_step");
  }
  if (!c.t_start || !c.t_stop || !c.t_step) {
    throw std::invalid_argument("a temperature range needs t_start, t_stop and t_step");
  }
  if (!(*c.t_step > 0.0)) throw std::invalid_argument("t_step must be > 0");
  if (*c.t_stop < *c.t_start) throw std::invalid_argument("t_stop must be >= t_start");
  const auto count =
      static_cast<std::size_t>(std::floor((*c.t_stop - *c.t_start) / *c.t_step + 1e-9)) + 1;
  std::vector<double> out;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = *c.t_start + static_cast<double>(k) * *c.t_step;
    out.push_back(std::round(t * 1e12) / 1e12);
  }
  return out;
}

inline RunConfig to_run_config(const SimConfig& c) {
  RunConfig r;
  r.dims = make_dims(c.m, c.n);
  r.temperatures = resolve_temperatures(c);
  r.replicas = c.n_sim;
  r.coupling = c.coupling;
  r.sweeps = c.sweeps;
  r.measure_interval = c.measure_interval;
  r.seed = c.seed;
  r.init = c.init;
  r.threads = c.threads;
  validate(r);
  return r;
}

// ---------------------------------------------------------------- simulate

/// Locale-independent equivalent of %.9g.
inline std::string format_g9(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

inline void write_csv(const Trajectory& t, std::ostream& out) {
  out << "sweep,sim,temperature,abs_magnetization,energy_per_spin\n";
  for (const auto& r : t.records) {
    out << r.sweep << ',' << r.sim << ',' << format_g9(r.temperature) << ','
        << format_g9(r.abs_magnetization) << ',' << format_g9(r.energy_per_spin) << '\n';
  }
}

inline std::string csv_string(const Trajectory& t) {
  std::ostringstream ss;
  write_csv(t, ss);
  return ss.str();
}

inline Trajectory simulate(const SimConfig& c) {
  const auto traj = run(to_run_config(c));
  if (c.output.empty() || c.output == "-") return traj;
  std::ofstream out(c.output, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write output file '" + c.output + "'");
  write_csv(traj, out);
  if (!out) throw std::runtime_error("error writing output file '" + c.output + "'");
  return traj;
}

// ---------------------------------------------------------------- validate

struct ValidateRow {
  Summary summary;         // replicas combined
  std::string criterion;   // human-readable rule
  std::optional<bool> pass;  // nullopt: no rule applies near the transition
};

struct ValidateReport {
  std::vector<ValidateRow> rows;
  std::optional<double> tc_estimate;
  std::vector<std::string> warnings;
  bool pass = true;
};

/// Linear interpolation of the first downward crossing of |M| = level
/// between adjacent temperatures (ascending).
inline std::optional<double> crossing_temperature(const std::vector<double>& temps,
                                                  const std::vector<double>& values,
                                                  double level = 0.5) {
  for (std::size_t k = 0; k + 1 < temps.size(); ++k) {
    if (values[k] >= level && values[k + 1] < level) {
      const double f = (values[k] - level) / (values[k] - values[k + 1]);
      return temps[k] + f * (temps[k + 1] - temps[k]);
    }
  }
  return std::nullopt;
}

inline ValidateRow judge(const Summary& s, std::optional<double> tolerance, double coupling) {
  ValidateRow row{s, "", std::nullopt};
  const double t = s.temperature / coupling;
  const double tc = kCriticalTemperature;
  char buf[96];
  if (t >= tc + 0.5) {
    const double cap = tolerance.value_or(0.10);
    std::snprintf(buf, sizeof buf, "|M| <= %.3f", cap);
    row.pass = s.mean <= cap;
  } else if (t <= 2.1) {
    const double tol = tolerance.value_or(t <= 1.75 ? 0.01 : 0.02);
    std::snprintf(buf, sizeof buf, "|dev| <= %.3f", tol);
    row.pass = std::fabs(s.deviation) <= tol;
  } else {
    std::snprintf(buf, sizeof buf, "n/a (critical region)");
  }
  row.criterion = buf;
  return row;
}

inline ValidateReport validate_trajectory(const Trajectory& traj, int replicas,
                                          std::optional<double> tolerance) {
  ValidateReport rep;
  const std::size_t temps = traj.simulations() / static_cast<std::size_t>(replicas);
  std::vector<double> ts, ms;
  for (std::size_t k = 0; k < temps; ++k) {
    Summary combined;
    double se2 = 0.0;
    for (int r = 0; r < replicas; ++r) {
      const auto s = summarize(traj, k * static_cast<std::size_t>(replicas) + static_cast<std::size_t>(r));
      if (r == 0) combined = s;
      else {
        combined.mean += s.mean;
        combined.samples += s.samples;
        combined.t0 = std::max(combined.t0, s.t0);
        combined.g = std::max(combined.g, s.g);
      }
      se2 += s.std_error * s.std_error;
    }
    combined.mean /= replicas;
    combined.std_error = std::sqrt(se2) / replicas;
    combined.deviation = combined.mean - combined.analytic;
    auto row = judge(combined, tolerance, traj.coupling);
    if (row.pass && !*row.pass) rep.pass = false;
    ts.push_back(combined.temperature);
    ms.push_back(combined.mean);
    rep.rows.push_back(std::move(row));
  }
  std::vector<std::size_t> order(ts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ts[a] < ts[b]; });
  std::vector<double> st, sm;
  for (auto i : order) {
    st.push_back(ts[i]);
    sm.push_back(ms[i]);
  }
  const double tc = kCriticalTemperature * traj.coupling;
  if (st.size() < 2 || st.front() >= tc || st.back() <= tc) {
    rep.warnings.push_back("temperature range does not span Tc; Tc estimate omitted");
  } else if (auto est = crossing_temperature(st, sm)) {
    rep.tc_estimate = est;
    if (*est < 2.1 * traj.coupling || *est > 2.45 * traj.coupling) rep.pass = false;
  } else {
    rep.warnings.push_back("no |M| = 0.5 crossing found; Tc estimate omitted");
  }
  return rep;
}

inline ValidateReport validate(const SimConfig& c) {
  const auto traj = simulate(c);
  return validate_trajectory(traj, c.n_sim, c.tolerance);
}

inline void print(const ValidateReport& rep, std::ostream& out) {
  char buf[256];
  out << "temperature  mean|M|     stderr     onsager    deviation  t0    g        rule             result\n";
  for (const auto& r : rep.rows) {
    const auto& s = r.summary;
    std::snprintf(buf, sizeof buf, "%-11.4f  %-10.6f  %-9.6f  %-9.6f  %+-9.6f  %-4zu  %-7.2f  %-15s  %s\n",
                  s.temperature, s.mean, s.std_error, s.analytic, s.deviation, s.t0, s.g,
                  r.criterion.c_str(), r.pass ? (*r.pass ? "PASS" : "FAIL") : "-");
    out << buf;
  }
  for (const auto& w : rep.warnings) out << "warning: " << w << '\n';
  if (rep.tc_estimate) {
    std::snprintf(buf, sizeof buf, "Tc estimate (|M| = 0.5 crossing): %.4f (exact %.6f, accepted [2.1, 2.45])\n",
                  *rep.tc_estimate, kCriticalTemperature);
    out << buf;
  }
  out << (rep.pass ? "validate: PASS\n" : "validate: FAIL\n");
}

// ---------------------------------------------------------------- bench

struct BenchRow {
  std::size_t simulations = 0;
  std::uint64_t sweeps = 0;
  std::uint64_t attempts = 0;
  std::uint64_t expected_attempts = 0;
  double elapsed_ns = 0.0;

  double flip_rate() const noexcept {
    return elapsed_ns > 0.0 ? static_cast<double>(attempts) / elapsed_ns : 0.0;
  }
  double iteration_period_ms(const LatticeDims& d) const noexcept {
    const double r = flip_rate();
    return r > 0.0 ? static_cast<double>(d.spins() * simulations) / r * 1e-6 : 0.0;
  }
};

struct BenchReport {
  LatticeDims dims{};
  int threads = 1;
  std::vector<BenchRow> rows;  // weak scaling; the last row is the full config

  bool counts_ok() const noexcept {
    return std::all_of(rows.begin(), rows.end(),
                       [](const BenchRow& r) { return r.attempts == r.expected_attempts; });
  }
};

inline BenchRow bench_once(const RunConfig& rc, std::vector<double> temps, std::uint64_t warmup) {
  EngineConfig ec = engine_config(rc);
  ec.temperatures = std::move(temps);
  SimState state(ec);
  state.sweep(warmup);
  const auto before = state.attempts();
  const auto t0 = std::chrono::steady_clock::now();
  state.sweep(rc.sweeps);
  const auto t1 = std::chrono::steady_clock::now();
  BenchRow row;
  row.simulations = state.simulations();
  row.sweeps = rc.sweeps;
  row.attempts = state.attempts() - before;
  row.expected_attempts = rc.dims.spins() * row.simulations * rc.sweeps;
  row.elapsed_ns = static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
  return row;
}

inline BenchReport bench(const SimConfig& c) {
  const auto rc = to_run_config(c);
  if (rc.sweeps == 0) throw std::invalid_argument("bench needs sweeps >= 1 timed sweeps");
  const auto temps = simulation_temperatures(rc);
  BenchReport rep;
  rep.dims = rc.dims;
  rep.threads = resolve_thread_count(rc.threads);
  std::vector<std::size_t> sizes;
  for (std::size_t k = 1; k < temps.size(); k *= 2) sizes.push_back(k);
  sizes.push_back(temps.size());
  for (auto k : sizes) {
    rep.rows.push_back(bench_once(rc, std::vector<double>(temps.begin(), temps.begin() + static_cast<std::ptrdiff_t>(k)), c.warmup));
  }
  return rep;
}

inline void print(const BenchReport& rep, std::ostream& out) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "lattice %dx%d, threads %d\n", rep.dims.m, rep.dims.n, rep.threads);
  out << buf;
  out << "N_sim  sweeps    attempts        expected        flips/ns    T_iter(ms)\n";
  for (const auto& r : rep.rows) {
    std::snprintf(buf, sizeof buf, "%-5zu  %-8llu  %-14llu  %-14llu  %-10.4f  %.6f\n", r.simulations,
                  static_cast<unsigned long long>(r.sweeps), static_cast<unsigned long long>(r.attempts),
                  static_cast<unsigned long long>(r.expected_attempts), r.flip_rate(),
                  r.iteration_period_ms(rep.dims));
    out << buf;
  }
  out << "attempt counts: " << (rep.counts_ok() ? "exact" : "MISMATCH") << '\n';
  out << "Rates are host-hardware measurements of the same metrics, not comparable to\n"
         "wafer-scale hardware figures.\n";
}

// ---------------------------------------------------------------- rngtest

struct RngTestOptions {
  std::string source = "internal";  // internal | file
  std::string file;
  std::size_t bits = 6'400'000;
  std::size_t floats = 1'000'000;
  std::size_t median_floats = std::size_t{1} << 23;
  std::uint64_t seed = 1;
};

struct RngTestReport {
  std::vector<TestReport> bit_tests;
  std::vector<TestReport> median_tests;
  std::optional<HistogramReport> fine;    // bin width 0.01
  std::optional<HistogramReport> coarse;  // bin width 0.1
  std::optional<JointReport> joint;

  static constexpr double kFineSpread = 0.08;
  static constexpr double kCoarseSpread = 0.02;

  bool pass() const {
    bool ok = all_pass(bit_tests) && all_pass(median_tests);
    if (fine) ok = ok && !fine->degenerate && fine->spread <= kFineSpread;
    if (coarse) ok = ok && !coarse->degenerate && coarse->spread <= kCoarseSpread;
    if (joint) ok = ok && joint->p_value >= kSignificance;
    return ok;
  }
};

inline RngTestReport rngtest(const RngTestOptions& o) {
  RngTestReport rep;
  if (o.source == "file") {
    if (o.file.empty()) throw std::invalid_argument("rngtest: --file is required for source=file");
    rep.bit_tests = run_battery(read_bitstream(o.file));
    return rep;
  }
  if (o.source != "internal") {
    throw std::invalid_argument("rngtest: source must be 'internal' or 'file'");
  }
  Xoshiro256pp bit_rng(o.seed, 0);
  rep.bit_tests = run_battery(generate_bits(bit_rng, o.bits));
  if (o.floats > 0) {
    Xoshiro256pp float_rng(o.seed, 1);
    const auto f = generate_unit_floats(float_rng, o.floats);
    rep.fine = frequency_histogram(f, 0.01);
    rep.coarse = frequency_histogram(f, 0.1);
    rep.joint = lag1_joint(f);
  }
  if (o.median_floats > 0) {
    Xoshiro256pp median_rng(o.seed, 2);
    const auto f = generate_unit_floats(median_rng, o.median_floats);
    rep.median_tests = run_battery(median_threshold_bits(f));
  }
  return rep;
}

inline void print(const RngTestReport& rep, std::ostream& out) {
  char buf[256];
  auto section = [&](const char* title, const std::vector<TestReport>& tests) {
    if (tests.empty()) return;
    out << title << '\n';
    for (const auto& t : tests) {
      std::snprintf(buf, sizeof buf, "  %-22s n=%-9zu p=%-10.6f %s\n", t.name.c_str(), t.length,
                    t.p_value, t.pass ? "PASS" : "FAIL");
      out << buf;
    }
  };
  section("bit battery:", rep.bit_tests);
  section("median-thresholded floats:", rep.median_tests);
  auto hist = [&](const char* label, const std::optional<HistogramReport>& h, double limit) {
    if (!h) return;
    std::snprintf(buf, sizeof buf, "  bin %-5s spread=%.4f (limit %.2f) %s\n", label, h->spread, limit,
                  !h->degenerate && h->spread <= limit ? "PASS" : "FAIL");
    out << buf;
  };
  if (rep.fine || rep.coarse) out << "float histogram:\n";
  hist("0.01", rep.fine, RngTestReport::kFineSpread);
  hist("0.1", rep.coarse, RngTestReport::kCoarseSpread);
  if (rep.joint) {
    std::snprintf(buf, sizeof buf, "lag-1 joint %dx%d: chi2=%.1f dof=%.0f p=%.6f %s\n", rep.joint->bins,
                  rep.joint->bins, rep.joint->chi_square, rep.joint->dof, rep.joint->p_value,
                  rep.joint->p_value >= kSignificance ? "PASS" : "FAIL");
    out << buf;
  }
  out << (rep.pass() ? "rngtest: PASS\n" : "rngtest: FAIL\n");
}

// ---------------------------------------------------------------- selftest

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

inline PlainLattice random_lattice(LatticeDims dims, Xoshiro256pp& rng) {
  return PlainLattice::random(dims, [&] { return rng.next_bits(1) != 0; });
}

inline bool adder_exhaustive() {
  for (unsigned in = 0; in < 16; ++in) {
    for (int lane = 0; lane < kBitsPerWord; ++lane) {
      auto w = [&](unsigned b) { return static_cast<Word>(((in >> b) & 1U) << lane); };
      const auto r = add4_word(w(0), w(1), w(2), w(3));
      const unsigned got = ((r.ones >> lane) & 1U) + 2U * ((r.twos >> lane) & 1U) + 4U * ((r.fours >> lane) & 1U);
      if (got != static_cast<unsigned>(std::popcount(in))) return false;
      const Word others = static_cast<Word>(~(1U << lane));
      if ((r.ones & others) || (r.twos & others) || (r.fours & others)) return false;
    }
  }
  return true;
}

/// Fast invariant suite.  With `inject_fault` the packed engine runs with a
/// broken adder carry, which the oracle checks must detect.
inline std::vector<CheckResult> selftest(bool inject_fault = false) {
  const KernelFault fault = inject_fault ? KernelFault::DropAdderCarry : KernelFault::None;
  std::vector<CheckResult> out;
  Xoshiro256pp rng(2024, 7);

  {
    bool ok = true;
    for (const auto d : {make_dims(4, 32), make_dims(8, 64), make_dims(12, 96), make_dims(16, 32)}) {
      for (int k = 0; k < 5; ++k) {
        const auto l = random_lattice(d, rng);
        ok = ok && unpack(pack(l)) == l;
      }
    }
    out.push_back({"pack round-trip", ok, "20 random lattices, 4 shapes"});
  }
  out.push_back({"adder exhaustive", adder_exhaustive(), "16 inputs x 16 lanes"});
  {
    std::size_t bad = 0;
    const int states = 50;
    for (int k = 0; k < states; ++k) bad += neighbor_code_mismatches(random_lattice(make_dims(12, 96), rng), fault);
    out.push_back({"neighbor audit", bad == 0,
                   std::to_string(states) + " random 12x96 states, " + std::to_string(bad) + " mismatches"});
  }
  const auto start = random_lattice(make_dims(12, 96), rng);
  const auto eq = check_equivalence(start, 2.0, 99, 100, fault);
  out.push_back({"halo audit", eq.halo_mismatches == 0,
                 std::to_string(eq.halo_checks) + " boundary updates, " +
                     std::to_string(eq.halo_mismatches) + " stale words"});
  out.push_back({"oracle equivalence", eq.mismatched_sweeps == 0 && eq.final_mismatches == 0,
                 "12x96, T=2.0, 100 sweeps, " + std::to_string(eq.mismatched_sweeps) +
                     " diverged sweeps, " + std::to_string(eq.draws) + " draws"});
  return out;
}

inline void print(const std::vector<CheckResult>& checks, std::ostream& out) {
  bool ok = true;
  for (const auto& c : checks) {
    out << (c.pass ? "PASS  " : "FAIL  ") << c.name << " (" << c.detail << ")\n";
    ok = ok && c.pass;
  }
  out << (ok ? "selftest: PASS\n" : "selftest: FAIL\n");
}

inline bool all_pass(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

}  // namespace pising
