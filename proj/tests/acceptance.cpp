// Acceptance suite: one PASS/FAIL line per criterion, tolerances fixed here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "pising/app.hpp"

using namespace pising;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& what) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Tolerances.
constexpr double kEquivalenceSeconds = 10.0;
constexpr double kNeighborAuditSeconds = 30.0;
constexpr double kTolT15 = 0.01;
constexpr double kTolT20 = 0.02;
constexpr double kMaxHighT = 0.10;
constexpr double kTcLow = 2.1;
constexpr double kTcHigh = 2.45;
constexpr double kFineSpread = 0.08;
constexpr double kCoarseSpread = 0.02;

EquivalenceReport equivalence() {
  const auto d = make_dims(12, 96);
  Xoshiro256pp rng(1001, 0);
  const auto start = random_lattice(d, rng);
  const auto t0 = Clock::now();
  const auto rep = check_equivalence(start, 2.0, 1002, 1000);
  const double secs = seconds_since(t0);
  report(1, rep.mismatched_sweeps == 0 && rep.final_mismatches == 0 && secs < kEquivalenceSeconds,
         fmt("12x96, T=2.0, 1000 sweeps: %zu diverged sweeps, %zu final mismatches, %zu draws, "
             "%.2f s (limit %.0f s)",
             rep.mismatched_sweeps, rep.final_mismatches, rep.draws, secs, kEquivalenceSeconds));
  return rep;
}

// Uses the boundary-update audits collected during the equivalence run.
void halos(const EquivalenceReport& rep) {
  report(3, rep.halo_mismatches == 0 && rep.halo_checks == 2000,
         fmt("halo audit after %zu boundary updates of the 12x96 run: %zu stale words",
             rep.halo_checks, rep.halo_mismatches));
}

void neighbor_audit() {
  const auto d = make_dims(12, 96);
  Xoshiro256pp rng(2001, 0);
  const auto t0 = Clock::now();
  std::size_t bad = 0;
  for (int k = 0; k < 1000; ++k) bad += neighbor_code_mismatches(random_lattice(d, rng));
  const double secs = seconds_since(t0);
  report(2, bad == 0 && secs < kNeighborAuditSeconds,
         fmt("1000 random 12x96 states: %zu mismatched codes, %.2f s (limit %.0f s)", bad, secs,
             kNeighborAuditSeconds));
}

void onsager() {
  RunConfig rc;
  rc.dims = make_dims(128, 128);
  rc.temperatures = {1.5, 2.0, 4.0};
  rc.sweeps = 20000;
  rc.measure_interval = 100;
  rc.seed = 3001;
  rc.init = InitMode::AllUp;
  const auto t0 = Clock::now();
  const auto traj = run(rc);
  const double secs = seconds_since(t0);
  const auto s15 = summarize(traj, 0);
  const auto s20 = summarize(traj, 1);
  const auto s40 = summarize(traj, 2);
  const bool pass = std::fabs(s15.deviation) <= kTolT15 && std::fabs(s20.deviation) <= kTolT20 &&
                    s40.mean <= kMaxHighT;
  report(4, pass,
         fmt("128x128, 20000 sweeps: T=1.5 |M|=%.5f+-%.5f (exact %.5f, tol %.2f); "
             "T=2.0 |M|=%.5f+-%.5f (exact %.5f, tol %.2f); T=4.0 |M|=%.5f (max %.2f); "
             "t0 = %zu/%zu/%zu samples; %.1f s",
             s15.mean, s15.std_error, s15.analytic, kTolT15, s20.mean, s20.std_error, s20.analytic,
             kTolT20, s40.mean, kMaxHighT, s15.t0, s20.t0, s40.t0, secs));
}

void tc_scan() {
  SimConfig c;
  c.m = 256;
  c.n = 256;
  c.t_start = 2.0;
  c.t_stop = 2.6;
  c.t_step = 0.05;
  c.sweeps = 20000;
  c.measure_interval = 100;
  c.seed = 4001;
  c.init = InitMode::AllUp;
  c.threads = 0;
  const auto t0 = Clock::now();
  const auto traj = run(to_run_config(c));
  const auto rep = validate_trajectory(traj, 1, std::nullopt);
  const double secs = seconds_since(t0);
  std::string curve;
  for (const auto& r : rep.rows) curve += fmt(" %.2f:%.3f", r.summary.temperature, r.summary.mean);
  const bool pass = rep.tc_estimate && *rep.tc_estimate >= kTcLow && *rep.tc_estimate <= kTcHigh;
  report(5, pass,
         fmt("256x256 scan 2.0..2.6: |M|=0.5 crossing at %.4f (accepted [%.2f, %.2f], exact %.6f); "
             "%.1f s; |M| by T:%s",
             rep.tc_estimate.value_or(std::nan("")), kTcLow, kTcHigh, kCriticalTemperature, secs,
             curve.c_str()));
}

void rng_battery() {
  const auto t0 = Clock::now();
  RngTestOptions o;
  o.bits = 6'400'000;
  o.floats = 1'000'000;
  o.median_floats = std::size_t{1} << 23;
  o.seed = 5001;
  const auto rep = rngtest(o);
  const double secs = seconds_since(t0);
  std::string tests;
  for (const auto& t : rep.bit_tests) tests += fmt(" %s=%.4f", t.name.c_str(), t.p_value);
  std::string median;
  for (const auto& t : rep.median_tests) median += fmt(" %s=%.4f", t.name.c_str(), t.p_value);
  const bool pass = all_pass(rep.bit_tests) && all_pass(rep.median_tests) && !rep.fine->degenerate &&
                    rep.fine->spread <= kFineSpread && rep.coarse->spread <= kCoarseSpread;
  report(6, pass,
         fmt("6.4M bits p:%s; spread %.2f%% at bin 0.01 (max %.0f%%), %.2f%% at bin 0.1 (max %.0f%%); "
             "2^23 median-thresholded floats p:%s; %.1f s",
             tests.c_str(), 100.0 * rep.fine->spread, 100.0 * kFineSpread, 100.0 * rep.coarse->spread,
             100.0 * kCoarseSpread, median.c_str(), secs));
}

void determinism() {
  SimConfig c;
  c.m = 32;
  c.n = 64;
  c.temperatures = {1.5, 2.269, 3.5};
  c.n_sim = 2;
  c.sweeps = 500;
  c.measure_interval = 10;
  c.seed = 6001;
  std::vector<std::string> csv;
  bool counts = true;
  for (int threads : {1, 2, 4}) {
    c.threads = threads;
    const auto traj = simulate(c);
    csv.push_back(csv_string(traj));
    counts = counts && traj.attempts == 32ULL * 64ULL * 6ULL * 500ULL;
  }
  const bool same = csv[0] == csv[1] && csv[0] == csv[2];
  report(7, same && counts,
         fmt("CSV byte-identical at 1/2/4 threads: %s; attempts = m*n*N_sim*sweeps: %s",
             same ? "yes" : "no", counts ? "yes" : "no"));
}

void hardware_note() {
  SimConfig c;
  c.m = 256;
  c.n = 256;
  c.temperatures = {2.269};
  c.sweeps = 200;
  c.warmup = 20;
  c.threads = 0;
  const auto rep = bench(c);
  const auto& r = rep.rows.back();
  std::printf("[INFO] criterion 8: wafer-scale throughput, capacity, iteration periods and GPU "
              "speedups are hardware results and are not reproduced. Host measurement, 256x256, "
              "%d thread(s): %.3f flips/ns, T_iter %.4f ms, attempts exact: %s\n",
              rep.threads, r.flip_rate(), r.iteration_period_ms(rep.dims),
              rep.counts_ok() ? "yes" : "no");
}

}  // namespace

int main() {
  const auto eq = equivalence();
  neighbor_audit();
  halos(eq);
  onsager();
  tc_scan();
  rng_battery();
  determinism();
  hardware_note();
  std::printf("%s: %d criterion failure(s)\n", failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
              failures);
  return failures == 0 ? 0 : 1;
}
