#pragma once

// Trajectory statistics: autocorrelation-based statistical inefficiency,
// automatic equilibration detection and comparison with the exact
// magnetization of the infinite lattice.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pising/lattice.hpp"

namespace pising {

struct Measurement {
  std::uint64_t sweep = 0;  // sweeps completed when the sample was taken
  std::size_t sim = 0;
  double temperature = 0.0;
  double abs_magnetization = 0.0;
  double energy_per_spin = 0.0;
};

struct Trajectory {
  LatticeDims dims{};
  std::vector<double> temperatures;  // one per simulation
  double coupling = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t measure_interval = 0;
  std::vector<Measurement> records;

  // Counters and wall-clock time spent in sweeps (measurement excluded).
  std::uint64_t sweeps = 0;
  std::uint64_t attempts = 0;
  double elapsed_ns = 0.0;
  int threads = 1;

  std::size_t simulations() const noexcept { return temperatures.size(); }

  std::vector<double> abs_magnetization(std::size_t sim) const {
    std::vector<double> out;
    for (const auto& r : records) {
      if (r.sim == sim) out.push_back(r.abs_magnetization);
    }
    return out;
  }

  /// Attempted flips per nanosecond.
  double flip_rate() const noexcept {
    return elapsed_ns > 0.0 ? static_cast<double>(attempts) / elapsed_ns : 0.0;
  }
  /// Time to attempt every spin of every simulation once, in milliseconds.
  double iteration_period_ms() const noexcept {
    const double rate = flip_rate();
    if (rate <= 0.0) return 0.0;
    return static_cast<double>(dims.spins() * simulations()) / rate * 1e-6;
  }
};

/// g = 1 + 2 * sum_k C(k), summed until the first non-positive normalized
/// autocorrelation estimate.  Zero-variance series give g = 1.
inline double statistical_inefficiency(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 10) throw std::invalid_argument("statistical inefficiency needs >= 10 samples");
  double mean = 0.0;
  for (double x : series) mean += x;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double x : series) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n);
  if (!(var > 0.0) || std::all_of(series.begin(), series.end(),
                                  [&](double x) { return x == series.front(); })) {
    return 1.0;
  }
  double g = 1.0;
  for (std::size_t k = 1; k < n - 1; ++k) {
    double c = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) c += (series[i] - mean) * (series[i + k] - mean);
    c /= static_cast<double>(n - k) * var;
    if (c <= 0.0) break;
    g += 2.0 * c;
  }
  return g;
}

struct Equilibration {
  std::size_t t0 = 0;
  double g = 1.0;
  double n_eff = 0.0;
};

/// Candidate origins: 0, then N/256, N/128, ..., N/2 (ratio 2), then N - 10,
/// so at least ten samples remain after any origin.
inline std::vector<std::size_t> equilibration_grid(std::size_t n) {
  std::vector<std::size_t> grid{0};
  const std::size_t last = n - 10;
  for (int k = 8; k >= 1; --k) {
    const auto t = static_cast<std::size_t>(std::llround(std::ldexp(static_cast<double>(n), -k)));
    if (t > grid.back() && t < last) grid.push_back(t);
  }
  if (last > grid.back()) grid.push_back(last);
  return grid;
}

/// Picks the origin maximizing the effective sample count (N - t0) / g(t0).
inline Equilibration detect_equilibration(std::span<const double> series) {
  if (series.size() < 20) {
    throw std::invalid_argument("equilibration detection needs >= 20 measurements, got " +
                                std::to_string(series.size()));
  }
  Equilibration best{0, 1.0, -1.0};
  for (std::size_t t0 : equilibration_grid(series.size())) {
    const auto tail = series.subspan(t0);
    const double g = statistical_inefficiency(tail);
    const double n_eff = static_cast<double>(tail.size()) / g;
    if (n_eff > best.n_eff) best = {t0, g, n_eff};
  }
  return best;
}

struct Summary {
  double temperature = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  double analytic = 0.0;
  double deviation = 0.0;  // mean - analytic
  std::size_t t0 = 0;
  std::size_t samples = 0;  // post-equilibration samples
  double g = 1.0;
};

inline Summary summarize(std::span<const double> abs_m, double temperature, double coupling = 1.0) {
  if (abs_m.empty()) {
    throw std::invalid_argument("empty trajectory: run more sweeps or measure more often");
  }
  if (abs_m.size() < 20) {
    throw std::invalid_argument("trajectory too short (" + std::to_string(abs_m.size()) +
                                " samples, need >= 20): run more sweeps or measure more often");
  }
  const auto eq = detect_equilibration(abs_m);
  const auto tail = abs_m.subspan(eq.t0);
  if (tail.empty()) throw std::invalid_argument("no data after equilibration: run longer");
  Summary s;
  s.temperature = temperature;
  s.t0 = eq.t0;
  s.g = eq.g;
  s.samples = tail.size();
  for (double x : tail) s.mean += x;
  s.mean /= static_cast<double>(tail.size());
  double var = 0.0;
  for (double x : tail) var += (x - s.mean) * (x - s.mean);
  var = tail.size() > 1 ? var / static_cast<double>(tail.size() - 1) : 0.0;
  s.std_error = std::sqrt(var * eq.g / static_cast<double>(tail.size()));
  s.analytic = onsager_magnetization(temperature, coupling);
  s.deviation = s.mean - s.analytic;
  return s;
}

inline Summary summarize(const Trajectory& trajectory, std::size_t sim) {
  if (sim >= trajectory.simulations()) throw std::out_of_range("no such simulation");
  const auto series = trajectory.abs_magnetization(sim);
  return summarize(series, trajectory.temperatures[sim], trajectory.coupling);
}

}  // namespace pising
