#pragma once

// Plain +-1 lattice oracles and the random-number recording harness used to
// check the packed engine spin for spin.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pising/engine.hpp"
#include "pising/lattice.hpp"
#include "pising/rng.hpp"

namespace pising {

namespace detail {
inline std::size_t wrap_index(const LatticeDims& d, int c, int r) {
  return d.index(floor_mod(c, d.m), floor_mod(r, d.n));
}
}  // namespace detail

/// Sum of the four periodic neighbors of site idx.
inline int neighbor_sum_brute(const PlainLattice& l, std::size_t idx) {
  const auto& d = l.dims();
  if (idx >= d.spins()) throw std::out_of_range("site index out of range");
  const int c = static_cast<int>(idx / static_cast<std::size_t>(d.n));
  const int r = static_cast<int>(idx % static_cast<std::size_t>(d.n));
  return l[detail::wrap_index(d, c + 1, r)] + l[detail::wrap_index(d, c - 1, r)] +
         l[detail::wrap_index(d, c, r + 1)] + l[detail::wrap_index(d, c, r - 1)];
}

/// Bond sum sum_<ij> s_i s_j, each bond counted once (up and right of every site).
inline long long bond_sum(const PlainLattice& l) {
  const auto& d = l.dims();
  long long s = 0;
  for (int c = 0; c < d.m; ++c) {
    for (int r = 0; r < d.n; ++r) {
      const int v = l.at(c, r);
      s += v * l[detail::wrap_index(d, c + 1, r)];
      s += v * l[detail::wrap_index(d, c, r + 1)];
    }
  }
  return s;
}

inline double energy(const PlainLattice& l, double coupling = 1.0) {
  return -coupling * static_cast<double>(bond_sum(l));
}

inline long long spin_sum(const PlainLattice& l) {
  long long s = 0;
  for (auto v : l.spins()) s += v;
  return s;
}

inline double magnetization(const PlainLattice& l) {
  return static_cast<double>(spin_sum(l)) / static_cast<double>(l.dims().spins());
}

inline bool is_red(const LatticeDims& d, std::size_t idx) {
  const auto c = idx / static_cast<std::size_t>(d.n);
  const auto r = idx % static_cast<std::size_t>(d.n);
  return (c + r) % 2 == 0;
}

/// Metropolis decision for one spin given its neighbor sum and a uniform draw.
inline bool accept_flip(int spin, int neighbor_sum, float draw, double temperature,
                        double coupling) {
  const double ar = std::min(1.0, std::exp(-(2.0 * coupling * spin * neighbor_sum) / temperature));
  return static_cast<double>(draw) < ar;
}

/// One single-spin Metropolis sweep visiting sites in ascending index order.
template <typename Rng>
void single_spin_sweep(PlainLattice& l, double temperature, Rng& rng, double coupling = 1.0) {
  if (!(temperature > 0.0)) throw std::domain_error("temperature must be positive");
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (accept_flip(l[i], neighbor_sum_brute(l, i), rng(), temperature, coupling)) l.flip(i);
  }
}

inline void single_spin_sweep(PlainLattice& l, double temperature, Xoshiro256pp& rng,
                              double coupling = 1.0) {
  auto draw = [&] { return next_unit_float(rng); };
  single_spin_sweep(l, temperature, draw, coupling);
}

/// Random value for every spin of every half-sweep, keyed by (sweep, site).
class RandomMap {
 public:
  explicit RandomMap(LatticeDims dims = {}) : dims_(dims) {}

  const LatticeDims& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return values_.size(); }
  void clear() noexcept { values_.clear(); }

  void insert(std::uint64_t sweep, Color color, std::size_t idx, float value) {
    if (idx >= dims_.spins()) throw std::out_of_range("site index out of range");
    if ((color == Color::Red) != is_red(dims_, idx)) {
      throw std::logic_error("draw recorded for a spin of the wrong color");
    }
    if (!values_.emplace(std::pair{sweep, idx}, value).second) {
      throw std::logic_error("duplicate draw for sweep " + std::to_string(sweep) + ", site " +
                             std::to_string(idx));
    }
  }

  float at(std::uint64_t sweep, std::size_t idx) const {
    const auto it = values_.find({sweep, idx});
    if (it == values_.end()) {
      throw std::out_of_range("no recorded draw for sweep " + std::to_string(sweep) + ", site " +
                              std::to_string(idx));
    }
    return it->second;
  }

  std::size_t count(std::uint64_t sweep) const {
    std::size_t n = 0;
    for (auto it = values_.lower_bound({sweep, 0}); it != values_.end() && it->first.first == sweep;
         ++it) {
      ++n;
    }
    return n;
  }

  friend bool operator==(const RandomMap&, const RandomMap&) = default;

 private:
  LatticeDims dims_;
  std::map<std::pair<std::uint64_t, std::size_t>, float> values_;
};

/// One checkerboard sweep: every red spin against the pre-update lattice,
/// then every blue spin, each gated by its mapped draw.
inline void checkerboard_sweep_plain(PlainLattice& l, double temperature, const RandomMap& map,
                                     std::uint64_t sweep, double coupling = 1.0) {
  if (!(temperature > 0.0)) throw std::domain_error("temperature must be positive");
  const auto& d = l.dims();
  for (const bool red : {true, false}) {
    std::vector<std::size_t> flips;
    for (std::size_t i = 0; i < d.spins(); ++i) {
      if (is_red(d, i) != red) continue;
      if (accept_flip(l[i], neighbor_sum_brute(l, i), map.at(sweep, i), temperature, coupling)) {
        flips.push_back(i);
      }
    }
    for (auto i : flips) l.flip(i);
  }
}

/// Captures the draws of one simulation of an engine into a RandomMap.
class RecordingSink final : public DrawSink {
 public:
  RecordingSink(RandomMap& map, std::size_t sim) : map_(map), sim_(sim) {}

  void set_sweep(std::uint64_t sweep) noexcept { sweep_ = sweep; }

  void record(std::size_t sim, ArrayCode target, int cell, int word, int bit,
              float value) override {
    if (sim != sim_) return;
    const auto idx = unclassify({target, cell, word, bit}, map_.dims());
    map_.insert(sweep_, target.color, idx, value);
  }

 private:
  RandomMap& map_;
  std::size_t sim_;
  std::uint64_t sweep_ = 0;
};

/// Runs `sweeps` sweeps of `state` and returns every draw of simulation
/// `sim`, keyed by the state's sweep counter at the start of each sweep.
/// `after_sweep`, if given, is called after every sweep.
template <typename Callback>
RandomMap record_engine_randoms(SimState& state, std::uint64_t sweeps, std::size_t sim,
                                Callback&& after_sweep) {
  RandomMap map(state.dims());
  RecordingSink sink(map, sim);
  state.set_draw_sink(&sink);
  try {
    for (std::uint64_t k = 0; k < sweeps; ++k) {
      sink.set_sweep(state.sweeps());
      state.sweep();
      after_sweep(state);
    }
  } catch (...) {
    state.set_draw_sink(nullptr);
    throw;
  }
  state.set_draw_sink(nullptr);
  return map;
}

inline RandomMap record_engine_randoms(SimState& state, std::uint64_t sweeps, std::size_t sim = 0) {
  return record_engine_randoms(state, sweeps, sim, [](const SimState&) {});
}

/// Sites whose packed-path code 8 * spin_bit + up_neighbors disagrees with
/// the brute-force neighbor sum.
inline std::size_t neighbor_code_mismatches(const PlainLattice& l,
                                            KernelFault fault = KernelFault::None) {
  EngineConfig cfg;
  cfg.dims = l.dims();
  cfg.temperatures = {1.0};
  cfg.fault = fault;
  const SimState state(cfg, {l});
  std::size_t bad = 0;
  for (const Color color : {Color::Red, Color::Blue}) {
    const auto codes = state.spin_codes(0, color);
    for (std::size_t i = 0; i < l.size(); ++i) {
      if (is_red(l.dims(), i) != (color == Color::Red)) continue;
      const int expected = 8 * (l[i] > 0 ? 1 : 0) + (neighbor_sum_brute(l, i) + 4) / 2;
      bad += codes[i] != expected ? 1 : 0;
    }
  }
  return bad;
}

struct EquivalenceReport {
  std::uint64_t sweeps = 0;
  std::size_t spins_compared = 0;
  std::size_t mismatched_sweeps = 0;  // sweeps after which the lattices differed
  std::size_t final_mismatches = 0;   // differing spins after the last sweep
  std::size_t halo_mismatches = 0;    // summed over every boundary update
  std::size_t halo_checks = 0;
  std::size_t draws = 0;

  bool pass() const noexcept {
    return mismatched_sweeps == 0 && final_mismatches == 0 && halo_mismatches == 0;
  }
};

inline std::size_t count_mismatches(const PlainLattice& a, const PlainLattice& b) {
  if (!(a.dims() == b.dims())) throw std::invalid_argument("lattice dims differ");
  std::size_t bad = 0;
  for (std::size_t i = 0; i < a.size(); ++i) bad += a[i] != b[i] ? 1 : 0;
  return bad;
}

/// Runs the engine and the plain checkerboard oracle side by side from the
/// same lattice, replaying the engine's draws into the oracle, and compares
/// after every sweep.  Halos are audited after every boundary update.
inline EquivalenceReport check_equivalence(const PlainLattice& start, double temperature,
                                           std::uint64_t seed, std::uint64_t sweeps,
                                           KernelFault fault = KernelFault::None,
                                           double coupling = 1.0) {
  EngineConfig cfg;
  cfg.dims = start.dims();
  cfg.temperatures = {temperature};
  cfg.coupling = coupling;
  cfg.seed = seed;
  cfg.fault = fault;
  SimState state(cfg, {start});
  EquivalenceReport rep;
  state.set_phase_observer([&](Phase phase, const SimState& s) {
    if (phase == Phase::UpdateRedBoundary || phase == Phase::UpdateBlueBoundary) {
      rep.halo_mismatches += halo_mismatches(s.words(0));
      ++rep.halo_checks;
    }
  });
  PlainLattice oracle = start;
  RandomMap map(start.dims());
  RecordingSink sink(map, 0);
  state.set_draw_sink(&sink);
  for (std::uint64_t k = 0; k < sweeps; ++k) {
    const auto sweep_id = state.sweeps();
    map.clear();
    sink.set_sweep(sweep_id);
    state.sweep();
    rep.draws += map.size();
    checkerboard_sweep_plain(oracle, temperature, map, sweep_id, coupling);
    const auto bad = count_mismatches(state.lattice(0), oracle);
    rep.mismatched_sweeps += bad != 0 ? 1 : 0;
    rep.final_mismatches = bad;
    rep.spins_compared += oracle.size();
  }
  state.set_draw_sink(nullptr);
  rep.sweeps = sweeps;
  return rep;
}

}  // namespace pising
