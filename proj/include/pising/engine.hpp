#pragma once

// The cell fabric.  Every simulation is a row of cells; cell 0 and cell
// m/4 + 1 are moats, the cells in between are workers.  Cell g owns column g
// of all eight arrays plus its own random stream.  A sweep is four phases
// separated by barriers:
//
//   flip red -> update red boundaries -> flip blue -> update blue boundaries
//
// During a flip a worker reads the opposite color at cells g-1, g, g+1 and
// writes its own column of the flipped color.  A boundary update copies
// edge words into halo words inside a cell and into moats from the adjacent
// worker.  No other cross-cell traffic exists.

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pising/bitkernels.hpp"
#include "pising/lattice.hpp"
#include "pising/observables.hpp"
#include "pising/parallel.hpp"
#include "pising/rng.hpp"

namespace pising {

/// Metropolis acceptance ratios indexed by 8 * spin_bit + up_neighbors.
struct ExpTable {
  std::array<double, 16> ratio{};
  double temperature = 0.0;
  double coupling = 1.0;

  double operator[](unsigned code) const noexcept { return ratio[code & 15U]; }
};

inline ExpTable build_exp_table(double temperature, double coupling = 1.0) {
  if (!(temperature > 0.0)) throw std::domain_error("temperature must be positive");
  ExpTable t;
  t.temperature = temperature;
  t.coupling = coupling;
  for (int bit = 0; bit < 2; ++bit) {
    const int spin = 2 * bit - 1;
    for (int up = 0; up <= 4; ++up) {
      const int sum = 2 * up - 4;
      const double ar = std::exp(-(2.0 * coupling * spin * sum) / temperature);
      t.ratio[static_cast<std::size_t>(8 * bit + up)] = std::min(1.0, ar);
    }
  }
  return t;
}

/// Arguments of one quarter flip: the target array, the array read for the
/// lateral neighbors, the array read for the vertical neighbors, and the two
/// orientation flags.
struct QuarterArgs {
  ArrayCode target;
  ArrayCode lateral;
  ArrayCode vertical;
  bool up;
  bool right;
};

inline constexpr std::array<QuarterArgs, 4> kRedQuarters{{
    {kRFE, kBFE, kBFO, false, false},
    {kRBO, kBBO, kBBE, true, false},
    {kRBE, kBBE, kBBO, false, true},
    {kRFO, kBFO, kBFE, true, true},
}};

inline constexpr std::array<QuarterArgs, 4> kBlueQuarters{{
    {kBFE, kRFE, kRFO, false, true},
    {kBBO, kRBO, kRBE, true, true},
    {kBBE, kRBE, kRBO, false, false},
    {kBFO, kRFO, kRFE, true, false},
}};

constexpr const std::array<QuarterArgs, 4>& quarters_of(Color c) noexcept {
  return c == Color::Red ? kRedQuarters : kBlueQuarters;
}

constexpr bool reads_only_opposite_color(const std::array<QuarterArgs, 4>& table) {
  for (const auto& q : table) {
    if (q.lateral.color == q.target.color || q.vertical.color == q.target.color) return false;
  }
  return true;
}
static_assert(reads_only_opposite_color(kRedQuarters));
static_assert(reads_only_opposite_color(kBlueQuarters));

/// One boundary copy: target array, the array feeding its moat, and flags.
struct BoundaryArgs {
  ArrayCode target;
  ArrayCode source;
  bool up;
  bool right;
};

inline constexpr std::array<BoundaryArgs, 4> kRedBoundaries{{
    {kRFE, kRBE, true, true},
    {kRBO, kRFO, false, true},
    {kRBE, kRFE, true, false},
    {kRFO, kRBO, false, false},
}};

inline constexpr std::array<BoundaryArgs, 4> kBlueBoundaries{{
    {kBFE, kBBE, true, false},
    {kBBO, kBFO, false, false},
    {kBBE, kBFE, true, true},
    {kBFO, kBBO, false, true},
}};

constexpr const std::array<BoundaryArgs, 4>& boundaries_of(Color c) noexcept {
  return c == Color::Red ? kRedBoundaries : kBlueBoundaries;
}

struct NeighborWords {
  std::span<const Word> right;
  std::span<const Word> left;
  std::span<const Word> top;
  std::span<const Word> bottom;
};

/// Interior words of the four lattice neighbors of every spin in column
/// `cell` of the target array.  The one vertical neighbor that straddles a
/// word boundary is assembled into `scratch` (length n/32).
inline NeighborWords get_neighbors(const PackedArrays& p, ArrayCode lateral, ArrayCode vertical,
                                   int cell, bool up, bool right, std::span<Word> scratch) {
  auto interior = [](std::span<const Word> col) { return col.subspan(1, col.size() - 2); };
  NeighborWords nb;
  if (right) {
    nb.right = interior(p.column(lateral, cell + 1));
    nb.left = interior(p.column(lateral, cell));
  } else {
    nb.right = interior(p.column(lateral, cell));
    nb.left = interior(p.column(lateral, cell - 1));
  }
  const auto vcol = p.column(vertical, cell);
  if (up) {
    get_bit_above(vcol, scratch);
    nb.top = scratch;
    nb.bottom = interior(vcol);
  } else {
    nb.top = interior(vcol);
    get_bit_below(vcol, scratch);
    nb.bottom = scratch;
  }
  return nb;
}

/// Scratch vectors for one quarter flip.
struct QuarterWorkspace {
  explicit QuarterWorkspace(std::size_t words = 0)
      : shifted(words), ones(words), twos(words), fours(words), sum(words) {}
  std::vector<Word> shifted, ones, twos, fours, sum;
};

/// Test-only kernel faults, used to check that the verification catches them.
enum class KernelFault { None, DropAdderCarry };

/// Fills ws.ones/twos/fours with the place-value planes of the up-neighbor
/// count of every spin in column `cell` of q.target.
inline void quarter_neighbor_sums(const PackedArrays& p, const QuarterArgs& q, int cell,
                                  QuarterWorkspace& ws, KernelFault fault = KernelFault::None) {
  const auto nb = get_neighbors(p, q.lateral, q.vertical, cell, q.up, q.right, ws.shifted);
  bitwise_add4(nb.right, nb.left, nb.top, nb.bottom, ws.ones, ws.twos, ws.fours);
  if (fault == KernelFault::DropAdderCarry) {
    for (std::size_t k = 0; k < ws.twos.size(); ++k) {
      const Word s1 = nb.right[k] ^ nb.left[k];
      const Word s2 = nb.top[k] ^ nb.bottom[k];
      ws.twos[k] = static_cast<Word>(ws.twos[k] ^ (s1 & s2));
    }
  }
}

/// Receives every random number consumed by a flip, keyed by the spin it gated.
class DrawSink {
 public:
  virtual ~DrawSink() = default;
  virtual void record(std::size_t sim, ArrayCode target, int cell, int word, int bit,
                      float value) = 0;
};

/// Metropolis update of one column of one array.  Draw order: mask index i
/// outermost, nibble field ii next, word innermost; each draw gates bit
/// 4*ii + i of that word.  Returns the number of accepted flips.
inline std::uint64_t flip_quarter(PackedArrays& p, const QuarterArgs& q, int cell,
                                  const ExpTable& table, Xoshiro256pp& rng, QuarterWorkspace& ws,
                                  DrawSink* sink = nullptr, std::size_t sim = 0,
                                  KernelFault fault = KernelFault::None) {
  quarter_neighbor_sums(p, q, cell, ws, fault);
  auto col = p.column(q.target, cell);
  const auto spins = col.subspan(1, col.size() - 2);
  const std::size_t words = spins.size();
  std::uint64_t flips = 0;
  for (int i = 0; i < 4; ++i) {
    nibble_compact(ws.ones, ws.twos, ws.fours, spins, i, ws.sum);
    for (int ii = 0; ii < 4; ++ii) {
      const int shift = 4 * ii;
      const int bit = shift + i;
      for (std::size_t k = 0; k < words; ++k) {
        const unsigned code = (static_cast<unsigned>(ws.sum[k]) >> shift) & 15U;
        const float r = next_unit_float(rng);
        if (sink) [[unlikely]] {
          sink->record(sim, q.target, cell, static_cast<int>(k) + 1, bit, r);
        }
        const unsigned accept = static_cast<double>(r) < table.ratio[code] ? 1U : 0U;
        spins[k] = static_cast<Word>(spins[k] ^ (accept << bit));
        flips += accept;
      }
    }
  }
  return flips;
}

/// Periodic wrap of the halo word and, for moats, the lateral copy from the
/// adjacent worker, for one array in one cell.
inline void update_boundary(PackedArrays& p, const BoundaryArgs& b, int cell) {
  const auto& dims = p.dims();
  const int last = dims.columns() - 1;
  auto col = p.column(b.target, cell);
  const std::size_t len = col.size();
  if (cell >= 1 && cell < last) {
    if (b.up) {
      col[len - 1] = col[1];
    } else {
      col[0] = col[len - 2];
    }
  }
  if (b.right && cell == last) {
    const auto src = p.column(b.source, cell - 1);
    std::copy(src.begin() + 1, src.end() - 1, col.begin() + 1);
  } else if (!b.right && cell == 0) {
    const auto src = p.column(b.source, cell + 1);
    std::copy(src.begin() + 1, src.end() - 1, col.begin() + 1);
  }
}

/// Number of read halo/moat words of `p` that differ from their canonical
/// source.  Zero right after a boundary update of every color.
inline std::size_t halo_mismatches(const PackedArrays& p) {
  const auto& dims = p.dims();
  std::size_t bad = 0;
  for (int a = 0; a < kArrayCount; ++a) {
    const auto code = ArrayCode::from_index(a);
    for (int cell = 0; cell < dims.columns(); ++cell) {
      for (int w = 0; w < dims.vector_length(); ++w) {
        if (!halo_is_read(code, cell, w, dims)) continue;
        const auto src = canonical_halo_source(code, cell, w, dims);
        if (!src || p.word(code, cell, w) != p.word(src->code, src->cell, src->word)) ++bad;
      }
    }
  }
  return bad;
}

enum class InitMode { Random, AllUp };

enum class Phase { FlipRed, UpdateRedBoundary, FlipBlue, UpdateBlueBoundary };

struct EngineConfig {
  LatticeDims dims{};
  std::vector<double> temperatures;  // one entry per simulation
  double coupling = 1.0;
  std::uint64_t seed = 0;
  InitMode init = InitMode::Random;
  int threads = 1;  // 0 = hardware concurrency
  KernelFault fault = KernelFault::None;
};

struct CellState {
  int cell = 0;
  Xoshiro256pp rng;
};

struct Simulation {
  double temperature = 0.0;
  ExpTable table;
  PackedArrays words;
  std::vector<CellState> cells;  // index == cell, moats included
};

/// Random stream of a cell; stream 0 of a simulation seeds its initial state.
constexpr std::uint64_t cell_stream(std::size_t sim, int cell) noexcept {
  return (static_cast<std::uint64_t>(sim) << 32) | static_cast<std::uint64_t>(cell + 1);
}
constexpr std::uint64_t init_stream(std::size_t sim) noexcept {
  return static_cast<std::uint64_t>(sim) << 32;
}

class SimState {
 public:
  using PhaseObserver = std::function<void(Phase, const SimState&)>;

  /// `initial`, when given, holds one lattice per simulation and overrides
  /// the init mode.
  explicit SimState(const EngineConfig& config, const std::vector<PlainLattice>& initial = {})
      : dims_(config.dims),
        coupling_(config.coupling),
        seed_(config.seed),
        fault_(config.fault),
        pool_(std::make_unique<WorkerPool>(resolve_thread_count(config.threads))) {
    validate(dims_);
    if (config.temperatures.empty()) throw std::invalid_argument("no simulations configured");
    if (!(coupling_ > 0.0)) throw std::invalid_argument("coupling must be positive");
    if (!initial.empty() && initial.size() != config.temperatures.size()) {
      throw std::invalid_argument("one initial lattice per simulation required");
    }
    for (std::size_t s = 0; s < config.temperatures.size(); ++s) {
      Simulation sim;
      sim.temperature = config.temperatures[s];
      sim.table = build_exp_table(sim.temperature, coupling_);
      if (!initial.empty()) {
        if (!(initial[s].dims() == dims_)) throw std::invalid_argument("initial lattice dims");
        sim.words = pack(initial[s]);
      } else if (config.init == InitMode::AllUp) {
        sim.words = pack(PlainLattice::all_up(dims_));
      } else {
        Xoshiro256pp coin_rng(seed_, init_stream(s));
        sim.words = pack(PlainLattice::random(dims_, [&] { return coin_rng.next_bits(1) != 0; }));
      }
      for (int c = 0; c < dims_.columns(); ++c) {
        sim.cells.push_back({c, Xoshiro256pp(seed_, cell_stream(s, c))});
      }
      sims_.push_back(std::move(sim));
    }
    for (int w = 0; w < pool_->size(); ++w) {
      workspaces_.emplace_back(static_cast<std::size_t>(dims_.words()));
    }
    update_boundaries(Color::Red);
    update_boundaries(Color::Blue);
  }

  const LatticeDims& dims() const noexcept { return dims_; }
  double coupling() const noexcept { return coupling_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t simulations() const noexcept { return sims_.size(); }
  int threads() const noexcept { return pool_->size(); }

  const Simulation& simulation(std::size_t s) const { return sims_.at(s); }
  const PackedArrays& words(std::size_t s) const { return sims_.at(s).words; }
  PlainLattice lattice(std::size_t s) const { return unpack(sims_.at(s).words); }

  std::uint64_t sweeps() const noexcept { return sweeps_; }
  std::uint64_t attempts() const noexcept { return attempts_; }
  std::uint64_t accepted() const noexcept { return accepted_; }

  /// Replaces the acceptance table of one simulation (tests force tables).
  void set_table(std::size_t s, const ExpTable& table) { sims_.at(s).table = table; }

  /// Draw recording forces single-threaded execution.
  void set_draw_sink(DrawSink* sink) noexcept { sink_ = sink; }
  void set_phase_observer(PhaseObserver observer) { observer_ = std::move(observer); }

  /// All four quarters of one color in every worker cell of every simulation.
  void flip(Color color) {
    const auto workers = static_cast<std::size_t>(dims_.workers());
    const std::size_t items = sims_.size() * workers;
    item_flips_.assign(items, 0);
    auto task = [&](std::size_t item, int worker) {
      const std::size_t s = item / workers;
      const int cell = static_cast<int>(item % workers) + 1;
      auto& sim = sims_[s];
      auto& rng = sim.cells[static_cast<std::size_t>(cell)].rng;
      std::uint64_t flips = 0;
      for (const auto& q : quarters_of(color)) {
        flips += flip_quarter(sim.words, q, cell, sim.table, rng,
                              workspaces_[static_cast<std::size_t>(worker)], sink_, s, fault_);
      }
      item_flips_[item] = flips;
    };
    run_items(items, task);
    accepted_ += std::accumulate(item_flips_.begin(), item_flips_.end(), std::uint64_t{0});
    attempts_ += sims_.size() * dims_.spins() / 2;
  }

  void update_boundaries(Color color) {
    const auto columns = static_cast<std::size_t>(dims_.columns());
    auto task = [&](std::size_t item, int) {
      auto& sim = sims_[item / columns];
      const int cell = static_cast<int>(item % columns);
      for (const auto& b : boundaries_of(color)) update_boundary(sim.words, b, cell);
    };
    run_items(sims_.size() * columns, task);
  }

  void sweep() {
    flip(Color::Red);
    notify(Phase::FlipRed);
    update_boundaries(Color::Red);
    notify(Phase::UpdateRedBoundary);
    flip(Color::Blue);
    notify(Phase::FlipBlue);
    update_boundaries(Color::Blue);
    notify(Phase::UpdateBlueBoundary);
    ++sweeps_;
  }

  void sweep(std::uint64_t count) {
    for (std::uint64_t k = 0; k < count; ++k) sweep();
  }

  /// Spins currently up in simulation s.
  std::uint64_t up_spins(std::size_t s) const {
    const auto& p = sims_.at(s).words;
    std::uint64_t up = 0;
    for (int a = 0; a < kArrayCount; ++a) {
      for (int cell = 1; cell <= dims_.workers(); ++cell) {
        const auto col = p.column(ArrayCode::from_index(a), cell);
        for (std::size_t w = 1; w + 1 < col.size(); ++w) {
          up += static_cast<std::uint64_t>(std::popcount(static_cast<unsigned>(col[w])));
        }
      }
    }
    return up;
  }

  double magnetization(std::size_t s) const {
    const double n = static_cast<double>(dims_.spins());
    return (2.0 * static_cast<double>(up_spins(s)) - n) / n;
  }

  /// Total energy in units of J, accumulated over red spins only (every
  /// bond has exactly one red end).  Requires current halos.
  long long energy_bonds(std::size_t s) const {
    const auto& p = sims_.at(s).words;
    QuarterWorkspace ws(static_cast<std::size_t>(dims_.words()));
    long long sum = 0;
    auto pc = [](unsigned v) { return static_cast<long long>(std::popcount(v)); };
    for (const auto& q : kRedQuarters) {
      for (int cell = 1; cell <= dims_.workers(); ++cell) {
        quarter_neighbor_sums(p, q, cell, ws);
        const auto col = p.column(q.target, cell);
        for (std::size_t k = 0; k < ws.ones.size(); ++k) {
          const unsigned up = col[k + 1];
          const unsigned down = ~up & 0xFFFFU;
          auto ups = [&](unsigned mask) {
            return pc(ws.ones[k] & mask) + 2 * pc(ws.twos[k] & mask) + 4 * pc(ws.fours[k] & mask);
          };
          // sigma * (2 * n_up - 4) summed over the word
          sum += 2 * (ups(up) - ups(down)) - 4 * (pc(up) - pc(down));
        }
      }
    }
    return -sum;
  }

  double energy(std::size_t s) const {
    return coupling_ * static_cast<double>(energy_bonds(s));
  }

  /// 8 * spin_bit + up_neighbors for every spin of `color` through the
  /// packed neighbor path, indexed by lattice site; -1 for the other color.
  std::vector<int> spin_codes(std::size_t s, Color color) const {
    const auto& p = sims_.at(s).words;
    std::vector<int> codes(dims_.spins(), -1);
    QuarterWorkspace ws(static_cast<std::size_t>(dims_.words()));
    for (const auto& q : quarters_of(color)) {
      for (int cell = 1; cell <= dims_.workers(); ++cell) {
        quarter_neighbor_sums(p, q, cell, ws, fault_);
        const auto col = p.column(q.target, cell);
        const auto spins = col.subspan(1, col.size() - 2);
        for (int i = 0; i < 4; ++i) {
          nibble_compact(ws.ones, ws.twos, ws.fours, spins, i, ws.sum);
          for (int ii = 0; ii < 4; ++ii) {
            for (std::size_t k = 0; k < spins.size(); ++k) {
              const SpinCoord sc{q.target, cell, static_cast<int>(k) + 1, 4 * ii + i};
              codes[unclassify(sc, dims_)] = (ws.sum[k] >> (4 * ii)) & 15;
            }
          }
        }
      }
    }
    return codes;
  }

 private:
  template <typename Task>
  void run_items(std::size_t items, Task& task) {
    if (sink_ != nullptr || pool_->size() == 1) {
      for (std::size_t i = 0; i < items; ++i) task(i, 0);
      return;
    }
    pool_->run(items, [&](std::size_t i, int w) { task(i, w); });
  }

  void notify(Phase phase) {
    if (observer_) observer_(phase, *this);
  }

  LatticeDims dims_;
  double coupling_;
  std::uint64_t seed_;
  KernelFault fault_;
  std::unique_ptr<WorkerPool> pool_;
  std::vector<Simulation> sims_;
  std::vector<QuarterWorkspace> workspaces_;
  std::vector<std::uint64_t> item_flips_;
  DrawSink* sink_ = nullptr;
  PhaseObserver observer_;
  std::uint64_t sweeps_ = 0;
  std::uint64_t attempts_ = 0;
  std::uint64_t accepted_ = 0;
};

inline void flip_red(SimState& s) { s.flip(Color::Red); }
inline void flip_blue(SimState& s) { s.flip(Color::Blue); }
inline void update_red_bc(SimState& s) { s.update_boundaries(Color::Red); }
inline void update_blue_bc(SimState& s) { s.update_boundaries(Color::Blue); }
inline void sweep(SimState& s) { s.sweep(); }

struct RunConfig {
  LatticeDims dims{};
  std::vector<double> temperatures;
  int replicas = 1;  // independent simulations per temperature
  double coupling = 1.0;
  std::uint64_t sweeps = 0;
  std::uint64_t measure_interval = 100;
  std::uint64_t seed = 0;
  InitMode init = InitMode::Random;
  int threads = 1;
};

inline void validate(const RunConfig& c) {
  validate(c.dims);
  if (c.temperatures.empty()) throw std::invalid_argument("at least one temperature required");
  for (double t : c.temperatures) {
    if (!(t > 0.0)) throw std::invalid_argument("temperatures must be positive");
  }
  if (c.replicas < 1) throw std::invalid_argument("replicas (n_sim) must be >= 1");
  if (!(c.coupling > 0.0)) throw std::invalid_argument("coupling J must be positive");
  if (c.sweeps > 0 && c.measure_interval == 0) {
    throw std::invalid_argument("measure_interval must be >= 1");
  }
  if (c.threads < 0) throw std::invalid_argument("threads must be >= 0");
}

/// Simulation temperatures: every temperature repeated `replicas` times.
inline std::vector<double> simulation_temperatures(const RunConfig& c) {
  std::vector<double> out;
  for (double t : c.temperatures) {
    for (int r = 0; r < c.replicas; ++r) out.push_back(t);
  }
  return out;
}

inline EngineConfig engine_config(const RunConfig& c) {
  EngineConfig e;
  e.dims = c.dims;
  e.temperatures = simulation_temperatures(c);
  e.coupling = c.coupling;
  e.seed = c.seed;
  e.init = c.init;
  e.threads = c.threads;
  return e;
}

/// Runs `sweeps` sweeps, sampling |M| and energy per spin of every
/// simulation after each `measure_interval` sweeps.
inline Trajectory run(const RunConfig& config) {
  validate(config);
  SimState state(engine_config(config));
  Trajectory traj;
  traj.dims = config.dims;
  traj.temperatures = simulation_temperatures(config);
  traj.coupling = config.coupling;
  traj.seed = config.seed;
  traj.measure_interval = config.measure_interval;
  traj.threads = state.threads();
  const double spins = static_cast<double>(config.dims.spins());
  using clock = std::chrono::steady_clock;
  std::chrono::nanoseconds busy{0};
  for (std::uint64_t done = 0; done < config.sweeps;) {
    const std::uint64_t chunk = std::min(config.measure_interval, config.sweeps - done);
    const auto t0 = clock::now();
    state.sweep(chunk);
    busy += clock::now() - t0;
    done += chunk;
    if (done % config.measure_interval != 0) continue;
    for (std::size_t s = 0; s < state.simulations(); ++s) {
      traj.records.push_back({done, s, traj.temperatures[s], std::fabs(state.magnetization(s)),
                              state.energy(s) / spins});
    }
  }
  traj.sweeps = state.sweeps();
  traj.attempts = state.attempts();
  traj.elapsed_ns = static_cast<double>(busy.count());
  return traj;
}

}  // namespace pising
