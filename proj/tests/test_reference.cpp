#include <gtest/gtest.h>

#include <cmath>

#include "pising/observables.hpp"
#include "pising/reference.hpp"

using namespace pising;

namespace {

PlainLattice random_lattice(LatticeDims d, std::uint64_t seed) {
  Xoshiro256pp rng(seed, 0);
  return PlainLattice::random(d, [&] { return rng.next_bits(1) != 0; });
}

PlainLattice checkerboard(LatticeDims d) {
  PlainLattice l(d);
  for (std::size_t i = 0; i < d.spins(); ++i) l.set(i, is_red(d, i) ? 1 : -1);
  return l;
}

// Second, independently written energy: sum over all four neighbors, halved.
double energy_by_neighbors(const PlainLattice& l) {
  long long s = 0;
  for (std::size_t i = 0; i < l.size(); ++i) s += l[i] * neighbor_sum_brute(l, i);
  return -0.5 * static_cast<double>(s);
}

RandomMap constant_map(LatticeDims d, float v, std::uint64_t sweep = 0) {
  RandomMap m(d);
  for (std::size_t i = 0; i < d.spins(); ++i) {
    m.insert(sweep, is_red(d, i) ? Color::Red : Color::Blue, i, v);
  }
  return m;
}

}  // namespace

TEST(NeighborSum, Trivial) {
  const auto d = make_dims(8, 32);
  const auto up = PlainLattice::all_up(d);
  const PlainLattice down(d, -1);
  for (std::size_t i = 0; i < d.spins(); i += 7) {
    EXPECT_EQ(neighbor_sum_brute(up, i), 4);
    EXPECT_EQ(neighbor_sum_brute(down, i), -4);
  }
  EXPECT_THROW(neighbor_sum_brute(up, d.spins()), std::out_of_range);
  const auto cb = checkerboard(d);
  EXPECT_EQ(neighbor_sum_brute(cb, 0), -4);
}

TEST(EnergyMagnetization, Trivial) {
  const auto d = make_dims(12, 96);
  const auto up = PlainLattice::all_up(d);
  EXPECT_EQ(energy(up), -2.0 * static_cast<double>(d.spins()));
  EXPECT_EQ(magnetization(up), 1.0);
  const auto cb = checkerboard(d);
  EXPECT_EQ(energy(cb), 2.0 * static_cast<double>(d.spins()));
  EXPECT_EQ(magnetization(cb), 0.0);
  EXPECT_EQ(energy(up, 2.5), -5.0 * static_cast<double>(d.spins()));
}

TEST(EnergyMagnetization, DuplicateImplementation) {
  for (const auto d : {make_dims(4, 32), make_dims(12, 96)}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto l = random_lattice(d, seed);
      EXPECT_EQ(energy(l), energy_by_neighbors(l));
    }
  }
}

TEST(SingleSpin, GroundStateAndForcedFlip) {
  const auto d = make_dims(8, 32);
  auto l = PlainLattice::all_up(d);
  Xoshiro256pp rng(1, 0);
  single_spin_sweep(l, 0.01, rng);
  EXPECT_EQ(l, PlainLattice::all_up(d));

  auto sea = PlainLattice::all_up(d);
  sea.set(d.index(3, 5), -1);
  auto zero = [] { return 0.0f; };
  single_spin_sweep(sea, 0.01, zero);
  EXPECT_EQ(sea[d.index(3, 5)], 1);
  EXPECT_THROW(single_spin_sweep(sea, 0.0, rng), std::domain_error);
}

TEST(Checkerboard, ConstantMaps) {
  const auto d = make_dims(8, 64);
  const auto l = random_lattice(d, 1);
  auto none = l;
  checkerboard_sweep_plain(none, 2.0, constant_map(d, 1.0f), 0);
  EXPECT_EQ(none, l);
  auto all = l;
  checkerboard_sweep_plain(all, 2.0, constant_map(d, 0.0f), 0);
  for (std::size_t i = 0; i < d.spins(); ++i) EXPECT_EQ(all[i], -l[i]);
}

TEST(Checkerboard, MissingEntryIsAnError) {
  const auto d = make_dims(4, 32);
  auto l = random_lattice(d, 2);
  RandomMap m(d);
  EXPECT_THROW(checkerboard_sweep_plain(l, 2.0, m, 0), std::out_of_range);
  EXPECT_THROW(m.insert(0, Color::Blue, 0, 0.5f), std::logic_error);
  m.insert(0, Color::Red, 0, 0.5f);
  EXPECT_THROW(m.insert(0, Color::Red, 0, 0.5f), std::logic_error);
}

TEST(Recording, CountsAndDeterminism) {
  const auto d = make_dims(12, 96);
  EngineConfig c;
  c.dims = d;
  c.temperatures = {2.0, 3.0};
  c.seed = 4;
  SimState a(c), b(c);
  const auto ma = record_engine_randoms(a, 5, 1);
  const auto mb = record_engine_randoms(b, 5, 1);
  EXPECT_EQ(ma.size(), 5U * d.spins());
  for (std::uint64_t k = 0; k < 5; ++k) EXPECT_EQ(ma.count(k), d.spins());
  EXPECT_EQ(ma, mb);
}

TEST(Equivalence, EngineMatchesOracleEverySweep) {
  for (const auto d : {make_dims(4, 32), make_dims(8, 64), make_dims(12, 96), make_dims(16, 96)}) {
    for (const double temp : {0.5, 2.0, 2.269, 5.0}) {
      const auto start = random_lattice(d, static_cast<std::uint64_t>(d.m * 100 + temp * 10));
      const auto rep = check_equivalence(start, temp, 31, 40);
      EXPECT_TRUE(rep.pass()) << d.m << 'x' << d.n << " T=" << temp << " diverged sweeps "
                              << rep.mismatched_sweeps << " halo " << rep.halo_mismatches;
      EXPECT_EQ(rep.draws, 40U * d.spins());
    }
  }
}

TEST(Equivalence, CouplingOtherThanOne) {
  const auto d = make_dims(12, 96);
  const auto rep = check_equivalence(random_lattice(d, 3), 3.0, 8, 30, KernelFault::None, 1.7);
  EXPECT_TRUE(rep.pass());
}

TEST(Equivalence, InjectedFaultIsCaught) {
  const auto d = make_dims(12, 96);
  const auto rep = check_equivalence(random_lattice(d, 3), 2.0, 8, 20, KernelFault::DropAdderCarry);
  EXPECT_FALSE(rep.pass());
  EXPECT_GT(neighbor_code_mismatches(random_lattice(d, 4), KernelFault::DropAdderCarry), 0U);
}

TEST(NeighborAudit, RandomStates) {
  const auto d = make_dims(12, 96);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    ASSERT_EQ(neighbor_code_mismatches(random_lattice(d, seed)), 0U) << seed;
  }
  EXPECT_EQ(neighbor_code_mismatches(PlainLattice::all_up(d)), 0U);
  EXPECT_EQ(neighbor_code_mismatches(checkerboard(d)), 0U);
}

TEST(SingleSpin, StatisticallyMatchesEngine) {
  // Sequential and checkerboard orders sample the same distribution, so
  // their |M| averages agree within their errors.
  const auto d = make_dims(4, 32);
  const double temp = 2.0;
  const int sweeps = 40000;
  const int interval = 10;
  std::vector<double> plain;
  auto l = random_lattice(d, 9);
  Xoshiro256pp rng(10, 0);
  for (int k = 1; k <= sweeps; ++k) {
    single_spin_sweep(l, temp, rng);
    if (k % interval == 0) plain.push_back(std::fabs(magnetization(l)));
  }
  RunConfig rc;
  rc.dims = d;
  rc.temperatures = {temp};
  rc.sweeps = static_cast<std::uint64_t>(sweeps);
  rc.measure_interval = static_cast<std::uint64_t>(interval);
  rc.seed = 11;
  const auto traj = run(rc);
  const auto a = summarize(plain, temp);
  const auto b = summarize(traj, 0);
  EXPECT_LT(std::fabs(a.mean - b.mean), 3.0 * std::hypot(a.std_error, b.std_error) + 1e-3)
      << a.mean << " vs " << b.mean;
}
