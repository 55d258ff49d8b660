#pragma once

// xoshiro256++ generator with splitmix64 seeding, plus the mantissa-stuffing
// conversion from raw bits to unit-interval floats.

#include <array>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace pising {

/// splitmix64 step; also used as a 64-bit mixing function for seed lineage.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : x_(seed) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (x_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t x_;
};

class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;
  using State = std::array<std::uint64_t, 4>;

  /// Stream `stream` of master seed `seed`.  Distinct streams are seeded
  /// through independent splitmix64 expansions.
  explicit Xoshiro256pp(std::uint64_t seed = 0, std::uint64_t stream = 0) noexcept
      : seed_(seed), stream_(stream) {
    SplitMix64 lineage(stream ^ 0xd1b54a32d192ed03ULL);
    SplitMix64 sm(seed ^ lineage.next());
    for (auto& w : s_) w = sm.next();
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  static Xoshiro256pp from_state(const State& s) {
    if ((s[0] | s[1] | s[2] | s[3]) == 0) {
      throw std::invalid_argument("xoshiro256++ state must not be all zero");
    }
    Xoshiro256pp g;
    g.s_ = s;
    return g;
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  constexpr result_type operator()() noexcept { return next(); }

  constexpr std::uint64_t next() noexcept {
    const std::uint64_t result = std::rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
  }

  /// The k most significant bits of the next output.
  std::uint64_t next_bits(int k) {
    if (k < 1 || k > 64) throw std::out_of_range("next_bits: k must be in [1, 64]");
    return next() >> (64 - k);
  }

  const State& state() const noexcept { return s_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  State s_{};
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
};

/// Keeps the 23 mantissa bits, forces the exponent of 1.0f and subtracts
/// one: a float in [0, 1) on a 2^-23 grid.
constexpr float shape_unit_float(std::uint32_t raw) noexcept {
  const std::uint32_t bits = (raw & 0x007fffffU) | 0x3f800000U;
  return std::bit_cast<float>(bits) - 1.0f;
}

inline float next_unit_float(Xoshiro256pp& g) noexcept {
  return shape_unit_float(static_cast<std::uint32_t>(g.next() >> 32));
}

/// `count` bits from successive 64-bit outputs, most significant bit first.
inline std::vector<std::uint8_t> generate_bits(Xoshiro256pp& g, std::size_t count) {
  std::vector<std::uint8_t> bits;
  bits.reserve(count);
  while (bits.size() < count) {
    const std::uint64_t w = g.next();
    for (int b = 63; b >= 0 && bits.size() < count; --b) {
      bits.push_back(static_cast<std::uint8_t>((w >> b) & 1U));
    }
  }
  return bits;
}

inline std::vector<float> generate_unit_floats(Xoshiro256pp& g, std::size_t count) {
  std::vector<float> out(count);
  for (auto& f : out) f = next_unit_float(g);
  return out;
}

}  // namespace pising
