#pragma once

// Word-level SWAR primitives used by the flip kernel.  All shifts operate on
// unsigned 16-bit values, so bit 15 traffic is never sign-extended.

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "pising/lattice.hpp"

namespace pising {

inline constexpr std::array<Word, 4> kNibbleMasks{0x1111, 0x2222, 0x4444, 0x8888};

namespace detail {

inline void require_halo_vector(std::size_t len) {
  if (len < 3) throw std::length_error("word vector needs at least one interior and two halo words");
}

}  // namespace detail

/// out[k] = bit of the row above every spin of v[k+1]: bits 0..14 come from
/// the same word, bit 15 from bit 0 of the next word.
inline void get_bit_above(std::span<const Word> v, std::span<Word> out) {
  detail::require_halo_vector(v.size());
  if (out.size() != v.size() - 2) throw std::length_error("get_bit_above: output length");
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = static_cast<Word>((v[k + 2] << 15) | (v[k + 1] >> 1));
  }
}

inline void get_bit_below(std::span<const Word> v, std::span<Word> out) {
  detail::require_halo_vector(v.size());
  if (out.size() != v.size() - 2) throw std::length_error("get_bit_below: output length");
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = static_cast<Word>((v[k] >> 15) | (v[k + 1] << 1));
  }
}

inline std::vector<Word> get_bit_above(std::span<const Word> v) {
  detail::require_halo_vector(v.size());
  std::vector<Word> out(v.size() - 2);
  get_bit_above(v, out);
  return out;
}

inline std::vector<Word> get_bit_below(std::span<const Word> v) {
  detail::require_halo_vector(v.size());
  std::vector<Word> out(v.size() - 2);
  get_bit_below(v, out);
  return out;
}

/// Place-value planes of a four-way one-bit sum.
struct AdderPlanes {
  std::vector<Word> ones;
  std::vector<Word> twos;
  std::vector<Word> fours;
};

/// Single-word half-adder network: per bit, a + b + c + d = o + 2t + 4f.
struct Add4Result {
  Word ones, twos, fours;
};

constexpr Add4Result add4_word(Word a, Word b, Word c, Word d) noexcept {
  const Word s1 = a ^ b;
  const Word c1 = a & b;
  const Word s2 = c ^ d;
  const Word c2 = c & d;
  const Word c3 = s1 & s2;
  const Word ones = s1 ^ s2;
  const Word twos = c1 ^ c2 ^ c3;
  const Word fours = static_cast<Word>((c1 & c2) | (c1 & c3) | (c2 & c3));
  return {ones, twos, fours};
}

inline void bitwise_add4(std::span<const Word> a, std::span<const Word> b, std::span<const Word> c,
                         std::span<const Word> d, std::span<Word> ones, std::span<Word> twos,
                         std::span<Word> fours) {
  const std::size_t n = a.size();
  if (b.size() != n || c.size() != n || d.size() != n || ones.size() != n || twos.size() != n ||
      fours.size() != n) {
    throw std::length_error("bitwise_add4: vector lengths differ");
  }
  for (std::size_t k = 0; k < n; ++k) {
    const auto r = add4_word(a[k], b[k], c[k], d[k]);
    ones[k] = r.ones;
    twos[k] = r.twos;
    fours[k] = r.fours;
  }
}

inline AdderPlanes bitwise_add4(std::span<const Word> a, std::span<const Word> b,
                                std::span<const Word> c, std::span<const Word> d) {
  AdderPlanes p{std::vector<Word>(a.size()), std::vector<Word>(a.size()),
                std::vector<Word>(a.size())};
  bitwise_add4(a, b, c, d, p.ones, p.twos, p.fours);
  return p;
}

/// Packs every fourth bit (positions 4*ii + i) of the adder planes and the
/// spin word into four 4-bit fields: bits 0-2 hold the up-neighbor count,
/// bit 3 the spin itself.
constexpr Word nibble_compact_word(Word ones, Word twos, Word fours, Word spin, int i) noexcept {
  const Word mask = kNibbleMasks[static_cast<std::size_t>(i)];
  Word sum = static_cast<Word>((ones & mask) >> i);
  sum = static_cast<Word>(sum + ((((twos & mask) >> i)) << 1) + ((((fours & mask) >> i)) << 2));
  sum = static_cast<Word>(sum + ((((spin & mask) >> i)) << 3));
  return sum;
}

inline void nibble_compact(std::span<const Word> ones, std::span<const Word> twos,
                           std::span<const Word> fours, std::span<const Word> spin, int i,
                           std::span<Word> out) {
  if (i < 0 || i > 3) throw std::out_of_range("nibble mask index must be in [0, 4)");
  const std::size_t n = ones.size();
  if (twos.size() != n || fours.size() != n || spin.size() != n || out.size() != n) {
    throw std::length_error("nibble_compact: vector lengths differ");
  }
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = nibble_compact_word(ones[k], twos[k], fours[k], spin[k], i);
  }
}

inline std::vector<Word> nibble_compact(std::span<const Word> ones, std::span<const Word> twos,
                                        std::span<const Word> fours, std::span<const Word> spin,
                                        int i) {
  std::vector<Word> out(ones.size());
  nibble_compact(ones, twos, fours, spin, i, out);
  return out;
}

}  // namespace pising
