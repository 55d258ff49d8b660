#include <gtest/gtest.h>

#include <bit>
#include <vector>

#include "pising/bitkernels.hpp"
#include "pising/rng.hpp"

using namespace pising;

TEST(BitShift, AboveAndBelowWorkedValues) {
  const std::vector<Word> v{0x8000, 0x0001, 0x8000, 0x0001};
  // interior words are v[1], v[2]
  EXPECT_EQ(get_bit_above(v), (std::vector<Word>{0x0000, 0xC000}));
  EXPECT_EQ(get_bit_below(v), (std::vector<Word>{0x0003, 0x0000}));
}

TEST(BitShift, NoSignExtension) {
  const std::vector<Word> v{0xFFFF, 0x8000, 0x0000};
  EXPECT_EQ(get_bit_above(v), (std::vector<Word>{0x4000}));
  EXPECT_EQ(get_bit_below(v), (std::vector<Word>{0x0001}));
}

TEST(BitShift, BruteForceAgainstBitStream) {
  // Treat the vector as one long bit stream, bit 16*k + t = bit t of v[k].
  Xoshiro256pp rng(5, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t len = 3 + static_cast<std::size_t>(trial % 7);
    std::vector<Word> v(len);
    for (auto& w : v) w = static_cast<Word>(rng.next_bits(16));
    auto bit = [&](long long b) { return (v[static_cast<std::size_t>(b / 16)] >> (b % 16)) & 1U; };
    const auto above = get_bit_above(v);
    const auto below = get_bit_below(v);
    for (std::size_t k = 0; k + 2 < len; ++k) {
      for (int t = 0; t < 16; ++t) {
        const long long pos = 16LL * static_cast<long long>(k + 1) + t;
        EXPECT_EQ((above[k] >> t) & 1U, bit(pos + 1));
        EXPECT_EQ((below[k] >> t) & 1U, bit(pos - 1));
      }
    }
  }
}

TEST(BitShift, RejectsShortVectors) {
  const std::vector<Word> v{1, 2};
  EXPECT_THROW(get_bit_above(v), std::length_error);
  EXPECT_THROW(get_bit_below(v), std::length_error);
}

TEST(Adder, ExhaustivePerLane) {
  for (unsigned in = 0; in < 16; ++in) {
    for (int lane = 0; lane < 16; ++lane) {
      auto w = [&](unsigned b) { return static_cast<Word>(((in >> b) & 1U) << lane); };
      const auto r = add4_word(w(0), w(1), w(2), w(3));
      const unsigned got =
          ((r.ones >> lane) & 1U) + 2U * ((r.twos >> lane) & 1U) + 4U * ((r.fours >> lane) & 1U);
      EXPECT_EQ(got, static_cast<unsigned>(std::popcount(in)));
      const Word others = static_cast<Word>(~(1U << lane));
      EXPECT_EQ(r.ones & others, 0);
      EXPECT_EQ(r.twos & others, 0);
      EXPECT_EQ(r.fours & others, 0);
    }
  }
}

TEST(Adder, RandomWordsMatchPopcount) {
  Xoshiro256pp rng(11, 0);
  for (int trial = 0; trial < 10000; ++trial) {
    Word in[4];
    for (auto& x : in) x = static_cast<Word>(rng.next_bits(16));
    const auto r = add4_word(in[0], in[1], in[2], in[3]);
    for (int t = 0; t < 16; ++t) {
      unsigned expect = 0;
      for (auto x : in) expect += (x >> t) & 1U;
      const unsigned got =
          ((r.ones >> t) & 1U) + 2U * ((r.twos >> t) & 1U) + 4U * ((r.fours >> t) & 1U);
      ASSERT_EQ(got, expect);
    }
  }
}

TEST(Adder, AllOnesGivesFour) {
  const auto r = add4_word(0xFFFF, 0xFFFF, 0xFFFF, 0xFFFF);
  EXPECT_EQ(r.ones, 0);
  EXPECT_EQ(r.twos, 0);
  EXPECT_EQ(r.fours, 0xFFFF);
}

TEST(Adder, VectorLengthMismatch) {
  const std::vector<Word> a(3), b(2);
  EXPECT_THROW(bitwise_add4(a, a, a, b), std::length_error);
}

TEST(Nibble, FieldsHoldCountAndSpin) {
  Xoshiro256pp rng(13, 0);
  for (int trial = 0; trial < 2000; ++trial) {
    Word in[4];
    for (auto& x : in) x = static_cast<Word>(rng.next_bits(16));
    const Word spin = static_cast<Word>(rng.next_bits(16));
    const auto r = add4_word(in[0], in[1], in[2], in[3]);
    for (int i = 0; i < 4; ++i) {
      const Word code = nibble_compact_word(r.ones, r.twos, r.fours, spin, i);
      for (int ii = 0; ii < 4; ++ii) {
        const int p = 4 * ii + i;
        unsigned up = 0;
        for (auto x : in) up += (x >> p) & 1U;
        const unsigned expect = 8U * ((spin >> p) & 1U) + up;
        ASSERT_EQ((code >> (4 * ii)) & 15U, expect);
      }
    }
  }
}

TEST(Nibble, WorkedValue) {
  // Every bit up with four up neighbors: each nibble is 8 + 4.
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(nibble_compact_word(0, 0, 0xFFFF, 0xFFFF, i), 0xCCCC);
  }
  EXPECT_EQ(nibble_compact_word(0x0001, 0x0000, 0x0000, 0x0000, 0), 0x0001);
  EXPECT_EQ(nibble_compact_word(0x0002, 0x0002, 0x0000, 0x0002, 1), 0x000B);
}

TEST(Nibble, RejectsBadIndex) {
  const std::vector<Word> v(2);
  EXPECT_THROW(nibble_compact(v, v, v, v, 4), std::out_of_range);
  EXPECT_THROW(nibble_compact(v, v, v, v, -1), std::out_of_range);
}
