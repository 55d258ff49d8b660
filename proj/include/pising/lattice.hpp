#pragma once

// Lattice geometry for the eight-array multi-spin representation.
//
// A lattice of m x n spins is indexed idx = c * n + r where c in [0, m) runs
// along the cell axis and r in [0, n) along the memory axis.  The lattice is
// split by checkerboard color, by row parity and by fold direction into eight
// arrays.  Each array is a matrix of (m/4 + 2) cell columns, every column a
// vector of (n/32 + 2) 16-bit words; the outer columns are moats and the
// first/last word of each column are halo words.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pising {

using Word = std::uint16_t;

inline constexpr int kBitsPerWord = 16;
/// Each word covers 32 consecutive rows (every other row belongs to the array).
inline constexpr int kRowsPerWord = 2 * kBitsPerWord;

struct LatticeDims {
  int m = 0;  // cell axis, multiple of 4
  int n = 0;  // memory axis, multiple of 32

  /// Number of worker cells; cells 0 and workers()+1 are moats.
  constexpr int workers() const noexcept { return m / 4; }
  constexpr int columns() const noexcept { return m / 4 + 2; }
  /// Interior words per cell vector.
  constexpr int words() const noexcept { return n / kRowsPerWord; }
  constexpr int vector_length() const noexcept { return n / kRowsPerWord + 2; }
  constexpr std::size_t spins() const noexcept {
    return static_cast<std::size_t>(m) * static_cast<std::size_t>(n);
  }
  constexpr std::size_t index(int c, int r) const noexcept {
    return static_cast<std::size_t>(c) * static_cast<std::size_t>(n) +
           static_cast<std::size_t>(r);
  }

  friend constexpr bool operator==(const LatticeDims&, const LatticeDims&) = default;
};

/// Throws std::invalid_argument unless m is a positive multiple of 4 and n a
/// positive multiple of 32.
inline void validate(const LatticeDims& dims) {
  if (dims.m < 4 || dims.m % 4 != 0) {
    throw std::invalid_argument("lattice m (cell axis) must be a multiple of 4 and >= 4, got " +
                                std::to_string(dims.m));
  }
  if (dims.n < 32 || dims.n % 32 != 0) {
    throw std::invalid_argument("lattice n (memory axis) must be a multiple of 32 and >= 32, got " +
                                std::to_string(dims.n));
  }
}

inline LatticeDims make_dims(int m, int n) {
  LatticeDims d{m, n};
  validate(d);
  return d;
}

enum class Color : std::uint8_t { Red = 0, Blue = 1 };
enum class Direction : std::uint8_t { Forward = 0, Backward = 1 };
enum class Parity : std::uint8_t { Even = 0, Odd = 1 };

constexpr Color opposite(Color c) noexcept { return c == Color::Red ? Color::Blue : Color::Red; }

struct ArrayCode {
  Color color = Color::Red;
  Direction direction = Direction::Forward;
  Parity parity = Parity::Even;

  constexpr int index() const noexcept {
    return (static_cast<int>(color) << 2) | (static_cast<int>(direction) << 1) |
           static_cast<int>(parity);
  }
  static constexpr ArrayCode from_index(int i) noexcept {
    return {static_cast<Color>((i >> 2) & 1), static_cast<Direction>((i >> 1) & 1),
            static_cast<Parity>(i & 1)};
  }

  std::string str() const {
    std::string s(3, ' ');
    s[0] = color == Color::Red ? 'R' : 'B';
    s[1] = direction == Direction::Forward ? 'F' : 'B';
    s[2] = parity == Parity::Even ? 'E' : 'O';
    return s;
  }

  static ArrayCode parse(std::string_view s) {
    if (s.size() != 3 || (s[0] != 'R' && s[0] != 'B') || (s[1] != 'F' && s[1] != 'B') ||
        (s[2] != 'E' && s[2] != 'O')) {
      throw std::invalid_argument("bad array code '" + std::string(s) + "'");
    }
    return {s[0] == 'R' ? Color::Red : Color::Blue,
            s[1] == 'F' ? Direction::Forward : Direction::Backward,
            s[2] == 'E' ? Parity::Even : Parity::Odd};
  }

  friend constexpr bool operator==(const ArrayCode&, const ArrayCode&) = default;
};

inline constexpr ArrayCode kRFE{Color::Red, Direction::Forward, Parity::Even};
inline constexpr ArrayCode kRFO{Color::Red, Direction::Forward, Parity::Odd};
inline constexpr ArrayCode kRBE{Color::Red, Direction::Backward, Parity::Even};
inline constexpr ArrayCode kRBO{Color::Red, Direction::Backward, Parity::Odd};
inline constexpr ArrayCode kBFE{Color::Blue, Direction::Forward, Parity::Even};
inline constexpr ArrayCode kBFO{Color::Blue, Direction::Forward, Parity::Odd};
inline constexpr ArrayCode kBBE{Color::Blue, Direction::Backward, Parity::Even};
inline constexpr ArrayCode kBBO{Color::Blue, Direction::Backward, Parity::Odd};

inline constexpr int kArrayCount = 8;

/// The four arrays of a color, in the order they are flipped.
constexpr std::array<ArrayCode, 4> arrays_of(Color c) noexcept {
  if (c == Color::Red) return {kRFE, kRBO, kRBE, kRFO};
  return {kBFE, kBBO, kBBE, kBFO};
}

/// Same color and parity, opposite fold direction.
constexpr ArrayCode fold_partner(ArrayCode a) noexcept {
  return {a.color, a.direction == Direction::Forward ? Direction::Backward : Direction::Forward,
          a.parity};
}

/// Arrays read at cells i and i+1 (true) versus i and i-1 (false).
constexpr bool reads_right_moat(ArrayCode a) noexcept {
  return a == kRFE || a == kRBO || a == kBBE || a == kBFO;
}

/// Even arrays are read at words j and j+1, odd arrays at j and j-1.
constexpr bool reads_top_halo(ArrayCode a) noexcept { return a.parity == Parity::Even; }

struct SpinCoord {
  ArrayCode code;
  int cell = 1;  // 1-based worker index
  int word = 1;  // 1-based interior word index
  int bit = 0;   // [0, 16)

  friend constexpr bool operator==(const SpinCoord&, const SpinCoord&) = default;
};

inline SpinCoord classify(std::size_t idx, const LatticeDims& dims) {
  if (idx >= dims.spins()) {
    throw std::out_of_range("spin index " + std::to_string(idx) + " outside lattice of " +
                            std::to_string(dims.spins()) + " spins");
  }
  const int c = static_cast<int>(idx / static_cast<std::size_t>(dims.n));
  const int r = static_cast<int>(idx % static_cast<std::size_t>(dims.n));
  SpinCoord s;
  s.code.color = (c + r) % 2 == 0 ? Color::Red : Color::Blue;
  s.code.parity = r % 2 == 0 ? Parity::Even : Parity::Odd;
  s.code.direction = c < dims.m / 2 ? Direction::Forward : Direction::Backward;
  s.cell = s.code.direction == Direction::Forward ? c / 2 + 1 : (dims.m - 1 - c) / 2 + 1;
  s.word = r / kRowsPerWord + 1;
  s.bit = (r % kRowsPerWord) / 2;
  return s;
}

namespace detail {

inline int floor_mod(int a, int b) noexcept {
  const int r = a % b;
  return r < 0 ? r + b : r;
}

// Cell-axis column of an array at an (extended) cell index, before wrapping.
// Each cell holds two lattice columns; the one whose checkerboard color
// matches the array is picked.
inline int array_column(ArrayCode code, int cell, const LatticeDims& dims) noexcept {
  const int p0 = static_cast<int>(code.parity);
  const int want = (p0 + static_cast<int>(code.color)) & 1;  // required parity of c
  if (code.direction == Direction::Forward) {
    const int lo = 2 * (cell - 1);
    return (lo & 1) == want ? lo : lo + 1;
  }
  const int hi = dims.m - 1 - 2 * (cell - 1);
  return floor_mod(hi, 2) == want ? hi : hi - 1;
}

inline int array_row(ArrayCode code, int word, int bit) noexcept {
  return kRowsPerWord * (word - 1) + 2 * bit + static_cast<int>(code.parity);
}

}  // namespace detail

/// Inverse of classify.
inline std::size_t unclassify(const SpinCoord& s, const LatticeDims& dims) {
  if (s.cell < 1 || s.cell > dims.workers() || s.word < 1 || s.word > dims.words() ||
      s.bit < 0 || s.bit >= kBitsPerWord) {
    throw std::out_of_range("spin coordinate outside the interior of " + s.code.str());
  }
  const int c = detail::array_column(s.code, s.cell, dims);
  const int r = detail::array_row(s.code, s.word, s.bit);
  return dims.index(c, r);
}

/// Lattice site represented by bit `bit` of word `word` in cell `cell` of an
/// array, where cell and word may lie one step outside the interior.  The
/// result is wrapped periodically on both axes.
inline std::size_t virtual_site(ArrayCode code, int cell, int word, int bit,
                                const LatticeDims& dims) noexcept {
  const int c = detail::floor_mod(detail::array_column(code, cell, dims), dims.m);
  const int r = detail::floor_mod(detail::array_row(code, word, bit), dims.n);
  return dims.index(c, r);
}

class PlainLattice {
 public:
  PlainLattice() = default;
  explicit PlainLattice(LatticeDims dims, std::int8_t fill = -1)
      : dims_(dims), spins_((validate(dims), dims.spins()), fill) {
    if (fill != 1 && fill != -1) throw std::invalid_argument("spin value must be +1 or -1");
  }

  static PlainLattice all_up(LatticeDims dims) { return PlainLattice(dims, 1); }

  /// Uniform random spins; `coin` returns a uniformly random bit.
  template <typename Coin>
  static PlainLattice random(LatticeDims dims, Coin&& coin) {
    PlainLattice l(dims);
    for (auto& s : l.spins_) s = coin() ? 1 : -1;
    return l;
  }

  const LatticeDims& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return spins_.size(); }

  std::int8_t operator[](std::size_t idx) const noexcept { return spins_[idx]; }
  std::int8_t at(int c, int r) const noexcept { return spins_[dims_.index(c, r)]; }

  void set(std::size_t idx, std::int8_t v) {
    if (v != 1 && v != -1) throw std::invalid_argument("spin value must be +1 or -1");
    spins_.at(idx) = v;
  }
  void flip(std::size_t idx) noexcept { spins_[idx] = static_cast<std::int8_t>(-spins_[idx]); }

  std::span<const std::int8_t> spins() const noexcept { return spins_; }

  friend bool operator==(const PlainLattice&, const PlainLattice&) = default;

 private:
  LatticeDims dims_{};
  std::vector<std::int8_t> spins_;
};

/// The eight halo-expanded word matrices.  Matrix storage is column-major:
/// each cell column is a contiguous vector of vector_length() words.
class PackedArrays {
 public:
  PackedArrays() = default;
  explicit PackedArrays(LatticeDims dims) : dims_(dims) {
    validate(dims);
    for (auto& a : data_) {
      a.assign(static_cast<std::size_t>(dims.columns()) *
                   static_cast<std::size_t>(dims.vector_length()),
               Word{0});
    }
  }

  const LatticeDims& dims() const noexcept { return dims_; }

  std::span<Word> column(ArrayCode code, int cell) noexcept {
    const auto len = static_cast<std::size_t>(dims_.vector_length());
    return {data_[static_cast<std::size_t>(code.index())].data() + len * static_cast<std::size_t>(cell), len};
  }
  std::span<const Word> column(ArrayCode code, int cell) const noexcept {
    const auto len = static_cast<std::size_t>(dims_.vector_length());
    return {data_[static_cast<std::size_t>(code.index())].data() + len * static_cast<std::size_t>(cell), len};
  }

  Word& word(ArrayCode code, int cell, int w) noexcept {
    return column(code, cell)[static_cast<std::size_t>(w)];
  }
  Word word(ArrayCode code, int cell, int w) const noexcept {
    return column(code, cell)[static_cast<std::size_t>(w)];
  }

  bool bit(const SpinCoord& s) const noexcept { return (word(s.code, s.cell, s.word) >> s.bit) & 1U; }

  /// True when every interior word of both objects agrees; halos are ignored.
  bool same_interior(const PackedArrays& other) const noexcept {
    if (!(dims_ == other.dims_)) return false;
    for (int a = 0; a < kArrayCount; ++a) {
      const auto code = ArrayCode::from_index(a);
      for (int cell = 1; cell <= dims_.workers(); ++cell) {
        for (int w = 1; w <= dims_.words(); ++w) {
          if (word(code, cell, w) != other.word(code, cell, w)) return false;
        }
      }
    }
    return true;
  }

  friend bool operator==(const PackedArrays&, const PackedArrays&) = default;

 private:
  LatticeDims dims_{};
  std::array<std::vector<Word>, kArrayCount> data_;
};

/// Packs a plain lattice; bit 1 encodes spin +1.  Halo and moat words are zero.
inline PackedArrays pack(const PlainLattice& lattice) {
  const auto& dims = lattice.dims();
  PackedArrays p(dims);
  for (int a = 0; a < kArrayCount; ++a) {
    const auto code = ArrayCode::from_index(a);
    for (int cell = 1; cell <= dims.workers(); ++cell) {
      const int c = detail::array_column(code, cell, dims);
      auto col = p.column(code, cell);
      for (int w = 1; w <= dims.words(); ++w) {
        Word v = 0;
        for (int t = 0; t < kBitsPerWord; ++t) {
          if (lattice.at(c, detail::array_row(code, w, t)) > 0) v |= static_cast<Word>(1U << t);
        }
        col[static_cast<std::size_t>(w)] = v;
      }
    }
  }
  return p;
}

inline PlainLattice unpack(const PackedArrays& packed) {
  const auto& dims = packed.dims();
  PlainLattice l(dims);
  for (int a = 0; a < kArrayCount; ++a) {
    const auto code = ArrayCode::from_index(a);
    for (int cell = 1; cell <= dims.workers(); ++cell) {
      const int c = detail::array_column(code, cell, dims);
      auto col = packed.column(code, cell);
      for (int w = 1; w <= dims.words(); ++w) {
        const Word v = col[static_cast<std::size_t>(w)];
        for (int t = 0; t < kBitsPerWord; ++t) {
          if ((v >> t) & 1U) l.set(dims.index(c, detail::array_row(code, w, t)), 1);
        }
      }
    }
  }
  return l;
}

/// Location of a whole word inside PackedArrays.
struct WordRef {
  ArrayCode code;
  int cell = 0;
  int word = 0;

  friend constexpr bool operator==(const WordRef&, const WordRef&) = default;
};

/// True for halo/moat positions that some flip reads.  Right-moat arrays keep
/// the column after the last worker, the others the column before the first
/// worker; even arrays keep the top halo word of each worker column, odd
/// arrays the bottom one.
inline bool halo_is_read(ArrayCode code, int cell, int word, const LatticeDims& dims) noexcept {
  const int last_word = dims.vector_length() - 1;
  const int last_cell = dims.columns() - 1;
  const bool interior_word = word >= 1 && word < last_word;
  const bool worker = cell >= 1 && cell < last_cell;
  if (worker) {
    if (interior_word) return false;
    return reads_top_halo(code) ? word == last_word : word == 0;
  }
  if (!interior_word) return false;
  return reads_right_moat(code) ? cell == last_cell : cell == 0;
}

/// Ground-truth content of a halo or moat word after a boundary update:
/// the interior word holding the spins that the position stands for under
/// periodic wrap, or nullopt where the position is never read (kept zero).
/// Interior positions map to themselves.
inline std::optional<WordRef> canonical_halo_source(ArrayCode code, int cell, int word,
                                                    const LatticeDims& dims) {
  if (cell < 0 || cell >= dims.columns() || word < 0 || word >= dims.vector_length()) {
    throw std::out_of_range("halo position outside the expanded matrix of " + code.str());
  }
  const bool interior = cell >= 1 && cell <= dims.workers() && word >= 1 && word <= dims.words();
  if (!interior && !halo_is_read(code, cell, word, dims)) return std::nullopt;
  const auto first = classify(virtual_site(code, cell, word, 0, dims), dims);
  return WordRef{first.code, first.cell, first.word};
}

/// Critical temperature of the square-lattice Ising model in units of J.
inline const double kCriticalTemperature = 2.0 / std::log(1.0 + std::sqrt(2.0));

/// Spontaneous magnetization of the infinite lattice.
inline double onsager_magnetization(double temperature, double coupling = 1.0) {
  if (!(temperature > 0.0)) throw std::domain_error("temperature must be positive");
  if (!(coupling > 0.0)) throw std::domain_error("coupling must be positive");
  if (temperature >= kCriticalTemperature * coupling) return 0.0;
  const double s = std::sinh(2.0 * coupling / temperature);
  const double bracket = 1.0 - 1.0 / (s * s * s * s);
  return bracket <= 0.0 ? 0.0 : std::pow(bracket, 0.125);
}

}  // namespace pising
