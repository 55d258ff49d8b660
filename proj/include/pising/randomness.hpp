#pragma once

// A subset of the NIST SP 800-22 statistical test battery, together with the
// float-stream uniformity and independence checks used to qualify the
// generator feeding the Monte Carlo kernel.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pising {

inline constexpr double kSignificance = 0.01;

struct TestReport {
  std::string name;
  double p_value = 0.0;
  bool pass = false;
  std::size_t length = 0;
};

inline TestReport make_report(std::string name, double p, std::size_t n) {
  p = std::clamp(p, 0.0, 1.0);
  return {std::move(name), p, p >= kSignificance, n};
}

namespace special {

// Regularized upper incomplete gamma Q(a, x).  Series expansion of P(a, x)
// for x < a + 1, modified Lentz evaluation of the continued fraction for
// Q(a, x) otherwise (Numerical Recipes 3rd ed., section 6.2).
inline double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw std::domain_error("gamma_q: need a > 0 and x >= 0");
  if (x == 0.0) return 1.0;
  constexpr double eps = 1e-16;
  constexpr int max_iter = 1000000;
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int i = 0; i < max_iter; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * eps) break;
    }
    return std::max(0.0, 1.0 - sum * std::exp(log_prefix));
  }
  constexpr double tiny = std::numeric_limits<double>::min() / eps;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < max_iter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return std::exp(log_prefix) * h;
}

/// Standard normal CDF.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace special

namespace detail {

inline void require_bits(std::span<const std::uint8_t> bits, std::size_t minimum,
                         std::string_view test) {
  if (bits.size() < minimum) {
    throw std::invalid_argument(std::string(test) + " needs at least " + std::to_string(minimum) +
                                " bits, got " + std::to_string(bits.size()));
  }
}

}  // namespace detail

inline TestReport monobit_test(std::span<const std::uint8_t> bits) {
  detail::require_bits(bits, 100, "monobit test");
  long long s = 0;
  for (auto b : bits) s += b ? 1 : -1;
  const double n = static_cast<double>(bits.size());
  const double s_obs = std::fabs(static_cast<double>(s)) / std::sqrt(n);
  return make_report("monobit", std::erfc(s_obs / std::sqrt(2.0)), bits.size());
}

/// Block size giving fewer than 100 blocks, as the standard recommends.
inline std::size_t default_block_size(std::size_t n) { return std::max<std::size_t>(20, n / 64); }

inline TestReport block_frequency_test(std::span<const std::uint8_t> bits, std::size_t block = 0) {
  detail::require_bits(bits, 100, "block frequency test");
  if (block == 0) block = default_block_size(bits.size());
  if (block > bits.size()) {
    throw std::invalid_argument("block frequency test: block size exceeds sequence length");
  }
  const std::size_t blocks = bits.size() / block;
  double chi = 0.0;
  for (std::size_t i = 0; i < blocks; ++i) {
    std::size_t ones = 0;
    for (std::size_t j = 0; j < block; ++j) ones += bits[i * block + j];
    const double pi = static_cast<double>(ones) / static_cast<double>(block) - 0.5;
    chi += pi * pi;
  }
  chi *= 4.0 * static_cast<double>(block);
  return make_report("block-frequency",
                     special::gamma_q(static_cast<double>(blocks) / 2.0, chi / 2.0), bits.size());
}

inline TestReport runs_test(std::span<const std::uint8_t> bits) {
  detail::require_bits(bits, 100, "runs test");
  const double n = static_cast<double>(bits.size());
  std::size_t ones = 0;
  for (auto b : bits) ones += b;
  const double pi = static_cast<double>(ones) / n;
  // Frequency prerequisite: the runs statistic is meaningless otherwise.
  if (std::fabs(pi - 0.5) >= 2.0 / std::sqrt(n)) return make_report("runs", 0.0, bits.size());
  std::size_t v = 1;
  for (std::size_t k = 1; k < bits.size(); ++k) v += bits[k] != bits[k - 1];
  const double num = std::fabs(static_cast<double>(v) - 2.0 * n * pi * (1.0 - pi));
  const double den = 2.0 * std::sqrt(2.0 * n) * pi * (1.0 - pi);
  return make_report("runs", std::erfc(num / den), bits.size());
}

inline TestReport longest_run_test(std::span<const std::uint8_t> bits) {
  detail::require_bits(bits, 128, "longest run test");
  const std::size_t n = bits.size();
  std::size_t block;
  int first_class;  // longest run mapped to class v - first_class, clamped
  std::vector<double> pi;
  if (n < 6272) {
    block = 8;
    first_class = 1;
    pi = {0.2148, 0.3672, 0.2305, 0.1875};
  } else if (n < 750000) {
    block = 128;
    first_class = 4;
    pi = {0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124};
  } else {
    block = 10000;
    first_class = 10;
    pi = {0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727};
  }
  const int classes = static_cast<int>(pi.size());
  std::vector<double> counts(pi.size(), 0.0);
  const std::size_t blocks = n / block;
  for (std::size_t i = 0; i < blocks; ++i) {
    int run = 0;
    int longest = 0;
    for (std::size_t j = 0; j < block; ++j) {
      run = bits[i * block + j] ? run + 1 : 0;
      longest = std::max(longest, run);
    }
    const int cls = std::clamp(longest - first_class, 0, classes - 1);
    counts[static_cast<std::size_t>(cls)] += 1.0;
  }
  double chi = 0.0;
  const double nb = static_cast<double>(blocks);
  for (int k = 0; k < classes; ++k) {
    const double expected = nb * pi[static_cast<std::size_t>(k)];
    const double d = counts[static_cast<std::size_t>(k)] - expected;
    chi += d * d / expected;
  }
  return make_report("longest-run", special::gamma_q((classes - 1) / 2.0, chi / 2.0), n);
}

inline TestReport cusum_test(std::span<const std::uint8_t> bits, bool forward = true) {
  detail::require_bits(bits, 100, "cumulative sums test");
  const std::size_t n_bits = bits.size();
  long long s = 0;
  long long z = 0;
  for (std::size_t k = 0; k < n_bits; ++k) {
    const auto b = forward ? bits[k] : bits[n_bits - 1 - k];
    s += b ? 1 : -1;
    z = std::max(z, s < 0 ? -s : s);
  }
  const double n = static_cast<double>(n_bits);
  const double zf = static_cast<double>(z);
  const double sq = std::sqrt(n);
  using special::normal_cdf;
  double sum1 = 0.0;
  for (long long k = static_cast<long long>(std::floor((-n / zf + 1.0) / 4.0));
       k <= static_cast<long long>(std::floor((n / zf - 1.0) / 4.0)); ++k) {
    const double kd = static_cast<double>(k);
    sum1 += normal_cdf((4.0 * kd + 1.0) * zf / sq) - normal_cdf((4.0 * kd - 1.0) * zf / sq);
  }
  double sum2 = 0.0;
  for (long long k = static_cast<long long>(std::floor((-n / zf - 3.0) / 4.0));
       k <= static_cast<long long>(std::floor((n / zf - 1.0) / 4.0)); ++k) {
    const double kd = static_cast<double>(k);
    sum2 += normal_cdf((4.0 * kd + 3.0) * zf / sq) - normal_cdf((4.0 * kd + 1.0) * zf / sq);
  }
  return make_report(forward ? "cusum-forward" : "cusum-backward", 1.0 - sum1 + sum2, n_bits);
}

/// Every implemented test, in a fixed order.
inline std::vector<TestReport> run_battery(std::span<const std::uint8_t> bits) {
  return {monobit_test(bits),     block_frequency_test(bits), runs_test(bits),
          longest_run_test(bits), cusum_test(bits, true),     cusum_test(bits, false)};
}

inline bool all_pass(std::span<const TestReport> reports) {
  return std::all_of(reports.begin(), reports.end(), [](const TestReport& r) { return r.pass; });
}

struct HistogramReport {
  std::vector<double> frequencies;
  double max_frequency = 0.0;
  double min_frequency = 0.0;
  /// (max - min) / min; infinite when some bin is empty.
  double spread = 0.0;
  bool degenerate = false;
};

inline HistogramReport frequency_histogram(std::span<const float> values, double bin_width) {
  if (values.empty()) throw std::invalid_argument("frequency histogram of an empty sample");
  if (!(bin_width > 0.0) || bin_width > 1.0) {
    throw std::invalid_argument("bin width must be in (0, 1]");
  }
  const long long bins = std::llround(1.0 / bin_width);
  if (std::fabs(static_cast<double>(bins) * bin_width - 1.0) > 1e-9) {
    throw std::invalid_argument("bin width must divide the unit interval evenly");
  }
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (float v : values) {
    if (!(v >= 0.0f && v < 1.0f)) throw std::invalid_argument("histogram input outside [0, 1)");
    const auto idx = std::min<long long>(bins - 1, static_cast<long long>(static_cast<double>(v) *
                                                                         static_cast<double>(bins)));
    counts[static_cast<std::size_t>(idx)] += 1.0;
  }
  HistogramReport r;
  const double total = static_cast<double>(values.size());
  for (auto& c : counts) c /= total;
  r.frequencies = std::move(counts);
  const auto [lo, hi] = std::minmax_element(r.frequencies.begin(), r.frequencies.end());
  r.min_frequency = *lo;
  r.max_frequency = *hi;
  if (r.min_frequency <= 0.0) {
    r.degenerate = true;
    r.spread = std::numeric_limits<double>::infinity();
  } else {
    r.spread = (r.max_frequency - r.min_frequency) / r.min_frequency;
  }
  return r;
}

struct JointReport {
  int bins = 0;
  std::vector<std::size_t> counts;  // row-major [x_bin * bins + y_bin]
  double chi_square = 0.0;
  double dof = 0.0;
  double p_value = 0.0;
};

/// Pairs (x_k, x_{k+1}) binned on a bins x bins grid with a chi-square test
/// against the uniform joint density.
inline JointReport lag1_joint(std::span<const float> values, int bins = 100) {
  if (values.size() < 2) throw std::invalid_argument("lag-1 joint histogram needs >= 2 samples");
  if (bins < 2) throw std::invalid_argument("lag-1 joint histogram needs >= 2 bins per axis");
  JointReport r;
  r.bins = bins;
  const auto b = static_cast<std::size_t>(bins);
  r.counts.assign(b * b, 0);
  auto bin_of = [&](float v) {
    const auto i = static_cast<long long>(static_cast<double>(v) * bins);
    return static_cast<std::size_t>(std::clamp<long long>(i, 0, bins - 1));
  };
  for (std::size_t k = 0; k + 1 < values.size(); ++k) {
    ++r.counts[bin_of(values[k]) * b + bin_of(values[k + 1])];
  }
  const double expected = static_cast<double>(values.size() - 1) / static_cast<double>(b * b);
  for (auto c : r.counts) {
    const double d = static_cast<double>(c) - expected;
    r.chi_square += d * d / expected;
  }
  r.dof = static_cast<double>(b * b - 1);
  r.p_value = special::gamma_q(r.dof / 2.0, r.chi_square / 2.0);
  return r;
}

/// bit[i] = value[i] >= median(values).
inline std::vector<std::uint8_t> median_threshold_bits(std::span<const float> values) {
  if (values.size() < 100) throw std::invalid_argument("median thresholding needs >= 100 samples");
  std::vector<float> sorted(values.begin(), values.end());
  const std::size_t mid = sorted.size() / 2;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
  double median = sorted[mid];
  if (sorted.size() % 2 == 0) {
    const float lower = *std::max_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (static_cast<double>(lower) + median);
  }
  std::vector<std::uint8_t> bits(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    bits[i] = static_cast<double>(values[i]) >= median ? 1 : 0;
  }
  return bits;
}

/// Parses a bit stream.  Content made of printable text is read as ASCII
/// '0'/'1' digits (whitespace ignored, '#' starts a comment); anything else
/// is raw binary, most significant bit of each byte first.
inline std::vector<std::uint8_t> parse_bitstream(std::string_view content) {
  const bool text = std::all_of(content.begin(), content.end(), [](char ch) {
    const auto u = static_cast<unsigned char>(ch);
    return u == '\n' || u == '\r' || u == '\t' || (u >= 0x20 && u < 0x7f);
  });
  std::vector<std::uint8_t> bits;
  if (!text) {
    bits.reserve(content.size() * 8);
    for (char ch : content) {
      const auto u = static_cast<unsigned char>(ch);
      for (int b = 7; b >= 0; --b) bits.push_back(static_cast<std::uint8_t>((u >> b) & 1U));
    }
    return bits;
  }
  std::size_t line = 1;
  bool comment = false;
  for (char ch : content) {
    if (ch == '\n') {
      ++line;
      comment = false;
      continue;
    }
    if (comment) continue;
    if (ch == '0' || ch == '1') {
      bits.push_back(static_cast<std::uint8_t>(ch - '0'));
    } else if (ch == '#') {
      comment = true;
    } else if (ch != ' ' && ch != '\t' && ch != '\r') {
      throw std::runtime_error("bit stream line " + std::to_string(line) +
                               ": unexpected character '" + std::string(1, ch) + "'");
    }
  }
  return bits;
}

inline std::vector<std::uint8_t> read_bitstream(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open bit stream file '" + path + "'");
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_bitstream(content);
}

}  // namespace pising
