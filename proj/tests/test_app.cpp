#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <locale>
#include <sstream>
#include <string>

#include "pising/app.hpp"

using namespace pising;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  auto p = fs::temp_directory_path() / ("pising_test_" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PISING_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

SimConfig small_config() {
  SimConfig c;
  c.m = 12;
  c.n = 96;
  c.temperatures = {2.0};
  c.sweeps = 100;
  c.measure_interval = 10;
  c.seed = 5;
  c.threads = 1;
  return c;
}

}  // namespace

TEST(Config, ParsesKeyValues) {
  const auto kv = parse_key_values("# header\nm = 16\n n=64 # trailing\n\ntemperature = 1.0, 2.0\n");
  EXPECT_EQ(kv.at("m"), "16");
  EXPECT_EQ(kv.at("n"), "64");
  const auto c = make_config(kv);
  EXPECT_EQ(c.m, 16);
  EXPECT_EQ(c.temperatures, (std::vector<double>{1.0, 2.0}));
  EXPECT_THROW(parse_key_values("m 16\n"), std::invalid_argument);
  EXPECT_THROW(make_config({{"bogus", "1"}}), std::invalid_argument);
  EXPECT_THROW(make_config({{"sweeps", "ten"}}), std::invalid_argument);
  EXPECT_THROW(make_config({{"init", "hot"}}), std::invalid_argument);
  EXPECT_EQ(make_config({{"init", "all-up"}}).init, InitMode::AllUp);
}

TEST(Config, TemperatureRange) {
  SimConfig c;
  c.t_start = 1.0;
  c.t_stop = 3.0;
  c.t_step = 0.5;
  EXPECT_EQ(resolve_temperatures(c), (std::vector<double>{1.0, 1.5, 2.0, 2.5, 3.0}));
  c.t_start = 2.0;
  c.t_stop = 2.6;
  c.t_step = 0.05;
  const auto t = resolve_temperatures(c);
  ASSERT_EQ(t.size(), 13U);
  EXPECT_EQ(t[1], 2.05);
  EXPECT_EQ(t.back(), 2.6);
  c.t_step = 0.0;
  EXPECT_THROW(resolve_temperatures(c), std::invalid_argument);
  SimConfig none;
  EXPECT_THROW(resolve_temperatures(none), std::invalid_argument);
}

TEST(Config, InvalidDimsMessage) {
  auto c = small_config();
  c.m = 10;
  try {
    to_run_config(c);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("multiple of 4"), std::string::npos);
  }
}

TEST(Simulate, RowCountAndHeader) {
  auto c = small_config();
  c.n_sim = 2;
  const auto csv = csv_string(simulate(c));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "sweep,sim,temperature,abs_magnetization,energy_per_spin");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 10 * 2);
}

TEST(Simulate, FiveTemperaturesFromRange) {
  auto c = small_config();
  c.temperatures.clear();
  c.t_start = 1.0;
  c.t_stop = 3.0;
  c.t_step = 0.5;
  const auto t = simulate(c);
  EXPECT_EQ(t.simulations(), 5U);
}

TEST(Simulate, ByteIdenticalAcrossRunsAndThreads) {
  auto c = small_config();
  c.temperatures = {1.5, 2.2, 3.0};
  const auto a = csv_string(simulate(c));
  const auto b = csv_string(simulate(c));
  c.threads = 3;
  const auto d = csv_string(simulate(c));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, d);
}

TEST(Simulate, LocaleIndependent) {
  EXPECT_EQ(format_g9(0.1234567891234), "0.123456789");
  EXPECT_EQ(format_g9(-1.5), "-1.5");
  EXPECT_EQ(format_g9(2.05), "2.05");
  EXPECT_EQ(format_g9(1234567.0), "1234567");
}

TEST(Simulate, WritesFileAndReportsUnwritablePath) {
  const auto dir = temp_dir();
  auto c = small_config();
  c.output = (dir / "out.csv").string();
  simulate(c);
  EXPECT_EQ(slurp(c.output), csv_string(simulate(small_config())));
  c.output = (dir / "missing" / "x.csv").string();
  EXPECT_THROW(simulate(c), std::runtime_error);
}

TEST(Validate, CrossingInterpolation) {
  const auto tc = crossing_temperature({2.0, 2.2, 2.4}, {0.9, 0.6, 0.2});
  ASSERT_TRUE(tc.has_value());
  EXPECT_NEAR(*tc, 2.25, 1e-12);
  EXPECT_FALSE(crossing_temperature({2.0, 2.2}, {0.9, 0.8}).has_value());
}

TEST(Validate, SingleTemperatureHasNoTc) {
  auto c = small_config();
  c.m = 16;
  c.n = 32;
  c.temperatures = {1.5};
  c.sweeps = 2000;
  c.init = InitMode::AllUp;
  const auto rep = validate(c);
  ASSERT_EQ(rep.rows.size(), 1U);
  EXPECT_FALSE(rep.tc_estimate.has_value());
  EXPECT_FALSE(rep.warnings.empty());
}

TEST(Validate, ToleranceBands) {
  Summary s;
  s.temperature = 1.5;
  s.deviation = 0.009;
  EXPECT_TRUE(*judge(s, std::nullopt, 1.0).pass);
  s.deviation = -0.011;
  EXPECT_FALSE(*judge(s, std::nullopt, 1.0).pass);
  s.temperature = 2.0;
  EXPECT_TRUE(*judge(s, std::nullopt, 1.0).pass);
  s.temperature = 2.25;
  EXPECT_FALSE(judge(s, std::nullopt, 1.0).pass.has_value());
  s.temperature = 4.0;
  s.mean = 0.08;
  EXPECT_TRUE(*judge(s, std::nullopt, 1.0).pass);
  s.mean = 0.12;
  EXPECT_FALSE(*judge(s, std::nullopt, 1.0).pass);
  EXPECT_TRUE(*judge(s, 0.2, 1.0).pass);
}

TEST(Bench, AttemptsAreExact) {
  auto c = small_config();
  c.temperatures = {2.0, 2.5, 3.0};
  c.sweeps = 20;
  c.warmup = 3;
  const auto rep = bench(c);
  ASSERT_EQ(rep.rows.size(), 3U);  // 1, 2, 3 simulations
  EXPECT_TRUE(rep.counts_ok());
  EXPECT_EQ(rep.rows[0].attempts, 20U * 1152U);
  EXPECT_EQ(rep.rows[1].attempts, 2U * rep.rows[0].attempts);
  EXPECT_EQ(rep.rows[2].attempts, 3U * 20U * 1152U);
  EXPECT_GT(rep.rows[2].flip_rate(), 0.0);
}

TEST(RngTest, InternalSmallPasses) {
  RngTestOptions o;
  o.bits = 200000;
  o.floats = 200000;
  o.median_floats = 100000;
  const auto rep = rngtest(o);
  EXPECT_EQ(rep.bit_tests.size(), 6U);
  EXPECT_TRUE(all_pass(rep.bit_tests));
  EXPECT_TRUE(all_pass(rep.median_tests));
}

TEST(RngTest, ZeroFileFails) {
  const auto dir = temp_dir();
  const auto path = dir / "zeros.txt";
  std::ofstream(path) << std::string(1000, '0') << '\n';
  RngTestOptions o;
  o.source = "file";
  o.file = path.string();
  const auto rep = rngtest(o);
  EXPECT_FALSE(rep.pass());
  EXPECT_FALSE(rep.bit_tests[0].pass);
}

TEST(Selftest, PassesAndDetectsFault) {
  const auto a = selftest();
  EXPECT_TRUE(all_pass(a));
  const auto b = selftest();
  std::ostringstream sa, sb;
  print(a, sa);
  print(b, sb);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_FALSE(all_pass(selftest(true)));
}

TEST(Cli, ExitCodesAndPrecedence) {
  const auto dir = temp_dir();
  const auto cfg = dir / "run.cfg";
  std::ofstream(cfg) << "m = 12\nn = 96\ntemperature = 2.0\nsweeps = 50\nmeasure_interval = 10\n"
                        "output = " << (dir / "from_config.csv").string() << "\n";
  const auto out = dir / "from_flag.csv";
  EXPECT_EQ(run_cli("simulate --config " + cfg.string() + " --output " + out.string() +
                    " --sweeps 30"),
            0);
  ASSERT_TRUE(fs::exists(out));
  EXPECT_FALSE(fs::exists(dir / "from_config.csv"));
  std::istringstream in(slurp(out));
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
  EXPECT_EQ(run_cli("simulate --m 10 --n 96 --temperature 2.0"), 2);
  EXPECT_EQ(run_cli("selftest"), 0);
  EXPECT_EQ(run_cli("selftest --inject-fault"), 1);
  const auto zeros = dir / "zeros.txt";
  std::ofstream(zeros) << std::string(512, '0');
  EXPECT_EQ(run_cli("rngtest --source file --file " + zeros.string()), 1);
  fs::remove_all(dir);
}
