#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "csec/error.hpp"
#include "csec/experiment.hpp"
#include "csec/loadopt.hpp"
#include "csec/matrix_io.hpp"
#include "csec/table1.hpp"

namespace csec {
namespace {

const std::filesystem::path kSourceDir = CSEC_SOURCE_DIR;

std::string small_config(const std::string& extra = "", std::size_t iterations = 3) {
  return R"({
  "app": "power_iteration",
  "matrix": {"rows": 24, "cols": 24},
  "L": 3,
  "machines": {"speeds": [1, 1, 2, 2, 3, 0.5], "elastic": [5], "p_available": 0.5},
  "schemes": [
    {"name": "het", "scheme": "heterogeneous", "S": 1, "straggler_policy": {"kind": "slowest_k", "k": 1}},
    {"name": "hom", "scheme": "homogeneous", "S": 0, "machines": [0, 1, 2, 3, 4]},
    {"name": "unc", "scheme": "uncoded", "machines": [0, 1, 2]}
  ],
  "iterations": )" + std::to_string(iterations) + R"(,
  "seed": 5)" + extra + "\n}\n";
}

std::string run_to_string(const ExperimentConfig& c) {
  std::ostringstream out;
  run_experiment(c, out);
  return out.str();
}

template <typename Fn>
ConfigError capture_config_error(Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "expected ConfigError";
  return ConfigError("", "");
}

TEST(ParseConfig, SmallConfig) {
  const auto c = parse_config(small_config());
  EXPECT_EQ(c.app, App::kPowerIteration);
  EXPECT_EQ(c.matrix.rows, 24u);
  EXPECT_EQ(c.recovery_threshold, 3u);
  EXPECT_EQ(c.speeds.size(), 6u);
  EXPECT_EQ(c.elastic, (std::vector<MachineId>{5}));
  ASSERT_EQ(c.schemes.size(), 3u);
  EXPECT_EQ(c.schemes[0].tolerance, 1u);
  EXPECT_EQ(std::get<SlowestK>(c.schemes[0].policy).k, 1u);
  EXPECT_EQ(c.schemes[2].scheme, Scheme::kUncoded);
  EXPECT_EQ(c.gamma, 0.5);
  EXPECT_EQ(c.seed, 5u);
}

TEST(ParseConfig, UnknownKeyNamesField) {
  const auto e = capture_config_error([] { parse_config(small_config(",\n  \"gamma_typo\": 0.3")); });
  EXPECT_EQ(e.field(), "/gamma_typo");
  const auto nested = capture_config_error([] {
    std::string text = small_config();
    text.replace(text.find("\"k\": 1"), 6, "\"k\": 1, \"kk\": 2");
    parse_config(text);
  });
  EXPECT_EQ(nested.field(), "/schemes/0/straggler_policy/kk");
}

TEST(ParseConfig, SyntaxErrorReportsLine) {
  std::string text = small_config();
  text.replace(text.find("\"L\": 3,"), 7, "\"L\": 3,,");
  const auto e = capture_config_error([&] { parse_config(text); });
  EXPECT_EQ(e.line(), 4u);
  EXPECT_GT(e.column(), 1u);
}

TEST(ParseConfig, SchemaViolations) {
  EXPECT_EQ(capture_config_error([] {
              std::string text = small_config();
              text.replace(text.find(",\n  \"seed\": 5"), 13, "");
              parse_config(text);
            }).field(),
            "/seed");
  EXPECT_EQ(capture_config_error([] {
              std::string text = small_config();
              text.replace(text.find("\"S\": 0"), 6, "\"S\": -1");
              parse_config(text);
            }).field(),
            "/schemes/1/S");
  EXPECT_EQ(capture_config_error([] {
              std::string text = small_config();
              text.replace(text.find("\"heterogeneous\""), 15, "\"fancy\"");
              parse_config(text);
            }).field(),
            "/schemes/0/scheme");
  EXPECT_EQ(capture_config_error([] {
              std::string text = small_config();
              text.replace(text.find("[0, 1, 2]}"), 9, "[0, 1]");
              parse_config(text);
            }).field(),
            "/schemes/2/machines");
  EXPECT_EQ(capture_config_error([] {
              std::string text = small_config();
              text.replace(text.find("\"power_iteration\""), 17, "\"sorting\"");
              parse_config(text);
            }).field(),
            "/app");
  EXPECT_THROW(load_config(kSourceDir / "does_not_exist.json"), ConfigError);
}

TEST(ParseConfig, JsonRoundTrip) {
  const auto c = parse_config(small_config(",\n  \"gamma\": 0.25,\n  \"step_size\": 0.01"));
  const std::string once = config_to_json(c);
  EXPECT_EQ(config_to_json(parse_config(once)), once);
  const std::string preset = config_to_json(ec2_preset(App::kLinearRegression));
  EXPECT_EQ(config_to_json(parse_config(preset)), preset);
}

TEST(Ec2Preset, RosterAndSchemes) {
  for (App app : {App::kPowerIteration, App::kLinearRegression}) {
    const auto c = ec2_preset(app);
    EXPECT_EQ(c.speeds.size(), 20u);
    EXPECT_EQ(c.elastic.size(), 8u);
    EXPECT_EQ(c.p_available, 0.5);
    EXPECT_EQ(c.recovery_threshold, 10u);
    ASSERT_EQ(c.schemes.size(), 5u);
    EXPECT_EQ(c.schemes[4].tolerance, 2u);
    EXPECT_EQ(std::get<SlowestK>(c.schemes[4].policy).k, 2u);
  }
}

TEST(Ec2Preset, ShippedConfigsMatchPresets) {
  const auto power = load_config(kSourceDir / "configs" / "ec2_power.json");
  EXPECT_EQ(config_to_json(power), config_to_json(ec2_preset(App::kPowerIteration)));
  const auto linreg = load_config(kSourceDir / "configs" / "ec2_linreg.json");
  EXPECT_EQ(config_to_json(linreg), config_to_json(ec2_preset(App::kLinearRegression)));
}

TEST(Table1, FixtureFileMatchesPresets) {
  const Matrix table = load_matrix(kSourceDir / "data" / "table1_speeds.csv");
  ASSERT_EQ(table.rows(), 5);
  ASSERT_EQ(table.cols(), 8);
  // Columns: large, large, xlarge, xlarge for power iteration, then the same for regression.
  for (Eigen::Index col = 0; col < 4; ++col) {
    for (Eigen::Index row = 0; row < 5; ++row) {
      EXPECT_EQ(table(row, col), kTable1PowerIteration[col * 5 + row]);
      EXPECT_EQ(table(row, col + 4), kTable1LinearRegression[col * 5 + row]);
    }
  }
  EXPECT_EQ(table1_preset("table1_power").size(), 20u);
  EXPECT_TRUE(table1_preset("table2").empty());
}

TEST(RunExperiment, ZeroIterationsIsHeaderOnly) {
  auto c = parse_config(small_config("", 0));
  EXPECT_EQ(run_to_string(c), std::string(kTraceHeader) + "\n");
}

TEST(RunExperiment, TraceShapeAndDeterminism) {
  const auto c = parse_config(small_config());
  const std::string first = run_to_string(c);
  EXPECT_EQ(first, run_to_string(c));

  std::istringstream lines(first);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, kTraceHeader);
  std::map<std::string, double> cum;
  std::map<std::string, std::size_t> rows;
  while (std::getline(lines, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    ASSERT_EQ(cells.size(), 9u) << line;
    EXPECT_EQ(cells[8], "true");
    cum[cells[0]] += std::stod(cells[5]);
    EXPECT_NEAR(std::stod(cells[6]), cum[cells[0]], 1e-9 * (1 + cum[cells[0]]));
    ++rows[cells[0]];
  }
  EXPECT_EQ(rows["het"], 3u);
  EXPECT_EQ(rows.size(), 3u);

  auto other = c;
  other.seed = 6;
  EXPECT_NE(run_to_string(other), first);
}

TEST(RunExperiment, LinearRegressionRuns) {
  std::string text = small_config(",\n  \"step_size\": 0.01");
  text.replace(text.find("\"power_iteration\""), 17, "\"linreg\"");
  text.replace(text.find("\"cols\": 24"), 10, "\"cols\": 4");
  const auto outcomes = [&] {
    std::ostringstream out;
    return run_experiment(parse_config(text), out);
  }();
  ASSERT_EQ(outcomes.size(), 3u);
  for (const auto& o : outcomes) {
    EXPECT_EQ(o.trace.iterations.size(), 3u);
    EXPECT_GT(o.total_time, 0.0);
  }
}

TEST(RunExperiment, InfeasibleToleranceIsReportedBeforeAnyRow) {
  std::string text = small_config();
  text.replace(text.find("\"S\": 1"), 6, "\"S\": 4");
  text.replace(text.find("\"k\": 1"), 6, "\"k\": 4");
  const auto c = parse_config(text);
  std::ostringstream out;
  try {
    run_experiment(c, out);
    FAIL() << "expected throw";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasibleTolerance);
  }
}

TEST(SchemeSeed, StableAndDistinct) {
  EXPECT_EQ(scheme_seed(1, "het"), scheme_seed(1, "het"));
  EXPECT_NE(scheme_seed(1, "het"), scheme_seed(1, "hom"));
  EXPECT_NE(scheme_seed(1, "het"), scheme_seed(2, "het"));
}

TEST(AnalyzeSpeeds, TableOnePowerSpeeds) {
  const auto speeds = load_speeds("table1_power");
  const auto rows = analyze_speeds(speeds, 10, 0, 10);
  ASSERT_EQ(rows.size(), 11u);
  EXPECT_NEAR(rows[0].heterogeneous_time, 10.0 / 18.79, 1e-12);
  EXPECT_NEAR(rows[0].homogeneous_time, 0.5 / 0.59, 1e-12);
  EXPECT_LE(rows[0].heterogeneous_over_homogeneous, 0.70);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_TRUE(rows[i].feasible);
    EXPECT_EQ(rows[i].heterogeneous_time, optimal_load_vector(speeds, 10, i).time);
    if (i > 0) EXPECT_GE(rows[i].heterogeneous_time, rows[i - 1].heterogeneous_time);
  }
  const auto over = analyze_speeds(speeds, 10, 11, 11);
  EXPECT_FALSE(over[0].feasible);
}

TEST(AnalyzeSpeeds, UniformSpeedsAgree) {
  const std::vector<double> s(7, 1.3);
  for (const auto& row : analyze_speeds(s, 3, 0, 4)) {
    EXPECT_EQ(row.heterogeneous_time, row.homogeneous_time);
  }
  std::ostringstream out;
  write_analysis(out, analyze_speeds(s, 3, 0, 1));
  EXPECT_NE(out.str().find('\n'), std::string::npos);
}

TEST(LoadSpeeds, FileAndErrors) {
  const auto from_file = load_speeds((kSourceDir / "data" / "table1_speeds.csv").string());
  EXPECT_EQ(from_file.size(), 40u);
  EXPECT_THROW(load_speeds("no_such_preset"), Error);
}

TEST(Selftest, Passes) {
  std::ostringstream out;
  EXPECT_TRUE(run_selftest(out));
  EXPECT_EQ(out.str().find("FAIL"), std::string::npos);
}

}  // namespace
}  // namespace csec
