// csec: run coded elastic computing experiments and speed analyses.
//
//   csec run <config.json> [--output trace.csv]
//   csec analyze --speeds <table1_power|table1_linreg|file> --L 10 --S 0..2
//   csec selftest
//
// Exit codes: 0 ok, 1 usage or I/O error, 2 config error, 3 infeasible,
// 4 unrecovered step failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "csec/error.hpp"
#include "csec/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitStepFailure = 4;

int exit_code_for(csec::ErrorCode code) {
  switch (code) {
    case csec::ErrorCode::kConfig: return kExitConfig;
    case csec::ErrorCode::kInfeasibleTolerance:
    case csec::ErrorCode::kInfeasibleStep: return kExitInfeasible;
    case csec::ErrorCode::kStepFailure: return kExitStepFailure;
    default: return kExitUsage;
  }
}

// Accepts "2", "0..3" or "0-3".
bool parse_range(const std::string& text, std::size_t& lo, std::size_t& hi) {
  try {
    auto sep = text.find("..");
    std::size_t width = 2;
    if (sep == std::string::npos) {
      sep = text.find('-');
      width = 1;
    }
    if (sep == std::string::npos) {
      lo = hi = std::stoul(text);
    } else {
      lo = std::stoul(text.substr(0, sep));
      hi = std::stoul(text.substr(sep + width));
    }
    return lo <= hi;
  } catch (const std::exception&) {
    return false;
  }
}

int cmd_run(const std::string& config_path, const std::string& output_override) {
  csec::ExperimentConfig config;
  try {
    config = csec::load_config(config_path);
  } catch (const csec::ConfigError& e) {
    std::cerr << config_path << ": " << e.what() << '\n';
    return kExitConfig;
  }
  if (const char* env = std::getenv("CSEC_SEED")) {
    try {
      std::size_t used = 0;
      config.seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      std::cerr << "CSEC_SEED: expected a non-negative integer, got '" << env << "'\n";
      return kExitConfig;
    }
  }
  if (!output_override.empty()) config.output = output_override;

  std::ostringstream trace;
  int code = kExitOk;
  try {
    const auto outcomes = csec::run_experiment(config, trace);
    for (const auto& o : outcomes) {
      std::cerr << o.name << ": simulated time " << o.total_time << ", final error " << o.final_error << '\n';
    }
  } catch (const csec::Error& e) {
    std::cerr << "error (" << csec::to_string(e.code()) << "): " << e.what() << '\n';
    code = exit_code_for(e.code());
  }

  if (config.output.empty()) {
    std::cout << trace.str();
  } else {
    std::ofstream out(config.output, std::ios::binary);
    if (!out) {
      std::cerr << "cannot write " << config.output << '\n';
      return kExitUsage;
    }
    out << trace.str();
  }
  return code;
}

int cmd_analyze(const std::string& speeds_source, std::size_t l, const std::string& s_range) {
  std::size_t lo = 0;
  std::size_t hi = 0;
  if (!parse_range(s_range, lo, hi)) {
    std::cerr << "--S: expected N or A..B, got '" << s_range << "'\n";
    return kExitUsage;
  }
  try {
    const auto speeds = csec::load_speeds(speeds_source);
    csec::write_analysis(std::cout, csec::analyze_speeds(speeds, l, lo, hi));
  } catch (const csec::Error& e) {
    std::cerr << "error (" << csec::to_string(e.code()) << "): " << e.what() << '\n';
    return exit_code_for(e.code());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coded storage elastic computing toolkit"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment config and write its CSV trace");
  std::string config_path;
  std::string output;
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("-o,--output", output, "Trace path (overrides the config's output)");

  auto* analyze = app.add_subcommand("analyze", "Optimal computation times across straggler tolerances");
  std::string speeds = "table1_power";
  std::size_t l = 10;
  std::string s_range = "0";
  analyze->add_option("--speeds", speeds, "table1_power, table1_linreg, or a CSV file of speeds");
  analyze->add_option("--L", l, "Recovery threshold")->required();
  analyze->add_option("--S", s_range, "Straggler tolerance or range A..B");

  auto* selftest = app.add_subcommand("selftest", "Check the worked golden examples");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(config_path, output);
  if (analyze->parsed()) return cmd_analyze(speeds, l, s_range);
  if (selftest->parsed()) return csec::run_selftest(std::cout) ? kExitOk : kExitUsage;
  return kExitUsage;
}
