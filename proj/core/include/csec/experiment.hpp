#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "csec/apps.hpp"
#include "csec/coding.hpp"
#include "csec/runtime.hpp"

namespace csec {

enum class App { kPowerIteration, kLinearRegression };

struct SchemeConfig {
  std::string name;
  Scheme scheme = Scheme::kHeterogeneous;
  std::size_t tolerance = 0;
  StragglerPolicy policy = NoStragglers{};
  std::vector<MachineId> machines;  // roster subset; empty means all (uncoded: first L stable)
};

struct MatrixSource {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string file;  // overrides rows/cols when set
};

struct ExperimentConfig {
  App app = App::kPowerIteration;
  MatrixSource matrix;
  std::size_t recovery_threshold = 10;
  std::optional<GeneratorKind> generator;  // default: systematic Vandermonde, points 1..N-L
  std::string speed_source;                // preset name, or empty when speeds is literal
  std::vector<double> speeds;
  std::vector<MachineId> elastic;
  double p_available = 0.5;
  std::vector<SchemeConfig> schemes;
  double gamma = 0.5;
  std::vector<double> initial_speed_estimate;
  std::size_t iterations = 50;
  std::uint64_t seed = 0;
  std::string output;
  std::optional<double> step_size;
  double label_noise = 0.1;
  double speed_drift = 0.0;
  bool degrade = false;
  std::size_t retries = 1;
};

// Thrown for malformed or schema-violating configs. field is a JSON pointer
// ("/schemes/1/S"); line/column are set for syntax errors.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string field, std::size_t line = 0, std::size_t column = 0)
      : Error(ErrorCode::kConfig, what), field_(std::move(field)), line_(line), column_(column) {}

  const std::string& field() const noexcept { return field_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::string field_;
  std::size_t line_;
  std::size_t column_;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);

// Roster of 20 workers with the measured table1 speeds, 12 stable and 8 elastic (p = 0.5),
// L = 10, and five schemes: uncoded, homogeneous and
// heterogeneous without stragglers, and both with S = 2 and the two slowest
// machines ignored.
ExperimentConfig ec2_preset(App app);

inline constexpr const char* kTraceHeader =
    "scheme,step,iteration,n_available,n_stragglers,step_time,cum_time,error_metric,decode_ok";

// Per-scheme seed: stable hash of the scheme name mixed into the base seed.
std::uint64_t scheme_seed(std::uint64_t base_seed, const std::string& name);

struct SchemeOutcome {
  std::string name;
  IterateTrace trace;
  double final_error = 0.0;
  double total_time = 0.0;
};

// Runs every scheme and writes one CSV section per scheme, in config order.
// Throws Error (kInfeasibleTolerance / kInfeasibleStep / kStepFailure) after
// writing whatever trace rows were produced.
std::vector<SchemeOutcome> run_experiment(const ExperimentConfig& config, std::ostream& trace_out);

void write_trace_rows(std::ostream& out, const std::string& scheme, const IterateTrace& trace);

struct SpeedAnalysisRow {
  std::size_t tolerance = 0;
  bool feasible = false;
  double heterogeneous_time = 0.0;
  std::size_t threshold_index = 0;
  double homogeneous_time = 0.0;
  double uncoded_time = 0.0;
  double heterogeneous_over_homogeneous = 0.0;
  double heterogeneous_over_uncoded = 0.0;
};

// Per S in [s_min, s_max]. Uncoded time is 1 / min speed over the first L machines.
std::vector<SpeedAnalysisRow> analyze_speeds(std::span<const double> speeds, std::size_t recovery_threshold,
                                             std::size_t s_min, std::size_t s_max);
void write_analysis(std::ostream& out, const std::vector<SpeedAnalysisRow>& rows);

// Resolves a preset name or reads a speeds file (CSV, all values flattened).
std::vector<double> load_speeds(const std::string& preset_or_path);

// Golden checks for the five worked examples; prints one line per check.
bool run_selftest(std::ostream& out);

}  // namespace csec
