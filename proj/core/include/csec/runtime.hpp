#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "csec/assignment.hpp"
#include "csec/cluster.hpp"
#include "csec/coding.hpp"
#include "csec/error.hpp"

namespace csec {

enum class Scheme { kUncoded, kHomogeneousCyclic, kHeterogeneous };

std::string_view to_string(Scheme scheme);

struct MasterState {
  std::vector<double> speed_estimate;  // indexed by machine id
  double gamma = 0.5;
  std::size_t tolerance = 0;
  Scheme scheme = Scheme::kHeterogeneous;
};

// estimate[n] <- gamma * measured[n] + (1 - gamma) * estimate[n] for every
// measured machine; others keep their previous estimate.
std::vector<double> update_speed_estimate(std::span<const double> estimate,
                                          const std::map<MachineId, double>& measured, double gamma);

struct StepTrace {
  std::uint64_t step = 0;
  std::size_t attempts = 1;
  std::vector<MachineId> available;
  std::size_t effective_tolerance = 0;
  std::size_t num_sets = 0;
  std::map<MachineId, double> loads;
  std::vector<MachineId> responders;  // finish order
  std::vector<MachineId> stragglers;
  double step_time = 0.0;             // includes time spent on failed attempts
  bool decode_ok = false;
  std::map<MachineId, double> measured;
};

// Per-machine partial products over the rows the assignment gives it. Each
// vector has one entry per cs-matrix row; unassigned rows hold NaN.
using WorkerResults = std::map<MachineId, std::vector<double>>;

WorkerResults compute_worker_products(const CodedStore& store, const Assignment& assignment,
                                      std::span<const double> w);

struct DecodeResult {
  bool ok = false;
  Vector y;  // empty unless ok
  std::vector<std::size_t> responders_per_set;
};

// For each row set, decodes with the first L machines of the set that appear
// in responder_order.
DecodeResult collect_and_decode(const WorkerResults& results, const Assignment& assignment,
                                std::span<const MachineId> responder_order, Decoder& decoder,
                                const CodedStore& store);

struct ClusterInputs {
  std::vector<MachineProfile> profiles;
  StragglerPolicy policy = NoStragglers{};
  std::uint64_t seed = 0;
  SpeedDrift drift;
};

struct RuntimeOptions {
  bool degrade = false;      // lower S to N_t - L when too few machines are available
  std::size_t retries = 1;   // fresh-availability retries after an undecodable attempt
};

class StepFailure : public Error {
 public:
  StepFailure(const std::string& what, StepTrace trace)
      : Error(ErrorCode::kStepFailure, what), trace_(std::move(trace)) {}

  const StepTrace& trace() const noexcept { return trace_; }

 private:
  StepTrace trace_;
};

struct StepResult {
  Vector y;
  StepTrace trace;
};

// Master side of the adaptive straggler-tolerant loop. Each execute_step is
// one distributed product y = X w against a coded store, using the current
// speed estimate to build the assignment and refining the estimate from the
// responders' measured speeds.
class ElasticRuntime {
 public:
  ElasticRuntime(GeneratorMatrix generator, MasterState state, ClusterInputs cluster,
                 RuntimeOptions options = {});

  StepResult execute_step(const CodedStore& store, std::span<const double> w);

  // Assignment the master would issue for this available set under the current estimate.
  Assignment plan(std::span<const MachineId> available, std::size_t tolerance, std::size_t total_rows) const;

  const MasterState& state() const noexcept { return state_; }
  const GeneratorMatrix& generator() const noexcept { return generator_; }
  const ClusterInputs& cluster() const noexcept { return cluster_; }
  std::uint64_t steps_taken() const noexcept { return next_step_; }

 private:
  GeneratorMatrix generator_;
  MasterState state_;
  ClusterInputs cluster_;
  RuntimeOptions options_;
  Decoder decoder_;
  std::uint64_t next_step_ = 0;
};

}  // namespace csec
