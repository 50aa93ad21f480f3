#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "csec/assignment.hpp"

namespace csec {

struct MachineProfile {
  MachineId id = 0;
  double true_speed = 1.0;
  bool elastic = false;
  double p_available = 1.0;
};

// Validates ids (must equal position), speeds and probabilities.
void validate_profiles(std::span<const MachineProfile> profiles);

// Stable machines are always present; elastic machine n joins step t with
// probability p_available, drawn from a stream keyed by (seed, step, n).
std::vector<MachineId> sample_available_set(std::span<const MachineProfile> profiles, std::uint64_t step,
                                            std::uint64_t seed);

// Per-step multiplicative jitter on true speeds, uniform in [1 - amplitude, 1 + amplitude].
struct SpeedDrift {
  double amplitude = 0.0;
  std::uint64_t seed = 0;
};

double effective_speed(const MachineProfile& profile, std::uint64_t step, const SpeedDrift& drift);

struct MachineFinish {
  MachineId id = 0;
  std::size_t rows = 0;
  double load = 0.0;         // rows / total_rows
  double speed = 0.0;        // speed used for this step
  double finish_time = 0.0;  // load / speed
};

// Entries sorted by finish time, ties by id.
struct StepTiming {
  std::vector<MachineFinish> entries;

  const MachineFinish* find(MachineId id) const;
};

StepTiming simulate_step_timing(const Assignment& assignment, std::span<const MachineProfile> profiles,
                                std::span<const MachineId> available, std::uint64_t step = 0,
                                const SpeedDrift& drift = {});

struct NoStragglers {};
struct SlowestK {
  std::size_t k = 0;
};
struct FixedSet {
  std::vector<MachineId> ids;
};
struct RandomK {
  std::size_t k = 0;
  std::uint64_t seed = 0;
};

using StragglerPolicy = std::variant<NoStragglers, SlowestK, FixedSet, RandomK>;

struct ResponderSelection {
  std::vector<MachineId> responders;  // in finish order
  std::vector<MachineId> stragglers;  // sorted by id
  double step_time = 0.0;
};

// Zero-load machines respond at time 0 and are never picked as stragglers by
// the slowest_k or random_k policies.
ResponderSelection select_responders(const StepTiming& timing, const StragglerPolicy& policy,
                                     std::uint64_t step = 0);

// Counter-based hashing used for every random draw in the simulation.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b);
double unit_uniform(std::uint64_t key);

}  // namespace csec
