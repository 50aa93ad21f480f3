#include "csec/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "csec/error.hpp"

namespace csec {

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(mix64(seed) ^ a) ^ b);
}

double unit_uniform(std::uint64_t key) {
  return static_cast<double>(key >> 11) * 0x1.0p-53;
}

void validate_profiles(std::span<const MachineProfile> profiles) {
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const auto& p = profiles[i];
    if (p.id != i) throw Error(ErrorCode::kInvalidParameters, "machine profile ids must equal their position");
    if (!(p.true_speed > 0.0) || !std::isfinite(p.true_speed)) {
      throw Error(ErrorCode::kInvalidParameters, "machine " + std::to_string(i) + " has non-positive speed");
    }
    if (!(p.p_available >= 0.0 && p.p_available <= 1.0)) {
      throw Error(ErrorCode::kInvalidParameters, "machine " + std::to_string(i) + " availability outside [0,1]");
    }
    if (!p.elastic && p.p_available != 1.0) {
      throw Error(ErrorCode::kInvalidParameters, "stable machine " + std::to_string(i) + " must have p_available=1");
    }
  }
}

std::vector<MachineId> sample_available_set(std::span<const MachineProfile> profiles, std::uint64_t step,
                                            std::uint64_t seed) {
  std::vector<MachineId> out;
  for (const auto& p : profiles) {
    if (!p.elastic || p.p_available >= 1.0) {
      out.push_back(p.id);
      continue;
    }
    if (unit_uniform(stream_key(seed, step, p.id)) < p.p_available) out.push_back(p.id);
  }
  return out;
}

double effective_speed(const MachineProfile& profile, std::uint64_t step, const SpeedDrift& drift) {
  if (drift.amplitude == 0.0) return profile.true_speed;
  const double u = unit_uniform(stream_key(drift.seed ^ 0xd1f7ULL, step, profile.id));
  return profile.true_speed * (1.0 + drift.amplitude * (2.0 * u - 1.0));
}

const MachineFinish* StepTiming::find(MachineId id) const {
  for (const auto& e : entries) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

StepTiming simulate_step_timing(const Assignment& assignment, std::span<const MachineProfile> profiles,
                                std::span<const MachineId> available, std::uint64_t step,
                                const SpeedDrift& drift) {
  const auto counts = induced_counts(assignment);
  StepTiming timing;
  for (std::size_t i = 0; i < assignment.universe.size(); ++i) {
    const MachineId id = assignment.universe[i];
    if (std::find(available.begin(), available.end(), id) == available.end()) {
      throw Error(ErrorCode::kProtocol, "assignment references unavailable machine " + std::to_string(id));
    }
    if (id >= profiles.size()) throw Error(ErrorCode::kLookup, "no profile for machine " + std::to_string(id));
    MachineFinish f;
    f.id = id;
    f.rows = counts[i];
    f.load = static_cast<double>(counts[i]) / static_cast<double>(assignment.total_rows);
    f.speed = effective_speed(profiles[id], step, drift);
    f.finish_time = f.rows == 0 ? 0.0 : f.load / f.speed;
    timing.entries.push_back(f);
  }
  std::stable_sort(timing.entries.begin(), timing.entries.end(), [](const auto& a, const auto& b) {
    return a.finish_time < b.finish_time || (a.finish_time == b.finish_time && a.id < b.id);
  });
  return timing;
}

ResponderSelection select_responders(const StepTiming& timing, const StragglerPolicy& policy,
                                     std::uint64_t step) {
  std::vector<MachineId> loaded;  // finish order
  for (const auto& e : timing.entries) {
    if (e.rows > 0) loaded.push_back(e.id);
  }

  std::vector<MachineId> stragglers;
  if (const auto* slow = std::get_if<SlowestK>(&policy)) {
    if (slow->k > loaded.size()) {
      throw Error(ErrorCode::kInvalidParameters, "slowest_k exceeds the number of loaded machines");
    }
    stragglers.assign(loaded.end() - static_cast<std::ptrdiff_t>(slow->k), loaded.end());
  } else if (const auto* fixed = std::get_if<FixedSet>(&policy)) {
    for (MachineId id : fixed->ids) {
      if (timing.find(id) != nullptr) stragglers.push_back(id);
    }
  } else if (const auto* rnd = std::get_if<RandomK>(&policy)) {
    if (rnd->k > loaded.size()) {
      throw Error(ErrorCode::kInvalidParameters, "random_k exceeds the number of loaded machines");
    }
    // Rank loaded machines by a per-(seed, step, id) key; the k smallest straggle.
    std::vector<std::pair<std::uint64_t, MachineId>> keyed;
    for (MachineId id : loaded) keyed.emplace_back(stream_key(rnd->seed, step, id), id);
    std::sort(keyed.begin(), keyed.end());
    for (std::size_t i = 0; i < rnd->k; ++i) stragglers.push_back(keyed[i].second);
  }
  std::sort(stragglers.begin(), stragglers.end());
  stragglers.erase(std::unique(stragglers.begin(), stragglers.end()), stragglers.end());

  ResponderSelection out;
  out.stragglers = stragglers;
  for (const auto& e : timing.entries) {
    if (std::binary_search(stragglers.begin(), stragglers.end(), e.id)) continue;
    out.responders.push_back(e.id);
    out.step_time = std::max(out.step_time, e.finish_time);
  }
  return out;
}

}  // namespace csec
