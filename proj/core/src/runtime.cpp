#include "csec/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <string>

#include "csec/error.hpp"
#include "csec/loadopt.hpp"

namespace csec {

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::kUncoded: return "uncoded";
    case Scheme::kHomogeneousCyclic: return "homogeneous";
    case Scheme::kHeterogeneous: return "heterogeneous";
  }
  return "unknown";
}

std::vector<double> update_speed_estimate(std::span<const double> estimate,
                                          const std::map<MachineId, double>& measured, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(ErrorCode::kInvalidParameters, "gamma must lie in [0, 1]");
  std::vector<double> out(estimate.begin(), estimate.end());
  for (const auto& [id, nu] : measured) {
    if (id >= out.size()) throw Error(ErrorCode::kLookup, "measurement for unknown machine " + std::to_string(id));
    out[id] = gamma * nu + (1.0 - gamma) * out[id];
  }
  return out;
}

WorkerResults compute_worker_products(const CodedStore& store, const Assignment& assignment,
                                      std::span<const double> w) {
  if (w.size() != store.cols) {
    throw Error(ErrorCode::kShape, "vector length " + std::to_string(w.size()) + " does not match store width " +
                                       std::to_string(store.cols));
  }
  if (assignment.total_rows != store.block_rows) {
    throw Error(ErrorCode::kShape, "assignment rows do not match cs-matrix rows");
  }
  const Eigen::Map<const Vector> wv(w.data(), static_cast<Eigen::Index>(w.size()));
  WorkerResults out;
  for (MachineId id : assignment.universe) {
    if (id >= store.n_machines()) throw Error(ErrorCode::kLookup, "machine " + std::to_string(id) + " has no store");
    out.emplace(id, std::vector<double>(store.block_rows, std::numeric_limits<double>::quiet_NaN()));
  }
  // Each machine's work is independent; results only depend on (store, w, rows).
  for (const auto& set : assignment.sets) {
    for (MachineId id : set.machines) {
      auto& values = out.at(id);
      const Matrix& block = store.blocks[id];
      for (std::size_t i = set.rows.begin; i < set.rows.end; ++i) {
        values[i] = block.row(static_cast<Eigen::Index>(i)).dot(wv);
      }
    }
  }
  return out;
}

DecodeResult collect_and_decode(const WorkerResults& results, const Assignment& assignment,
                                std::span<const MachineId> responder_order, Decoder& decoder,
                                const CodedStore& store) {
  const std::size_t l = store.recovery_threshold;
  const std::size_t block = store.block_rows;
  DecodeResult out;
  out.ok = true;

  std::vector<std::vector<MachineId>> chosen;
  chosen.reserve(assignment.sets.size());
  for (const auto& set : assignment.sets) {
    std::vector<MachineId> members;
    for (MachineId id : responder_order) {
      if (std::binary_search(set.machines.begin(), set.machines.end(), id) && results.count(id)) {
        members.push_back(id);
      }
    }
    out.responders_per_set.push_back(members.size());
    if (members.size() < l) out.ok = false;
    members.resize(std::min(members.size(), l));
    chosen.push_back(std::move(members));
  }
  if (!out.ok) return out;

  Vector padded(static_cast<Eigen::Index>(block * l));
  for (std::size_t f = 0; f < assignment.sets.size(); ++f) {
    const auto& set = assignment.sets[f];
    Matrix values(l, set.rows.size());
    for (std::size_t j = 0; j < l; ++j) {
      const auto& v = results.at(chosen[f][j]);
      for (std::size_t i = set.rows.begin; i < set.rows.end; ++i) values(j, i - set.rows.begin) = v[i];
    }
    const Matrix solved = decoder.solve(chosen[f], values);
    for (std::size_t b = 0; b < l; ++b) {
      for (std::size_t i = set.rows.begin; i < set.rows.end; ++i) {
        padded(static_cast<Eigen::Index>(b * block + i)) = solved(b, i - set.rows.begin);
      }
    }
  }
  out.y = padded.head(static_cast<Eigen::Index>(store.source_rows));
  return out;
}

ElasticRuntime::ElasticRuntime(GeneratorMatrix generator, MasterState state, ClusterInputs cluster,
                               RuntimeOptions options)
    : generator_(std::move(generator)),
      state_(std::move(state)),
      cluster_(std::move(cluster)),
      options_(options),
      decoder_(generator_) {
  validate_profiles(cluster_.profiles);
  if (cluster_.profiles.size() != generator_.n_machines()) {
    throw Error(ErrorCode::kInvalidParameters, "cluster size does not match generator rows");
  }
  if (state_.speed_estimate.empty()) state_.speed_estimate.assign(cluster_.profiles.size(), 1.0);
  if (state_.speed_estimate.size() != cluster_.profiles.size()) {
    throw Error(ErrorCode::kInvalidParameters, "speed estimate length does not match cluster size");
  }
  for (double s : state_.speed_estimate) {
    if (!(s > 0.0)) throw Error(ErrorCode::kInvalidParameters, "speed estimates must be positive");
  }
  if (!(state_.gamma >= 0.0 && state_.gamma <= 1.0)) {
    throw Error(ErrorCode::kInvalidParameters, "gamma must lie in [0, 1]");
  }
  if (state_.scheme == Scheme::kUncoded) {
    if (generator_.n_machines() != generator_.recovery_threshold()) {
      throw Error(ErrorCode::kInvalidParameters, "uncoded scheme stores exactly L uncoded blocks");
    }
    state_.tolerance = 0;
  }
}

Assignment ElasticRuntime::plan(std::span<const MachineId> available, std::size_t tolerance,
                                std::size_t total_rows) const {
  const std::size_t l = generator_.recovery_threshold();
  switch (state_.scheme) {
    case Scheme::kUncoded: {
      Assignment a;
      a.total_rows = total_rows;
      a.universe.assign(available.begin(), available.end());
      a.sets.push_back({RowRange{0, total_rows}, a.universe});
      return a;
    }
    case Scheme::kHomogeneousCyclic:
      return cyclic_assignment(available, l, tolerance, total_rows);
    case Scheme::kHeterogeneous: {
      std::vector<double> speeds;
      speeds.reserve(available.size());
      for (MachineId id : available) speeds.push_back(state_.speed_estimate[id]);
      const auto solution = optimal_load_vector(speeds, l, tolerance);
      const auto counts = loads_to_row_counts(solution.loads, total_rows, l, tolerance);
      return fill_assignment(counts, l + tolerance, available);
    }
  }
  throw Error(ErrorCode::kInternal, "unknown scheme");
}

StepResult ElasticRuntime::execute_step(const CodedStore& store, std::span<const double> w) {
  if (store.n_machines() != generator_.n_machines() || store.recovery_threshold != generator_.recovery_threshold()) {
    throw Error(ErrorCode::kShape, "store was not encoded with this runtime's generator");
  }
  const std::uint64_t step = next_step_++;
  const std::size_t l = generator_.recovery_threshold();
  double elapsed_before = 0.0;

  for (std::size_t attempt = 0;; ++attempt) {
    const std::uint64_t draw = attempt == 0 ? step : stream_key(step, attempt, 0xa77e);
    StepTrace trace;
    trace.step = step;
    trace.attempts = attempt + 1;
    trace.available = sample_available_set(cluster_.profiles, draw, cluster_.seed);

    std::size_t tolerance = state_.tolerance;
    if (state_.scheme == Scheme::kUncoded) {
      if (trace.available.size() != cluster_.profiles.size()) {
        throw Error(ErrorCode::kInfeasibleStep, "uncoded scheme needs every storage machine available");
      }
    } else if (trace.available.size() < l + tolerance) {
      if (!options_.degrade || trace.available.size() < l) {
        throw Error(ErrorCode::kInfeasibleStep,
                    "step " + std::to_string(step) + ": " + std::to_string(trace.available.size()) +
                        " machines available, need L+S=" + std::to_string(l + tolerance));
      }
      tolerance = trace.available.size() - l;
      std::clog << "warning: step " << step << " degraded straggler tolerance to S=" << tolerance << '\n';
    }
    trace.effective_tolerance = tolerance;

    const Assignment assignment = plan(trace.available, tolerance, store.block_rows);
    trace.num_sets = assignment.num_sets();

    const StepTiming timing = simulate_step_timing(assignment, cluster_.profiles, trace.available, draw,
                                                   cluster_.drift);
    for (const auto& e : timing.entries) trace.loads[e.id] = e.load;
    const ResponderSelection selection = select_responders(timing, cluster_.policy, draw);
    trace.responders = selection.responders;
    trace.stragglers = selection.stragglers;
    trace.step_time = elapsed_before + selection.step_time;

    WorkerResults results = compute_worker_products(store, assignment, w);
    for (MachineId id : selection.stragglers) results.erase(id);

    for (MachineId id : selection.responders) {
      const MachineFinish* f = timing.find(id);
      if (f != nullptr && f->rows > 0 && f->finish_time > 0.0) trace.measured[id] = f->load / f->finish_time;
    }

    DecodeResult decoded = collect_and_decode(results, assignment, selection.responders, decoder_, store);
    trace.decode_ok = decoded.ok;
    if (decoded.ok) {
      state_.speed_estimate = update_speed_estimate(state_.speed_estimate, trace.measured, state_.gamma);
      return {std::move(decoded.y), std::move(trace)};
    }
    if (attempt >= options_.retries) {
      throw StepFailure("step " + std::to_string(step) + " undecodable: a row set has fewer than L responders",
                        std::move(trace));
    }
    elapsed_before = trace.step_time;
  }
}

}  // namespace csec
