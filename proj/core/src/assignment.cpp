#include "csec/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "csec/error.hpp"

namespace csec {

namespace {

constexpr double kLoadTolerance = 1e-9;

std::vector<MachineId> default_ids(std::size_t n, std::span<const MachineId> ids) {
  if (ids.empty()) {
    std::vector<MachineId> out(n);
    std::iota(out.begin(), out.end(), MachineId{0});
    return out;
  }
  if (ids.size() != n) throw Error(ErrorCode::kShape, "machine id list does not match count vector");
  return {ids.begin(), ids.end()};
}

}  // namespace

RowCounts loads_to_row_counts(std::span<const double> loads, std::size_t total_rows,
                              std::size_t recovery_threshold, std::size_t straggler_tolerance) {
  if (total_rows < 1) throw Error(ErrorCode::kInvalidParameters, "total_rows must be >= 1");
  const std::size_t width = recovery_threshold + straggler_tolerance;
  double sum = 0.0;
  for (double mu : loads) {
    if (!(mu >= -kLoadTolerance) || mu > 1.0 + kLoadTolerance) {
      throw Error(ErrorCode::kInvalidLoad, "load " + std::to_string(mu) + " outside [0, 1]");
    }
    sum += mu;
  }
  if (std::abs(sum - static_cast<double>(width)) > kLoadTolerance * std::max<double>(1.0, width)) {
    throw Error(ErrorCode::kInvalidLoad,
                "loads sum to " + std::to_string(sum) + ", expected L+S=" + std::to_string(width));
  }

  const double r = static_cast<double>(total_rows);
  RowCounts out;
  out.total_rows = total_rows;
  out.counts.resize(loads.size());
  std::vector<double> remainder(loads.size());
  std::size_t assigned = 0;
  for (std::size_t n = 0; n < loads.size(); ++n) {
    const double exact = std::clamp(loads[n], 0.0, 1.0) * r;
    const auto whole = std::min(total_rows, static_cast<std::size_t>(std::floor(exact)));
    out.counts[n] = whole;
    remainder[n] = exact - static_cast<double>(whole);
    assigned += whole;
  }

  const std::size_t target = width * total_rows;
  if (assigned > target) throw Error(ErrorCode::kInvalidLoad, "rounded loads exceed (L+S)*R");
  std::vector<std::size_t> order(loads.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t idx : order) {
    if (assigned == target) break;
    if (out.counts[idx] < total_rows) {
      ++out.counts[idx];
      ++assigned;
    }
  }
  if (assigned != target) throw Error(ErrorCode::kInvalidLoad, "loads cannot be rounded to (L+S)*R rows");
  return out;
}

Assignment fill_assignment(const RowCounts& counts, std::size_t width, std::span<const MachineId> ids) {
  const std::size_t n = counts.counts.size();
  const std::size_t r = counts.total_rows;
  const std::size_t total = std::accumulate(counts.counts.begin(), counts.counts.end(), std::size_t{0});
  if (width < 1 || n < width) {
    throw Error(ErrorCode::kInfeasibleCounts,
                "need at least " + std::to_string(width) + " machines, have " + std::to_string(n));
  }
  if (total != width * r) {
    throw Error(ErrorCode::kInfeasibleCounts,
                "counts sum to " + std::to_string(total) + ", expected " + std::to_string(width * r));
  }
  if (std::any_of(counts.counts.begin(), counts.counts.end(), [&](std::size_t c) { return c > r; })) {
    throw Error(ErrorCode::kInfeasibleCounts, "a machine count exceeds total rows");
  }

  Assignment out;
  out.total_rows = r;
  out.universe = default_ids(n, ids);

  std::vector<std::size_t> remaining = counts.counts;
  std::vector<std::size_t> order(n);
  std::size_t next_row = 0;
  while (next_row < r) {
    const std::size_t rows_left = r - next_row;
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remaining[a] > remaining[b]; });

    const std::size_t smallest_selected = remaining[order[width - 1]];
    const std::size_t largest_unselected = width < n ? remaining[order[width]] : 0;
    // Unselected machines must still fit in the rows left after this set.
    const std::size_t beta = std::min(smallest_selected, rows_left - largest_unselected);
    if (beta == 0) throw Error(ErrorCode::kInternal, "filling stalled");

    RowSet set;
    set.rows = {next_row, next_row + beta};
    for (std::size_t i = 0; i < width; ++i) {
      remaining[order[i]] -= beta;
      set.machines.push_back(out.universe[order[i]]);
    }
    std::sort(set.machines.begin(), set.machines.end());
    out.sets.push_back(std::move(set));
    next_row += beta;
  }
  return out;
}

Assignment cyclic_assignment(std::span<const MachineId> machines, std::size_t recovery_threshold,
                             std::size_t straggler_tolerance, std::size_t total_rows) {
  const std::size_t n = machines.size();
  const std::size_t width = recovery_threshold + straggler_tolerance;
  if (recovery_threshold < 1) throw Error(ErrorCode::kInvalidParameters, "recovery threshold must be >= 1");
  if (n < width) {
    throw Error(ErrorCode::kInfeasibleTolerance,
                "cyclic design needs L+S=" + std::to_string(width) + " machines, have " + std::to_string(n));
  }
  if (total_rows < 1) throw Error(ErrorCode::kInvalidParameters, "total_rows must be >= 1");

  Assignment out;
  out.total_rows = total_rows;
  out.universe.assign(machines.begin(), machines.end());
  const std::size_t base = total_rows / n;
  const std::size_t extra = total_rows % n;
  std::size_t row = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t size = base + (i < extra ? 1 : 0);
    if (size == 0) continue;
    RowSet set;
    set.rows = {row, row + size};
    for (std::size_t j = 0; j < width; ++j) set.machines.push_back(machines[(i + j) % n]);
    std::sort(set.machines.begin(), set.machines.end());
    out.sets.push_back(std::move(set));
    row += size;
  }
  return out;
}

Assignment cyclic_assignment(std::size_t n_available, std::size_t recovery_threshold,
                             std::size_t straggler_tolerance, std::size_t total_rows) {
  std::vector<MachineId> ids(n_available);
  std::iota(ids.begin(), ids.end(), MachineId{0});
  return cyclic_assignment(ids, recovery_threshold, straggler_tolerance, total_rows);
}

std::vector<std::size_t> machine_rows(const Assignment& assignment, MachineId machine) {
  if (std::find(assignment.universe.begin(), assignment.universe.end(), machine) == assignment.universe.end()) {
    throw Error(ErrorCode::kLookup, "machine " + std::to_string(machine) + " not in assignment");
  }
  std::vector<std::size_t> rows;
  for (const auto& set : assignment.sets) {
    if (std::binary_search(set.machines.begin(), set.machines.end(), machine)) {
      for (std::size_t i = set.rows.begin; i < set.rows.end; ++i) rows.push_back(i);
    }
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

std::vector<std::size_t> induced_counts(const Assignment& assignment) {
  std::vector<std::size_t> counts(assignment.universe.size(), 0);
  for (const auto& set : assignment.sets) {
    for (MachineId m : set.machines) {
      const auto it = std::find(assignment.universe.begin(), assignment.universe.end(), m);
      if (it == assignment.universe.end()) {
        throw Error(ErrorCode::kLookup, "machine " + std::to_string(m) + " not in assignment universe");
      }
      counts[static_cast<std::size_t>(it - assignment.universe.begin())] += set.rows.size();
    }
  }
  return counts;
}

void validate_assignment(const Assignment& assignment, std::size_t width) {
  std::size_t expected = 0;
  for (const auto& set : assignment.sets) {
    if (set.rows.begin != expected || set.rows.end <= set.rows.begin) {
      throw Error(ErrorCode::kInfeasibleCounts, "row sets are not a contiguous partition");
    }
    expected = set.rows.end;
    if (set.machines.size() != width) {
      throw Error(ErrorCode::kInfeasibleCounts, "row set has " + std::to_string(set.machines.size()) +
                                                    " machines, expected " + std::to_string(width));
    }
    if (std::adjacent_find(set.machines.begin(), set.machines.end()) != set.machines.end()) {
      throw Error(ErrorCode::kInfeasibleCounts, "row set repeats a machine");
    }
    for (MachineId m : set.machines) {
      if (std::find(assignment.universe.begin(), assignment.universe.end(), m) == assignment.universe.end()) {
        throw Error(ErrorCode::kInfeasibleCounts, "row set names a machine outside the universe");
      }
    }
  }
  if (expected != assignment.total_rows) {
    throw Error(ErrorCode::kInfeasibleCounts, "row sets do not cover all rows");
  }
}

std::string assignment_to_json(const Assignment& assignment) {
  nlohmann::json doc;
  doc["total_rows"] = assignment.total_rows;
  doc["universe"] = assignment.universe;
  doc["sets"] = nlohmann::json::array();
  for (const auto& set : assignment.sets) {
    doc["sets"].push_back({{"rows", {set.rows.begin, set.rows.end}}, {"machines", set.machines}});
  }
  return doc.dump();
}

Assignment assignment_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    Assignment out;
    out.total_rows = doc.at("total_rows").get<std::size_t>();
    out.universe = doc.at("universe").get<std::vector<MachineId>>();
    for (const auto& item : doc.at("sets")) {
      const auto rows = item.at("rows").get<std::vector<std::size_t>>();
      if (rows.size() != 2) throw Error(ErrorCode::kProtocol, "rows must be [begin, end]");
      RowSet set;
      set.rows = {rows[0], rows[1]};
      set.machines = item.at("machines").get<std::vector<MachineId>>();
      std::sort(set.machines.begin(), set.machines.end());
      out.sets.push_back(std::move(set));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("malformed assignment document: ") + e.what());
  }
}

}  // namespace csec
