#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "csec/types.hpp"

namespace csec {

// Rows of the local cs-matrix each machine computes, in machine order.
struct RowCounts {
  std::vector<std::size_t> counts;
  std::size_t total_rows = 0;
};

// Half-open interval [begin, end) of cs-matrix rows.
struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool contains(std::size_t row) const noexcept { return row >= begin && row < end; }
  friend bool operator==(const RowRange&, const RowRange&) = default;
};

struct RowSet {
  RowRange rows;
  std::vector<MachineId> machines;  // sorted ascending

  friend bool operator==(const RowSet&, const RowSet&) = default;
};

// F disjoint row intervals partitioning [0, total_rows), each computed by the
// machines of its set. universe lists every machine the assignment covers,
// including ones that were given no rows.
struct Assignment {
  std::size_t total_rows = 0;
  std::vector<RowSet> sets;
  std::vector<MachineId> universe;

  std::size_t num_sets() const noexcept { return sets.size(); }
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

// Largest-remainder rounding of loads * R, preserving sum = (L+S) * R and
// capping each count at R. Ties go to the lower machine index.
RowCounts loads_to_row_counts(std::span<const double> loads, std::size_t total_rows,
                              std::size_t recovery_threshold, std::size_t straggler_tolerance);

// Filling algorithm. Machine ids default to 0..n-1 when ids is empty.
Assignment fill_assignment(const RowCounts& counts, std::size_t width,
                           std::span<const MachineId> ids = {});

// Cyclic homogeneous design over machines (in the given order). Row set i goes
// to machines i, i+1, ..., i+L+S-1 (mod N_t).
Assignment cyclic_assignment(std::span<const MachineId> machines, std::size_t recovery_threshold,
                             std::size_t straggler_tolerance, std::size_t total_rows);
Assignment cyclic_assignment(std::size_t n_available, std::size_t recovery_threshold,
                             std::size_t straggler_tolerance, std::size_t total_rows);

// Sorted rows assigned to machine. Throws kLookup if machine is not in the universe.
std::vector<std::size_t> machine_rows(const Assignment& assignment, MachineId machine);

// Rows per universe machine, in universe order.
std::vector<std::size_t> induced_counts(const Assignment& assignment);

// Throws kInfeasibleCounts describing the first broken invariant.
void validate_assignment(const Assignment& assignment, std::size_t width);

// {"total_rows": R, "universe": [...], "sets": [{"rows": [begin, end], "machines": [...]}]}
std::string assignment_to_json(const Assignment& assignment);
Assignment assignment_from_json(const std::string& text);

}  // namespace csec
