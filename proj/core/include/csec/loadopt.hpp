#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace csec {

// Optimal computation loads for one step. Indices follow the input speed
// order; sorted_order records the ascending-speed permutation used.
struct LoadSolution {
  std::vector<double> loads;
  double time = 0.0;
  std::size_t threshold_index = 0;  // k*: machines 1..k* (ascending speed) are speed-proportional
  std::vector<std::size_t> sorted_order;
};

// Slack applied to both sides of the threshold inequality.
inline constexpr double kThresholdSlack = 1e-12;

// Minimizes max_n loads[n]/speeds[n] subject to sum(loads) = L+S and
// 0 <= loads[n] <= 1. Faster machines saturate at load 1 first; the rest get
// loads proportional to speed.
LoadSolution optimal_load_vector(std::span<const double> speeds, std::size_t recovery_threshold,
                                 std::size_t straggler_tolerance);

// Cyclic design time: every machine computes (L+S)/N_t of its store and the
// slowest one finishes last.
double homogeneous_optimal_time(std::span<const double> speeds, std::size_t recovery_threshold,
                                std::size_t straggler_tolerance);

// max_n loads[n] / speeds[n]
double computation_time(std::span<const double> loads, std::span<const double> speeds);

}  // namespace csec
