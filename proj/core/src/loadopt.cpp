#include "csec/loadopt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "csec/error.hpp"

namespace csec {

namespace {

void check_inputs(std::span<const double> speeds, std::size_t l, std::size_t s) {
  if (l < 1) throw Error(ErrorCode::kInvalidParameters, "recovery threshold must be >= 1");
  for (double v : speeds) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidParameters, "speeds must be finite and strictly positive");
    }
  }
  if (speeds.size() < l + s) {
    throw Error(ErrorCode::kInfeasibleTolerance,
                "need at least L+S=" + std::to_string(l + s) + " available machines, have " +
                    std::to_string(speeds.size()));
  }
}

}  // namespace

LoadSolution optimal_load_vector(std::span<const double> speeds, std::size_t recovery_threshold,
                                 std::size_t straggler_tolerance) {
  check_inputs(speeds, recovery_threshold, straggler_tolerance);
  const std::size_t n = speeds.size();
  const double target = static_cast<double>(recovery_threshold + straggler_tolerance);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return speeds[a] < speeds[b]; });

  // Uniform speeds: k* = N_t and c* reduces to the cyclic-design time.
  const auto [lo, hi] = std::minmax_element(speeds.begin(), speeds.end());
  if (*lo == *hi) {
    LoadSolution sol;
    sol.time = target / static_cast<double>(n) / *lo;
    sol.loads.assign(n, std::min(1.0, target / static_cast<double>(n)));
    sol.threshold_index = n;
    sol.sorted_order = std::move(order);
    return sol;
  }

  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + speeds[order[i]];

  // Scan k = N_t down to 1 for the largest k with
  //   1/s[k+1] < c(k) <= 1/s[k],  c(k) = (L+S-N_t+k) / sum_{n<=k} s[n].
  std::size_t k_star = 0;
  double c_star = 0.0;
  for (std::size_t k = n; k >= 1; --k) {
    const double saturated = static_cast<double>(n - k);
    if (target - saturated <= 0.0) break;
    const double c = (target - saturated) / prefix[k];
    const double upper = 1.0 / speeds[order[k - 1]];
    const double lower = k == n ? 0.0 : 1.0 / speeds[order[k]];
    if (c <= upper + kThresholdSlack && lower < c + kThresholdSlack) {
      k_star = k;
      c_star = c;
      break;
    }
  }
  if (k_star == 0) throw Error(ErrorCode::kInternal, "no threshold index satisfies the load bounds");

  LoadSolution sol;
  sol.loads.assign(n, 1.0);
  for (std::size_t i = 0; i < k_star; ++i) {
    sol.loads[order[i]] = std::min(1.0, c_star * speeds[order[i]]);
  }
  sol.time = c_star;
  sol.threshold_index = k_star;
  sol.sorted_order = std::move(order);
  return sol;
}

double homogeneous_optimal_time(std::span<const double> speeds, std::size_t recovery_threshold,
                                std::size_t straggler_tolerance) {
  check_inputs(speeds, recovery_threshold, straggler_tolerance);
  const double slowest = *std::min_element(speeds.begin(), speeds.end());
  return static_cast<double>(recovery_threshold + straggler_tolerance) / static_cast<double>(speeds.size()) /
         slowest;
}

double computation_time(std::span<const double> loads, std::span<const double> speeds) {
  if (loads.size() != speeds.size()) throw Error(ErrorCode::kShape, "loads and speeds differ in length");
  double worst = 0.0;
  for (std::size_t i = 0; i < loads.size(); ++i) worst = std::max(worst, loads[i] / speeds[i]);
  return worst;
}

}  // namespace csec
