// One PASS/FAIL line per acceptance criterion. Exit status is nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "csec/apps.hpp"
#include "csec/assignment.hpp"
#include "csec/experiment.hpp"
#include "csec/loadopt.hpp"
#include "csec/runtime.hpp"
#include "csec/table1.hpp"
#include "support/oracles.hpp"

namespace {

using namespace csec;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = normal(rng);
  }
  return m;
}

std::vector<MachineProfile> stable_roster(std::span<const double> speeds) {
  std::vector<MachineProfile> out;
  for (std::size_t i = 0; i < speeds.size(); ++i) out.push_back({i, speeds[i], false, 1.0});
  return out;
}

std::vector<MachineProfile> preset_roster(const ExperimentConfig& c) {
  std::vector<MachineProfile> out;
  for (std::size_t i = 0; i < c.speeds.size(); ++i) {
    const bool elastic = std::find(c.elastic.begin(), c.elastic.end(), i) != c.elastic.end();
    out.push_back({i, c.speeds[i], elastic, elastic ? c.p_available : 1.0});
  }
  return out;
}

bool near(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol; }

bool loads_equal(const std::vector<double>& got, const std::vector<double>& want) {
  if (got.size() != want.size()) return false;
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (!near(got[i], want[i])) return false;
  }
  return true;
}

Outcome golden_examples() {
  const auto start = Clock::now();
  Outcome o;
  std::size_t checks = 0;
  auto check = [&](bool ok, const std::string& what) {
    ++checks;
    if (!ok) {
      o.pass = false;
      o.detail += " [" + what + "]";
    }
  };

  const std::vector<double> unit(5, 1.0);
  const double homogeneous[] = {3.0 / 5, 4.0 / 5, 1.0};
  for (std::size_t s = 0; s <= 2; ++s) {
    check(near(homogeneous_optimal_time(unit, 3, s), homogeneous[s]), "homogeneous time S=" + std::to_string(s));
    check(near(optimal_load_vector(unit, 3, s).time, homogeneous[s]), "uniform loadopt S=" + std::to_string(s));
  }
  const std::vector<std::vector<MachineId>> p0{{0, 1, 2}, {1, 2, 3}, {2, 3, 4}, {0, 3, 4}, {0, 1, 4}};
  const std::vector<std::vector<MachineId>> p1{{0, 1, 2, 3}, {1, 2, 3, 4}, {0, 2, 3, 4}, {0, 1, 3, 4}, {0, 1, 2, 4}};
  const auto c0 = cyclic_assignment(5, 3, 0, 5);
  const auto c1 = cyclic_assignment(5, 3, 1, 5);
  for (std::size_t i = 0; i < 5; ++i) {
    check(c0.sets.size() == 5 && c0.sets[i].machines == p0[i], "cyclic S=0 P" + std::to_string(i + 1));
    check(c1.sets.size() == 5 && c1.sets[i].machines == p1[i], "cyclic S=1 P" + std::to_string(i + 1));
  }

  const std::vector<double> s{1, 1, 2, 2, 3};
  const auto h0 = optimal_load_vector(s, 3, 0);
  check(loads_equal(h0.loads, {1.0 / 3, 1.0 / 3, 2.0 / 3, 2.0 / 3, 1.0}), "heterogeneous S=0 loads");
  check(near(h0.time, 1.0 / 3), "heterogeneous S=0 time");
  const auto h1 = optimal_load_vector(s, 3, 1);
  check(loads_equal(h1.loads, {0.5, 0.5, 1.0, 1.0, 1.0}), "heterogeneous S=1 loads");
  check(near(h1.time, 0.5), "heterogeneous S=1 time");
  const auto fill = fill_assignment(loads_to_row_counts(h1.loads, 2, 3, 1), 4);
  check(fill.num_sets() == 2, "F=2");
  check(fill.num_sets() == 2 && fill.sets[0].machines == std::vector<MachineId>{0, 2, 3, 4} &&
            fill.sets[1].machines == std::vector<MachineId>{1, 2, 3, 4},
        "P1, P2");

  const double elapsed = seconds_since(start);
  if (elapsed >= 1.0) o.pass = false;
  o.detail = std::to_string(checks) + " checks, " + fmt("%.3f s", elapsed) + o.detail;
  return o;
}

struct Instance {
  std::vector<double> speeds;
};

std::vector<Instance> random_instances(std::size_t count) {
  std::mt19937_64 rng(20210601);
  std::uniform_real_distribution<double> speed(0.1, 10.0);
  std::vector<Instance> out(count);
  for (auto& inst : out) {
    inst.speeds.resize(1 + rng() % 12);
    for (auto& v : inst.speeds) v = speed(rng);
  }
  return out;
}

Outcome oracle_equivalence(const std::vector<Instance>& instances) {
  std::size_t cases = 0;
  std::size_t failures = 0;
  double worst = 0.0;
  for (const auto& inst : instances) {
    const std::size_t n = inst.speeds.size();
    for (std::size_t l = 1; l <= n; ++l) {
      for (std::size_t tol = 0; l + tol <= n; ++tol) {
        const double formula = optimal_load_vector(inst.speeds, l, tol).time;
        const double bisection = oracle::min_time_oracle(inst.speeds, l, tol, 1e-13);
        const double diff = std::abs(formula - bisection);
        worst = std::max(worst, diff);
        ++cases;
        if (!(diff <= 1e-9)) ++failures;
      }
    }
  }
  return {failures == 0, std::to_string(instances.size()) + " instances, " + std::to_string(cases) +
                             " (L,S) pairs, " + std::to_string(failures) + " failures, max diff " +
                             fmt("%.3g", worst)};
}

Outcome tradeoff(const std::vector<Instance>& instances) {
  std::size_t comparisons = 0;
  std::size_t strict = 0;
  std::size_t violations = 0;
  for (const auto& inst : instances) {
    const std::size_t n = inst.speeds.size();
    for (std::size_t l = 1; l <= n; ++l) {
      for (std::size_t tol = 0; l + tol + 1 <= n; ++tol) {
        const auto here = optimal_load_vector(inst.speeds, l, tol);
        const auto next = optimal_load_vector(inst.speeds, l, tol + 1);
        ++comparisons;
        if (next.time < here.time) ++violations;
        if (here.threshold_index < n) {
          ++strict;
          if (!(next.time > here.time)) ++violations;
        }
      }
    }
  }
  return {violations == 0, std::to_string(comparisons) + " S steps, " + std::to_string(strict) +
                               " with k* < N_t, " + std::to_string(violations) + " violations"};
}

Outcome straggler_safety() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> speed(0.2, 5.0);
  std::size_t runs = 0;
  std::size_t failures = 0;
  double worst = 0.0;
  for (std::size_t n = 1; n <= 8; ++n) {
    for (std::size_t l = 1; l <= n; ++l) {
      for (std::size_t tol = 0; l + tol <= n; ++tol) {
        std::vector<double> s(n);
        for (auto& v : s) v = speed(rng);
        const auto g = build_generator(n, l, RandomGaussian{rng()});
        const Matrix x = random_matrix(l * 12, 5, rng());
        const Vector w = random_matrix(5, 1, rng()).col(0);
        const Vector truth = x * w;
        const auto store = encode_store(x, g, Orientation::kRow);
        for (Scheme scheme : {Scheme::kHeterogeneous, Scheme::kHomogeneousCyclic}) {
          oracle::for_each_subset(n, tol, [&](const std::vector<std::size_t>& stragglers) {
            ElasticRuntime rt(g, MasterState{s, 0.5, tol, scheme},
                              ClusterInputs{stable_roster(s), FixedSet{{stragglers.begin(), stragglers.end()}}, 0, {}},
                              RuntimeOptions{false, 0});
            ++runs;
            try {
              const auto r = rt.execute_step(store, {w.data(), static_cast<std::size_t>(w.size())});
              const double err = oracle::relative_error(r.y, truth);
              worst = std::max(worst, err);
              if (!r.trace.decode_ok || !(err <= 1e-9)) ++failures;
            } catch (const Error&) {
              ++failures;
            }
          });
        }
      }
    }
  }
  return {failures == 0, std::to_string(runs) + " (assignment, straggler subset) runs, " + std::to_string(failures) +
                             " failures, max relative error " + fmt("%.3g", worst)};
}

Outcome filling_invariants() {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> speed(0.1, 10.0);
  std::size_t violations = 0;
  const std::size_t trials = 10000;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = 1 + rng() % 12;
    const std::size_t r = 1 + rng() % 200;
    std::size_t w = 1 + rng() % n;
    RowCounts counts;
    if (t % 2 == 0) {
      // Counts from rounded optimal loads.
      std::vector<double> s(n);
      for (auto& v : s) v = speed(rng);
      const std::size_t l = 1 + rng() % w;
      const auto sol = optimal_load_vector(s, l, w - l);
      counts = loads_to_row_counts(sol.loads, r, l, w - l);
    } else {
      // Counts from random W-subsets per row.
      counts.total_rows = r;
      counts.counts.assign(n, 0);
      std::vector<std::size_t> ids(n);
      std::iota(ids.begin(), ids.end(), std::size_t{0});
      for (std::size_t row = 0; row < r; ++row) {
        std::shuffle(ids.begin(), ids.end(), rng);
        for (std::size_t j = 0; j < w; ++j) ++counts.counts[ids[j]];
      }
    }
    try {
      const auto a = fill_assignment(counts, w);
      const bool fidelity = oracle::rows_per_machine(a, n) == counts.counts;
      const bool coverage = oracle::row_coverage(a) == std::vector<std::size_t>(r, w);
      if (!fidelity || !coverage || a.num_sets() > n) ++violations;
    } catch (const Error&) {
      ++violations;
    }
  }
  return {violations == 0, std::to_string(trials) + " count vectors, " + std::to_string(violations) + " violations"};
}

Outcome table_one() {
  const std::span<const double> s(kTable1PowerIteration);
  const double het = optimal_load_vector(s, 10, 0).time;
  const double hom = homogeneous_optimal_time(s, 10, 0);
  const double ratio = het / hom;
  return {ratio <= 0.70, fmt("c* = %.6f, homogeneous = %.6f, ratio = %.4f (<= 0.70)", het, hom, ratio)};
}

Outcome power_iteration_end_to_end() {
  const auto start = Clock::now();
  const auto preset = ec2_preset(App::kPowerIteration);
  const Matrix x = random_symmetric_matrix(600, 2021);
  const Vector b0 = random_matrix(600, 1, 5).col(0);
  const auto expected = oracle::power_iterates(x, b0, 50);
  const auto g = build_generator(20, 10, RandomGaussian{1});
  const auto store = encode_store(x, g, Orientation::kRow);
  PowerIterationOptions opts;
  opts.iterations = 50;
  opts.keep_iterates = true;
  double worst = 0.0;
  std::size_t runs = 0;
  bool pass = true;
  for (Scheme scheme : {Scheme::kHeterogeneous, Scheme::kHomogeneousCyclic}) {
    for (const StragglerPolicy& policy : {StragglerPolicy{NoStragglers{}}, StragglerPolicy{SlowestK{2}}}) {
      ElasticRuntime rt(g, MasterState{{}, 0.5, 2, scheme}, ClusterInputs{preset_roster(preset), policy, 2021, {}});
      const auto r = power_iteration(rt, store, b0, opts);
      for (std::size_t k = 0; k < 50; ++k) worst = std::max(worst, oracle::max_abs_diff(r.iterates[k], expected[k]));
      ++runs;
    }
  }
  const double elapsed = seconds_since(start);
  pass = worst <= 1e-6 && elapsed < 60.0;
  return {pass, std::to_string(runs) + " runs x 50 iterations, max |coded - centralized| = " + fmt("%.3g", worst) +
                    fmt(", %.2f s", elapsed)};
}

constexpr double kObjectiveRoundoff = 1e-9;

Outcome regression_end_to_end() {
  const auto start = Clock::now();
  const auto preset = ec2_preset(App::kLinearRegression);
  const auto problem = random_regression_problem(2000, 50, 2021);
  const double eta = default_step_size(problem.x);
  const Vector b0 = Vector::Zero(50);
  const auto expected = oracle::gd_iterates(problem.x, problem.y, b0, eta, 100);
  const auto g = build_generator(20, 10, RandomGaussian{1});
  const auto rows = encode_store(problem.x, g, Orientation::kRow);
  const auto cols = encode_store(problem.x, g, Orientation::kColumn);
  RegressionOptions opts;
  opts.step_size = eta;
  opts.iterations = 100;
  opts.keep_iterates = true;
  double worst = 0.0;
  std::size_t increases = 0;
  double largest_increase = 0.0;
  std::size_t runs = 0;
  for (Scheme scheme : {Scheme::kHeterogeneous, Scheme::kHomogeneousCyclic}) {
    for (const StragglerPolicy& policy : {StragglerPolicy{NoStragglers{}}, StragglerPolicy{SlowestK{2}}}) {
      ElasticRuntime rt(g, MasterState{{}, 0.5, 2, scheme}, ClusterInputs{preset_roster(preset), policy, 2021, {}});
      const auto r = linear_regression_gd(rt, rows, cols, problem.y, b0, opts);
      for (std::size_t k = 0; k < 100; ++k) worst = std::max(worst, oracle::max_abs_diff(r.iterates[k], expected[k]));
      // Once converged the objective sits at its floor and only rounding noise remains.
      for (std::size_t k = 1; k < r.trace.iterations.size(); ++k) {
        const double prev = r.trace.iterations[k - 1].error_metric;
        const double rel = (r.trace.iterations[k].error_metric - prev) / prev;
        largest_increase = std::max(largest_increase, rel);
        if (rel > kObjectiveRoundoff) ++increases;
      }
      ++runs;
    }
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-6 && increases == 0 && elapsed < 60.0,
          std::to_string(runs) + " runs x 100 iterations, max |coded - centralized| = " + fmt("%.3g", worst) + ", " +
              std::to_string(increases) + " objective increases above roundoff (largest relative change " +
              fmt("%.3g", largest_increase) + ")" + fmt(", %.2f s", elapsed)};
}

Outcome adaptive_estimation() {
  const std::span<const double> s(kTable1PowerIteration);
  const std::size_t l = 10;
  const auto g = build_generator(20, l, RandomGaussian{1});
  const Matrix x = random_matrix(4000, 8, 9);
  const Vector w = random_matrix(8, 1, 10).col(0);
  const auto store = encode_store(x, g, Orientation::kRow);
  const double target = optimal_load_vector(s, l, 0).time;
  ElasticRuntime rt(g, MasterState{std::vector<double>(20, 1.0), 0.5, 0, Scheme::kHeterogeneous},
                    ClusterInputs{stable_roster(s), NoStragglers{}, 0, {}});
  double worst_time = 0.0;
  for (std::size_t t = 0; t < 50; ++t) {
    const auto r = rt.execute_step(store, {w.data(), static_cast<std::size_t>(w.size())});
    if (t >= 10) worst_time = std::max(worst_time, std::abs(r.trace.step_time - target) / target);
  }
  double worst_estimate = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    worst_estimate = std::max(worst_estimate, std::abs(rt.state().speed_estimate[i] - s[i]) / s[i]);
  }
  return {worst_estimate <= 1e-6 && worst_time <= 0.01,
          fmt("max relative estimate error %.3g after 50 steps, max step-time deviation from c* %.4f%% (steps 10-49)",
              worst_estimate, 100.0 * worst_time)};
}

Outcome reproducibility() {
  const auto dir = std::filesystem::temp_directory_path() / "csec_acceptance";
  std::filesystem::create_directories(dir);
  bool pass = true;
  std::string detail;
  for (App app : {App::kPowerIteration, App::kLinearRegression}) {
    auto c = ec2_preset(app);
    std::string bytes[2];
    for (int run = 0; run < 2; ++run) {
      const auto path = dir / (std::to_string(run) + "_" + c.output);
      {
        std::ofstream out(path, std::ios::binary);
        run_experiment(c, out);
      }
      std::ifstream in(path, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      bytes[run] = ss.str();
    }
    const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
    pass = pass && same;
    detail += c.output + (same ? " identical (" : " differs (") + std::to_string(bytes[0].size()) + " bytes) ";
  }
  std::filesystem::remove_all(dir);
  return {pass, detail};
}

}  // namespace

int main() {
  const auto instances = random_instances(1000);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"golden examples", golden_examples},
      {"load solver vs bisection oracle", [&] { return oracle_equivalence(instances); }},
      {"computation time non-decreasing in S", [&] { return tradeoff(instances); }},
      {"straggler safety, exhaustive subsets", straggler_safety},
      {"filling invariants", filling_invariants},
      {"measured speeds, heterogeneous vs homogeneous", table_one},
      {"power iteration end to end", power_iteration_end_to_end},
      {"linear regression end to end", regression_end_to_end},
      {"adaptive speed estimation", adaptive_estimation},
      {"byte-identical reruns", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
