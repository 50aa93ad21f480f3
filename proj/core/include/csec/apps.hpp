#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "csec/runtime.hpp"

namespace csec {

struct IterationRecord {
  std::size_t iteration = 0;
  double error_metric = 0.0;
  double step_time = 0.0;  // sum over the iteration's coded products
  double cum_time = 0.0;
  std::size_t n_available = 0;
  std::size_t n_stragglers = 0;
  bool decode_ok = true;
  std::vector<StepTrace> steps;
};

struct IterateTrace {
  std::vector<IterationRecord> iterations;
};

// An unrecovered step failure inside an app, with the iterations completed
// so far plus a final record holding the failed step.
class AppStepFailure : public Error {
 public:
  AppStepFailure(const std::string& what, IterateTrace trace)
      : Error(ErrorCode::kStepFailure, what), trace_(std::move(trace)) {}

  const IterateTrace& trace() const noexcept { return trace_; }

 private:
  IterateTrace trace_;
};

struct PowerIterationOptions {
  std::size_t iterations = 50;
  std::optional<Vector> reference;  // true dominant eigenvector for the error column
  bool keep_iterates = false;
};

struct PowerIterationResult {
  double eigenvalue = 0.0;
  Vector eigenvector;
  IterateTrace trace;
  std::vector<Vector> iterates;  // b_1..b_T when keep_iterates
};

// b_{k+1} = X b_k / ||X b_k||, every product through the coded runtime. The
// eigenvalue is the Rayleigh quotient b_T^T X b_T from one more coded product.
PowerIterationResult power_iteration(ElasticRuntime& runtime, const CodedStore& row_store, const Vector& b0,
                                     const PowerIterationOptions& options);

struct RegressionOptions {
  double step_size = 0.0;
  std::size_t iterations = 100;
  bool keep_iterates = false;
  std::size_t divergence_window = 5;
};

struct RegressionResult {
  Vector coefficients;
  IterateTrace trace;
  std::vector<Vector> iterates;  // b_1..b_T when keep_iterates
};

// Gradient descent on ||X b - y||^2 with z = X b - y from the row store and
// g = X^T z from the column store. Iteration k reports ||X b_k - y||^2 / ||y||^2.
RegressionResult linear_regression_gd(ElasticRuntime& runtime, const CodedStore& row_store,
                                      const CodedStore& column_store, const Vector& y, const Vector& b0,
                                      const RegressionOptions& options);

// min over sign of ||±estimate - truth||^2 / ||truth||^2
double normalized_mse_up_to_sign(const Vector& estimate, const Vector& truth);

// Dense reference solutions for the trace error columns.
Vector reference_dominant_eigenvector(const Matrix& x);
Vector least_squares_solution(const Matrix& x, const Vector& y);

// 1 / (estimate of lambda_max(X^T X)) from power-iteration warmup steps.
double default_step_size(const Matrix& x, std::size_t warmup = 20);

// Seeded symmetric matrix with entries uniform in [0, 1).
Matrix random_symmetric_matrix(std::size_t n, std::uint64_t seed);

struct RegressionProblem {
  Matrix x;
  Vector y;
  Vector truth;
};

// Gaussian design, Gaussian coefficients, labels y = X b + noise * N(0, 1).
RegressionProblem random_regression_problem(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                            double noise = 0.1);

}  // namespace csec
