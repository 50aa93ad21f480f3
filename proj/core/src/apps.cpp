#include "csec/apps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "csec/error.hpp"

namespace csec {

namespace {

std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

void absorb(IterationRecord& record, StepTrace trace) {
  record.step_time += trace.step_time;
  record.n_available = std::max(record.n_available, trace.available.size());
  record.n_stragglers += trace.stragglers.size();
  record.decode_ok = record.decode_ok && trace.decode_ok;
  record.steps.push_back(std::move(trace));
}

StepResult run_step(ElasticRuntime& runtime, const CodedStore& store, const Vector& w, IterateTrace& trace,
                    IterationRecord& record, double cum) {
  try {
    return runtime.execute_step(store, as_span(w));
  } catch (const StepFailure& failure) {
    absorb(record, failure.trace());
    record.cum_time = cum + record.step_time;
    record.error_metric = std::numeric_limits<double>::quiet_NaN();
    trace.iterations.push_back(record);
    throw AppStepFailure(failure.what(), trace);
  }
}

}  // namespace

PowerIterationResult power_iteration(ElasticRuntime& runtime, const CodedStore& row_store, const Vector& b0,
                                     const PowerIterationOptions& options) {
  if (row_store.orientation != Orientation::kRow || row_store.source_rows != row_store.cols) {
    throw Error(ErrorCode::kShape, "power iteration needs a row store of a square matrix");
  }
  if (static_cast<std::size_t>(b0.size()) != row_store.cols) throw Error(ErrorCode::kShape, "b0 has wrong length");
  const double n0 = b0.norm();
  if (!(n0 > 0.0)) throw Error(ErrorCode::kInvalidParameters, "b0 must be nonzero");

  PowerIterationResult result;
  Vector b = b0 / n0;
  double cum = 0.0;
  for (std::size_t k = 1; k <= options.iterations; ++k) {
    IterationRecord record;
    record.iteration = k;
    StepResult step = run_step(runtime, row_store, b, result.trace, record, cum);
    const double norm = step.y.norm();
    if (!(norm > 0.0)) throw Error(ErrorCode::kBreakdown, "X b_k vanished at iteration " + std::to_string(k));
    b = step.y / norm;
    absorb(record, std::move(step.trace));
    cum += record.step_time;
    record.cum_time = cum;
    record.error_metric = options.reference ? normalized_mse_up_to_sign(b, *options.reference)
                                            : std::numeric_limits<double>::quiet_NaN();
    result.trace.iterations.push_back(std::move(record));
    if (options.keep_iterates) result.iterates.push_back(b);
  }
  const StepResult last = runtime.execute_step(row_store, as_span(b));
  result.eigenvalue = b.dot(last.y);
  result.eigenvector = std::move(b);
  return result;
}

RegressionResult linear_regression_gd(ElasticRuntime& runtime, const CodedStore& row_store,
                                      const CodedStore& column_store, const Vector& y, const Vector& b0,
                                      const RegressionOptions& options) {
  if (row_store.orientation != Orientation::kRow || column_store.orientation != Orientation::kColumn) {
    throw Error(ErrorCode::kShape, "regression needs a row store and a column store");
  }
  if (static_cast<std::size_t>(y.size()) != row_store.source_rows ||
      static_cast<std::size_t>(b0.size()) != row_store.cols || column_store.cols != row_store.source_rows ||
      column_store.source_rows != row_store.cols) {
    throw Error(ErrorCode::kShape, "regression dimensions are inconsistent");
  }
  if (!(options.step_size > 0.0)) throw Error(ErrorCode::kInvalidParameters, "step size must be positive");

  const double y_norm2 = std::max(y.squaredNorm(), std::numeric_limits<double>::min());
  RegressionResult result;
  Vector b = b0;
  double cum = 0.0;
  double previous = std::numeric_limits<double>::infinity();
  std::size_t growth = 0;
  for (std::size_t k = 0; k < options.iterations; ++k) {
    IterationRecord record;
    record.iteration = k;

    StepResult forward = run_step(runtime, row_store, b, result.trace, record, cum);
    const Vector z = forward.y - y;
    absorb(record, std::move(forward.trace));
    StepResult backward = run_step(runtime, column_store, z, result.trace, record, cum);
    absorb(record, std::move(backward.trace));
    b -= options.step_size * backward.y;

    const double objective = z.squaredNorm() / y_norm2;
    record.error_metric = objective;
    cum += record.step_time;
    record.cum_time = cum;
    result.trace.iterations.push_back(std::move(record));
    if (options.keep_iterates) result.iterates.push_back(b);

    growth = objective > previous ? growth + 1 : 0;
    previous = objective;
    if (!std::isfinite(objective) || growth >= options.divergence_window) {
      throw Error(ErrorCode::kDiverged, "objective grew for " + std::to_string(growth) +
                                            " consecutive iterations at iteration " + std::to_string(k));
    }
  }
  result.coefficients = std::move(b);
  return result;
}

double normalized_mse_up_to_sign(const Vector& estimate, const Vector& truth) {
  const double denom = truth.squaredNorm();
  if (!(denom > 0.0)) throw Error(ErrorCode::kInvalidParameters, "reference vector is zero");
  return std::min((estimate - truth).squaredNorm(), (estimate + truth).squaredNorm()) / denom;
}

Vector reference_dominant_eigenvector(const Matrix& x) {
  if (x.rows() != x.cols()) throw Error(ErrorCode::kShape, "eigenvector reference needs a square matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(x), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::kInternal, "eigensolver failed");
  const auto& values = solver.eigenvalues();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (std::abs(values(i)) > std::abs(values(best))) best = i;
  }
  return solver.eigenvectors().col(best).normalized();
}

Vector least_squares_solution(const Matrix& x, const Vector& y) {
  return Eigen::MatrixXd(x).colPivHouseholderQr().solve(y);
}

double default_step_size(const Matrix& x, std::size_t warmup) {
  Vector v = Vector::Ones(x.cols()) / std::sqrt(static_cast<double>(x.cols()));
  double lambda = 0.0;
  for (std::size_t i = 0; i < warmup; ++i) {
    const Vector next = x.transpose() * (x * v);
    lambda = v.dot(next);
    const double norm = next.norm();
    if (!(norm > 0.0)) throw Error(ErrorCode::kBreakdown, "X^T X annihilated the warmup vector");
    v = next / norm;
  }
  if (!(lambda > 0.0)) throw Error(ErrorCode::kBreakdown, "non-positive lambda_max estimate");
  return 1.0 / lambda;
}

Matrix random_symmetric_matrix(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = uniform(rng);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

RegressionProblem random_regression_problem(std::size_t rows, std::size_t cols, std::uint64_t seed, double noise) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RegressionProblem p;
  p.x.resize(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) p.x(i, j) = normal(rng);
  }
  p.truth.resize(cols);
  for (std::size_t j = 0; j < cols; ++j) p.truth(j) = normal(rng);
  p.y = p.x * p.truth;
  for (std::size_t i = 0; i < rows; ++i) p.y(i) += noise * normal(rng);
  return p;
}

}  // namespace csec
