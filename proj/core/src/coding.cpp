#include "csec/coding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "csec/error.hpp"

namespace csec {

namespace {

bool well_conditioned(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return false;
  const double largest = sv(0);
  const double smallest = sv(sv.size() - 1);
  return largest > 0.0 && smallest >= kConditioningFloor * largest;
}

// Advances idx to the next k-combination of [0, n) in lexicographic order.
bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
  const std::size_t k = idx.size();
  for (std::size_t i = k; i-- > 0;) {
    if (idx[i] < n - k + i) {
      ++idx[i];
      for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

GeneratorMatrix::GeneratorMatrix(std::size_t n_machines, std::size_t recovery_threshold,
                                 Matrix entries)
    : n_machines_(n_machines), recovery_threshold_(recovery_threshold), entries_(std::move(entries)) {
  if (recovery_threshold_ < 1 || n_machines_ < recovery_threshold_) {
    throw Error(ErrorCode::kInvalidParameters,
                "generator requires N >= L >= 1, got N=" + std::to_string(n_machines_) +
                    " L=" + std::to_string(recovery_threshold_));
  }
  if (static_cast<std::size_t>(entries_.rows()) != n_machines_ ||
      static_cast<std::size_t>(entries_.cols()) != recovery_threshold_) {
    throw Error(ErrorCode::kShape, "generator entries must be N x L");
  }
}

Matrix GeneratorMatrix::rows(std::span<const MachineId> machines) const {
  Matrix out(machines.size(), recovery_threshold_);
  for (std::size_t i = 0; i < machines.size(); ++i) {
    if (machines[i] >= n_machines_) {
      throw Error(ErrorCode::kLookup, "machine " + std::to_string(machines[i]) + " outside generator");
    }
    out.row(i) = entries_.row(machines[i]);
  }
  return out;
}

SystematicVandermonde default_vandermonde(std::size_t n_machines, std::size_t recovery_threshold) {
  SystematicVandermonde kind;
  for (std::size_t j = 0; j + recovery_threshold < n_machines; ++j) {
    kind.points.push_back(static_cast<double>(j + 1));
  }
  return kind;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // result * (n - k + i) is divisible by i at every step.
    const std::uint64_t num = n - k + i;
    const std::uint64_t g = std::gcd(result, i);
    const std::uint64_t r = result / g;
    const std::uint64_t d = i / g;
    const std::uint64_t m = num / d;
    if (r != 0 && m > UINT64_MAX / r) return UINT64_MAX;
    result = r * m;
  }
  return result;
}

GeneratorMatrix build_generator(std::size_t n_machines, std::size_t recovery_threshold,
                                const GeneratorKind& kind) {
  if (recovery_threshold < 1 || n_machines < recovery_threshold) {
    throw Error(ErrorCode::kInvalidParameters,
                "generator requires N >= L >= 1, got N=" + std::to_string(n_machines) +
                    " L=" + std::to_string(recovery_threshold));
  }
  Matrix entries = Matrix::Zero(n_machines, recovery_threshold);

  if (const auto* vm = std::get_if<SystematicVandermonde>(&kind)) {
    if (vm->points.size() != n_machines - recovery_threshold) {
      throw Error(ErrorCode::kInvalidParameters,
                  "systematic Vandermonde needs N-L=" + std::to_string(n_machines - recovery_threshold) +
                      " points, got " + std::to_string(vm->points.size()));
    }
    std::set<double> seen;
    for (double a : vm->points) {
      if (!std::isfinite(a)) throw Error(ErrorCode::kInvalidParameters, "non-finite evaluation point");
      if (!seen.insert(a).second) {
        throw Error(ErrorCode::kNonMds, "duplicate evaluation point " + std::to_string(a));
      }
      // With a = 0 the parity row equals the first systematic row.
      if (a == 0.0 && recovery_threshold > 1) {
        throw Error(ErrorCode::kNonMds, "evaluation point 0 duplicates systematic row 1");
      }
    }
    for (std::size_t l = 0; l < recovery_threshold; ++l) entries(l, l) = 1.0;
    for (std::size_t j = 0; j < vm->points.size(); ++j) {
      double p = 1.0;
      for (std::size_t l = 0; l < recovery_threshold; ++l) {
        entries(recovery_threshold + j, l) = p;
        p *= vm->points[j];
      }
    }
  } else {
    const auto& rg = std::get<RandomGaussian>(kind);
    std::mt19937_64 rng(rg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t n = 0; n < n_machines; ++n) {
      for (std::size_t l = 0; l < recovery_threshold; ++l) entries(n, l) = normal(rng);
    }
  }

  GeneratorMatrix g(n_machines, recovery_threshold, std::move(entries));
  const ExhaustiveCheck exhaustive{};
  if (binomial(n_machines, recovery_threshold) <= exhaustive.budget) {
    if (!is_mds(g, exhaustive)) {
      throw Error(ErrorCode::kNonMds, "generator has a singular or ill-conditioned L-row submatrix");
    }
  } else if (!is_mds(g, SampledCheck{0x5eed, 2000})) {
    throw Error(ErrorCode::kNonMds, "generator failed sampled MDS check");
  }
  return g;
}

bool is_mds(const GeneratorMatrix& g, const MdsCheckMode& mode) {
  const std::size_t n = g.n_machines();
  const std::size_t l = g.recovery_threshold();
  std::vector<std::size_t> idx(l);

  if (const auto* ex = std::get_if<ExhaustiveCheck>(&mode)) {
    const std::uint64_t count = binomial(n, l);
    if (count > ex->budget) {
      throw Error(ErrorCode::kBudgetExceeded,
                  "C(" + std::to_string(n) + "," + std::to_string(l) + ")=" + std::to_string(count) +
                      " exceeds exhaustive budget; use sampled mode");
    }
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    do {
      if (!well_conditioned(g.rows(idx))) return false;
    } while (next_combination(idx, n));
    return true;
  }

  const auto& sampled = std::get<SampledCheck>(mode);
  std::mt19937_64 rng(sampled.seed);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (std::size_t t = 0; t < sampled.trials; ++t) {
    std::shuffle(all.begin(), all.end(), rng);
    std::copy_n(all.begin(), l, idx.begin());
    std::sort(idx.begin(), idx.end());
    if (!well_conditioned(g.rows(idx))) return false;
  }
  return true;
}

CodedStore encode_store(const Matrix& x, const GeneratorMatrix& g, Orientation orientation,
                        Padding padding) {
  const std::size_t l = g.recovery_threshold();
  // Column stores encode the row blocks of X^T.
  const Matrix source = orientation == Orientation::kRow ? x : Matrix(x.transpose());
  const std::size_t rows = source.rows();
  if (rows == 0 || source.cols() == 0) throw Error(ErrorCode::kShape, "empty data matrix");
  if (rows % l != 0 && padding == Padding::kDisabled) {
    throw Error(ErrorCode::kShape, std::string(orientation == Orientation::kRow ? "rows" : "cols") + " (" +
                                       std::to_string(rows) + ") not divisible by L=" + std::to_string(l));
  }
  const std::size_t block_rows = (rows + l - 1) / l;

  Matrix padded = Matrix::Zero(block_rows * l, source.cols());
  padded.topRows(rows) = source;

  CodedStore store;
  store.orientation = orientation;
  store.recovery_threshold = l;
  store.source_rows = rows;
  store.block_rows = block_rows;
  store.cols = source.cols();
  store.blocks.reserve(g.n_machines());
  for (std::size_t n = 0; n < g.n_machines(); ++n) {
    Matrix coded = Matrix::Zero(block_rows, source.cols());
    for (std::size_t b = 0; b < l; ++b) {
      const double coeff = g(n, b);
      if (coeff != 0.0) coded += coeff * padded.middleRows(b * block_rows, block_rows);
    }
    store.blocks.push_back(std::move(coded));
  }
  return store;
}

std::vector<double> decode_rows(std::size_t row_index, const std::map<MachineId, double>& responses,
                                const GeneratorMatrix& g) {
  const std::size_t l = g.recovery_threshold();
  if (responses.size() < l) {
    throw Error(ErrorCode::kNotDecodable, "row " + std::to_string(row_index) + " has " +
                                              std::to_string(responses.size()) + " responses, needs " +
                                              std::to_string(l));
  }
  std::vector<MachineId> machines;
  Matrix values(l, 1);
  for (const auto& [machine, value] : responses) {
    if (machines.size() == l) break;
    values(machines.size(), 0) = value;
    machines.push_back(machine);
  }
  Decoder decoder(g);
  const Matrix solved = decoder.solve(machines, values);
  return std::vector<double>(solved.data(), solved.data() + l);
}

const Eigen::PartialPivLU<Eigen::MatrixXd>& Decoder::factor(std::span<const MachineId> machines) {
  std::vector<MachineId> key(machines.begin(), machines.end());
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;

  Eigen::MatrixXd sub = g_->rows(machines);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(sub);
  if (!(lu.rcond() > 1e-14)) {
    throw Error(ErrorCode::kInternal, "singular generator submatrix: MDS invariant violated");
  }
  return cache_.emplace(std::move(key), std::move(lu)).first->second;
}

Matrix Decoder::solve(std::span<const MachineId> machines, const Matrix& values) {
  const std::size_t l = g_->recovery_threshold();
  if (machines.size() != l) {
    throw Error(ErrorCode::kNotDecodable,
                "decode needs exactly L=" + std::to_string(l) + " machines, got " + std::to_string(machines.size()));
  }
  if (static_cast<std::size_t>(values.rows()) != l) {
    throw Error(ErrorCode::kShape, "response matrix must have L rows");
  }
  const Eigen::MatrixXd rhs = values;
  return factor(machines).solve(rhs);
}

}  // namespace csec
