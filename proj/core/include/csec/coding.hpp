#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "csec/types.hpp"

namespace csec {

// N×L real generator of an MDS code. Row n holds the coefficients machine n
// uses to combine the L row blocks of the data matrix.
class GeneratorMatrix {
 public:
  GeneratorMatrix(std::size_t n_machines, std::size_t recovery_threshold, Matrix entries);

  std::size_t n_machines() const noexcept { return n_machines_; }
  std::size_t recovery_threshold() const noexcept { return recovery_threshold_; }
  const Matrix& entries() const noexcept { return entries_; }
  double operator()(std::size_t n, std::size_t l) const { return entries_(n, l); }

  // L×L submatrix formed from the given machine rows, in the order given.
  Matrix rows(std::span<const MachineId> machines) const;

 private:
  std::size_t n_machines_;
  std::size_t recovery_threshold_;
  Matrix entries_;
};

struct SystematicVandermonde {
  std::vector<double> points;  // exactly N - L distinct evaluation points
};

struct RandomGaussian {
  std::uint64_t seed = 0;
};

using GeneratorKind = std::variant<SystematicVandermonde, RandomGaussian>;

// Points 1, 2, ..., N - L.
SystematicVandermonde default_vandermonde(std::size_t n_machines, std::size_t recovery_threshold);

// Identity in rows 0..L-1; parity row L+j is [1, a_j, a_j^2, ..., a_j^(L-1)].
// Construction rejects parameters that cannot give an MDS code, and when
// C(N, L) fits the exhaustive budget the full minor check is run.
GeneratorMatrix build_generator(std::size_t n_machines, std::size_t recovery_threshold,
                                const GeneratorKind& kind);

struct ExhaustiveCheck {
  std::uint64_t budget = 100000;
};

struct SampledCheck {
  std::uint64_t seed = 0;
  std::size_t trials = 1000;
};

using MdsCheckMode = std::variant<ExhaustiveCheck, SampledCheck>;

// Minimum singular value below this fraction of the largest counts as singular.
inline constexpr double kConditioningFloor = 1e-8;

bool is_mds(const GeneratorMatrix& g, const MdsCheckMode& mode = ExhaustiveCheck{});

std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

enum class Orientation { kRow, kColumn };

// Per-machine coded sub-matrices. A column store holds coded row blocks of the
// transpose, so products with it reconstruct X^T z.
struct CodedStore {
  Orientation orientation = Orientation::kRow;
  std::size_t recovery_threshold = 0;
  std::size_t source_rows = 0;  // rows of the encoded operand before padding
  std::size_t block_rows = 0;   // rows of each coded sub-matrix (padded / L)
  std::size_t cols = 0;         // length of the vector it multiplies
  std::vector<Matrix> blocks;   // one per machine

  std::size_t n_machines() const noexcept { return blocks.size(); }
};

enum class Padding { kZero, kDisabled };

CodedStore encode_store(const Matrix& x, const GeneratorMatrix& g, Orientation orientation,
                        Padding padding = Padding::kZero);

// Solves the L×L system for (X_1^(i) w, ..., X_L^(i) w) from coded responses
// X̃_n^(i) w. Uses the first L responders in map order.
std::vector<double> decode_rows(std::size_t row_index, const std::map<MachineId, double>& responses,
                                const GeneratorMatrix& g);

// LU factorizations of responder-set submatrices, keyed by the ordered set.
// Not synchronized; give each thread its own instance.
class Decoder {
 public:
  explicit Decoder(const GeneratorMatrix& g) : g_(&g) {}

  // values is L×k: column j holds the responses of the L machines for row j.
  // Returns the L×k matrix of uncoded block products.
  Matrix solve(std::span<const MachineId> machines, const Matrix& values);

  std::size_t cache_size() const noexcept { return cache_.size(); }
  const GeneratorMatrix& generator() const noexcept { return *g_; }

 private:
  const Eigen::PartialPivLU<Eigen::MatrixXd>& factor(std::span<const MachineId> machines);

  const GeneratorMatrix* g_;
  std::map<std::vector<MachineId>, Eigen::PartialPivLU<Eigen::MatrixXd>> cache_;
};

}  // namespace csec
