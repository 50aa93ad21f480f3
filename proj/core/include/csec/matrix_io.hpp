#pragma once

#include <filesystem>
#include <istream>
#include <ostream>

#include "csec/types.hpp"

namespace csec {

// Dense binary layout: "CSEC", u32 version, u64 rows, u64 cols, then
// row-major little-endian f64 values.
inline constexpr std::uint32_t kMatrixFormatVersion = 1;

Matrix read_matrix_binary(std::istream& in);
void write_matrix_binary(std::ostream& out, const Matrix& m);

// One row per line, comma separated, no header.
Matrix read_matrix_csv(std::istream& in);
void write_matrix_csv(std::ostream& out, const Matrix& m);

// Picks the format from the file contents (binary magic) or falls back to CSV.
Matrix load_matrix(const std::filesystem::path& path);

}  // namespace csec
