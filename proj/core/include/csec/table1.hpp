#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace csec {

// Measured normalized speeds of 20 EC2 workers, stored column by column:
// two t2.large columns, then two t2.xlarge columns, five rows each.
// Machine ids 0..9 are t2.large and 10..19 are t2.xlarge.
inline constexpr std::array<double, 20> kTable1PowerIteration{
    0.85, 0.76, 0.59, 0.59, 0.90,  // t2.large
    0.84, 0.88, 0.64, 0.88, 0.70,  // t2.large
    1.28, 0.92, 1.20, 1.34, 1.29,  // t2.xlarge
    1.20, 1.27, 0.91, 0.85, 0.90,  // t2.xlarge
};

inline constexpr std::array<double, 20> kTable1LinearRegression{
    0.70, 0.90, 0.88, 0.90, 0.52,  // t2.large
    0.53, 0.90, 0.77, 0.48, 0.48,  // t2.large
    1.30, 1.26, 0.88, 1.23, 0.83,  // t2.xlarge
    1.26, 1.34, 1.26, 1.37, 0.58,  // t2.xlarge
};

// "table1_power" or "table1_linreg"; empty span for unknown names.
std::span<const double> table1_preset(std::string_view name);

}  // namespace csec
