#pragma once

#include <string>

namespace csec {

// %.<digits>g, with "nan"/"inf" spelled consistently across platforms.
std::string format_real(double value, int significant_digits = 12);

}  // namespace csec
