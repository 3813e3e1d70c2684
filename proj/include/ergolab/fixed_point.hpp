#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ergolab {

/// A point of the circle [0,1) stored as floor(x * 2^128). Addition and
/// subtraction wrap, which is exactly arithmetic mod 1.
using Fixed128 = unsigned __int128;

/// Parses "0.xxxx" (or ".xxxx", "0") into the truncated 128-bit fraction.
/// Values must lie in [0,1).
Fixed128 parse_fraction(std::string_view decimal);

/// Decimal rendering with `digits` fractional digits (truncated).
std::string format_fraction(Fixed128 x, int digits = 40);

/// 40 digits rounded up, so that parse_fraction recovers x exactly.
std::string format_fraction_roundtrip(Fixed128 x);

double fraction_to_double(Fixed128 x) noexcept;

/// Same as fraction_to_double for a measure that may be the whole circle
/// (count == 0 with `full` set).
inline double length_to_double(Fixed128 count, bool full) noexcept {
  return full ? 1.0 : fraction_to_double(count);
}

namespace constants {
// Fractional parts to 64 significant digits.
inline constexpr std::string_view kGoldenConjugate =
    "0.6180339887498948482045868343656381177203091798057628621354486227";
inline constexpr std::string_view kSqrt2Minus1 =
    "0.4142135623730950488016887242096980785696718753769480731766797379";
inline constexpr std::string_view kPiMinus3 =
    "0.1415926535897932384626433832795028841971693993751058209749445923";
}  // namespace constants

}  // namespace ergolab
