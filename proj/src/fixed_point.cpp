#include "ergolab/fixed_point.hpp"

#include <cmath>
#include <vector>

#include "ergolab/error.hpp"

namespace ergolab {

Fixed128 parse_fraction(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) throw Error(ErrorCode::kInvalidArgument, "empty fraction");
  std::size_t pos = 0;
  while (pos < s.size() && s[pos] == '0') ++pos;
  if (pos < s.size() && s[pos] != '.') {
    throw Error(ErrorCode::kInvalidArgument,
                "fraction must lie in [0,1): '" + std::string(text) + "'");
  }
  std::vector<int> digits;
  if (pos < s.size()) {
    for (char c : s.substr(pos + 1)) {
      if (c < '0' || c > '9') {
        throw Error(ErrorCode::kInvalidArgument, "bad digit in fraction '" + std::string(text) + "'");
      }
      digits.push_back(c - '0');
    }
  }
  // Binary expansion by repeated doubling of the decimal digits.
  Fixed128 bits = 0;
  for (int b = 0; b < 128; ++b) {
    int carry = 0;
    for (std::size_t i = digits.size(); i-- > 0;) {
      const int d = digits[i] * 2 + carry;
      digits[i] = d % 10;
      carry = d / 10;
    }
    bits = (bits << 1) | static_cast<Fixed128>(carry);
  }
  return bits;
}

std::string format_fraction(Fixed128 x, int digits) {
  std::string out = "0.";
  std::uint64_t hi = static_cast<std::uint64_t>(x >> 64);
  std::uint64_t lo = static_cast<std::uint64_t>(x);
  for (int i = 0; i < digits; ++i) {
    const unsigned __int128 low10 = static_cast<unsigned __int128>(lo) * 10u;
    const unsigned __int128 high10 = static_cast<unsigned __int128>(hi) * 10u + (low10 >> 64);
    out.push_back(static_cast<char>('0' + static_cast<int>(high10 >> 64)));
    hi = static_cast<std::uint64_t>(high10);
    lo = static_cast<std::uint64_t>(low10);
  }
  return out;
}

std::string format_fraction_roundtrip(Fixed128 x) {
  std::string out = format_fraction(x, 40);
  if (parse_fraction(out) == x) return out;
  for (std::size_t i = out.size(); i-- > 2;) {
    if (out[i] != '9') {
      ++out[i];
      return out;
    }
    out[i] = '0';
  }
  return "0";
}

double fraction_to_double(Fixed128 x) noexcept {
  const double hi = static_cast<double>(static_cast<std::uint64_t>(x >> 64));
  const double lo = static_cast<double>(static_cast<std::uint64_t>(x));
  return std::ldexp(hi, -64) + std::ldexp(lo, -128);
}

}  // namespace ergolab
