#pragma once

#include <cstdint>
#include <vector>

#include "ergolab/core.hpp"

namespace ergolab {

using Index = std::uint32_t;

/// Suffix array by prefix doubling with radix passes.
std::vector<Index> suffix_array(WordView w);

/// lcp[j] = lcp(suffix sa[j-1], suffix sa[j]); lcp[0] = 0 (Kasai et al.).
std::vector<Index> lcp_array(WordView w, const std::vector<Index>& sa);

/// lpf[i] = length of the longest prefix of w[i..] that also starts at some
/// j < i (the occurrence may overlap position i).
std::vector<Index> longest_previous_factor(const std::vector<Index>& sa,
                                           const std::vector<Index>& lcp);

}  // namespace ergolab
