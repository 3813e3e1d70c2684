#include "ergolab/suffix.hpp"

#include <algorithm>
#include <limits>

namespace ergolab {

std::vector<Index> suffix_array(WordView w) {
  const std::size_t n = w.size();
  if (n >= std::numeric_limits<Index>::max()) {
    throw Error(ErrorCode::kCapacity, "word too long for 32-bit suffix indices");
  }
  std::vector<Index> sa(n), rank(n), tmp(n), count;
  if (n == 0) return sa;
  for (std::size_t i = 0; i < n; ++i) {
    sa[i] = static_cast<Index>(i);
    rank[i] = w[i];
  }
  std::sort(sa.begin(), sa.end(), [&](Index a, Index b) { return w[a] < w[b] || (w[a] == w[b] && a < b); });
  // Re-rank densely from 1; rank 0 marks "past the end".
  Index classes = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == 0 || w[sa[j]] != w[sa[j - 1]]) ++classes;
    tmp[sa[j]] = classes;
  }
  rank.swap(tmp);
  std::vector<Index> second(n);
  for (std::size_t step = 1; classes < n; step <<= 1) {
    // Order by second key: suffixes whose second half runs off the end
    // come first, then the current order shifted back by step.
    std::size_t p = 0;
    for (std::size_t i = n - std::min(step, n); i < n; ++i) second[p++] = static_cast<Index>(i);
    for (std::size_t j = 0; j < n; ++j)
      if (sa[j] >= step) second[p++] = static_cast<Index>(sa[j] - step);
    count.assign(static_cast<std::size_t>(classes) + 1, 0);
    for (std::size_t i = 0; i < n; ++i) ++count[rank[i]];
    for (std::size_t c = 1; c < count.size(); ++c) count[c] += count[c - 1];
    for (std::size_t j = n; j-- > 0;) sa[--count[rank[second[j]]]] = second[j];
    auto key2 = [&](Index i) -> Index { return i + step < n ? rank[i + step] : 0; };
    classes = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == 0 || rank[sa[j]] != rank[sa[j - 1]] || key2(sa[j]) != key2(sa[j - 1])) ++classes;
      tmp[sa[j]] = classes;
    }
    rank.swap(tmp);
  }
  return sa;
}

std::vector<Index> lcp_array(WordView w, const std::vector<Index>& sa) {
  const std::size_t n = sa.size();
  std::vector<Index> rank(n), lcp(n, 0);
  for (std::size_t j = 0; j < n; ++j) rank[sa[j]] = static_cast<Index>(j);
  std::size_t h = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (rank[i] == 0) {
      h = 0;
      continue;
    }
    const std::size_t j = sa[rank[i] - 1];
    while (i + h < n && j + h < n && w[i + h] == w[j + h]) ++h;
    lcp[rank[i]] = static_cast<Index>(h);
    if (h > 0) --h;
  }
  return lcp;
}

std::vector<Index> longest_previous_factor(const std::vector<Index>& sa,
                                           const std::vector<Index>& lcp) {
  // Scan in suffix order keeping a stack of suffixes with increasing
  // positions. A suffix's previous-smaller-position neighbor on either side
  // in suffix order maximizes the lcp among earlier positions.
  const std::size_t n = sa.size();
  std::vector<Index> lpf(n, 0);
  struct Entry {
    Index pos;
    Index lcp_below;  // lcp with the entry beneath it
  };
  std::vector<Entry> stack;
  stack.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    Index cur = k == 0 ? 0 : lcp[k];
    while (!stack.empty() && stack.back().pos > sa[k]) {
      const Entry top = stack.back();
      stack.pop_back();
      lpf[top.pos] = std::max(lpf[top.pos], cur);
      cur = std::min(cur, top.lcp_below);
    }
    if (!stack.empty()) lpf[sa[k]] = std::max(lpf[sa[k]], cur);
    stack.push_back({sa[k], stack.empty() ? 0 : cur});
  }
  return lpf;
}

}  // namespace ergolab
