#include "ergolab/towers.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <tuple>

namespace ergolab {

double TowerDecomposition::leftover_fraction() const {
  if (path_length == 0) return 0.0;
  return static_cast<double>(leftover.size()) / static_cast<double>(path_length);
}

bool TowerDecomposition::is_partition() const {
  std::vector<char> seen(path_length, 0);
  auto mark = [&](std::size_t i) {
    if (i >= path_length || seen[i]) return false;
    seen[i] = 1;
    return true;
  };
  for (const auto& t : towers) {
    if (t.height == 0) return false;
    for (std::size_t j = 0; j < t.height; ++j)
      if (!mark(t.base + j)) return false;
  }
  for (std::size_t i : leftover)
    if (!mark(i)) return false;
  return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
}

std::size_t TowerDecomposition::min_height() const {
  std::size_t h = 0;
  for (const auto& t : towers) h = h == 0 ? t.height : std::min(h, t.height);
  return h;
}

TowerDecomposition kakutani_from_candidates(std::size_t path_length,
                                            const std::vector<std::size_t>& candidates,
                                            std::size_t min_height) {
  if (min_height == 0) throw Error(ErrorCode::kInvalidArgument, "minimum height must be positive");
  std::vector<std::size_t> bases;
  for (std::size_t c : candidates) {
    if (c >= path_length) break;
    if (!bases.empty() && c < bases.back() + min_height) continue;
    bases.push_back(c);
  }
  TowerDecomposition out;
  out.path_length = path_length;
  const std::size_t head = bases.empty() ? path_length : bases.front();
  for (std::size_t i = 0; i < head; ++i) out.leftover.push_back(i);
  for (std::size_t b = 0; b < bases.size(); ++b) {
    const std::size_t end = b + 1 < bases.size() ? bases[b + 1] : path_length;
    if (end - bases[b] >= min_height) {
      out.towers.push_back({bases[b], end - bases[b]});
    } else {
      for (std::size_t i = bases[b]; i < end; ++i) out.leftover.push_back(i);
    }
  }
  return out;
}

TowerDecomposition kakutani_decompose(WordView path, WordView pattern, std::size_t min_height) {
  if (min_height == 0) throw Error(ErrorCode::kInvalidArgument, "minimum height must be positive");
  if (pattern.empty() || pattern.size() > min_height) {
    throw Error(ErrorCode::kInvalidArgument, "pattern length must be in [1, N]");
  }
  std::vector<std::size_t> occurrences;
  if (path.size() >= pattern.size()) {
    auto it = path.begin();
    const std::boyer_moore_horspool_searcher searcher(pattern.begin(), pattern.end());
    while (true) {
      auto [lo, hi] = searcher(it, path.end());
      if (lo == path.end()) break;
      occurrences.push_back(static_cast<std::size_t>(lo - path.begin()));
      it = lo + 1;
    }
  }
  return kakutani_from_candidates(path.size(), occurrences, min_height);
}

TowerDecomposition rohlin_tower(std::size_t path_length, std::size_t height, double epsilon) {
  if (height == 0) throw Error(ErrorCode::kInvalidArgument, "tower height must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must lie in (0, 1)");
  }
  if (static_cast<double>(height) > epsilon * static_cast<double>(path_length)) {
    throw Error(ErrorCode::kInfeasibleTower, "height " + std::to_string(height) + " exceeds " +
                                                 std::to_string(epsilon) + " * " +
                                                 std::to_string(path_length));
  }
  TowerDecomposition out;
  out.path_length = path_length;
  const std::size_t count = path_length / height;
  for (std::size_t t = 0; t < count; ++t) out.towers.push_back({t * height, height});
  for (std::size_t i = count * height; i < path_length; ++i) out.leftover.push_back(i);
  return out;
}

std::vector<Column> extract_columns(const TowerDecomposition& decomposition, WordView path_p,
                                    std::optional<WordView> path_q) {
  if (path_p.size() != decomposition.path_length ||
      (path_q && path_q->size() != decomposition.path_length)) {
    throw Error(ErrorCode::kLengthMismatch, "paths do not match the decomposition length");
  }
  using Key = std::tuple<std::size_t, Word, Word>;
  std::map<Key, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < decomposition.towers.size(); ++i) {
    const auto& t = decomposition.towers[i];
    if (t.base + t.height > path_p.size()) {
      throw Error(ErrorCode::kLengthMismatch, "tower extends past the path");
    }
    Word p(path_p.begin() + t.base, path_p.begin() + t.base + t.height);
    Word q;
    if (path_q) q.assign(path_q->begin() + t.base, path_q->begin() + t.base + t.height);
    groups[Key{t.height, std::move(p), std::move(q)}].push_back(i);
  }
  std::vector<Column> out;
  out.reserve(groups.size());
  for (auto& [key, members] : groups) {
    Column c;
    c.height = std::get<0>(key);
    c.name_p = std::get<1>(key);
    if (path_q) c.name_q = std::get<2>(key);
    c.members = std::move(members);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace ergolab
