#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ergolab/core.hpp"

namespace ergolab {

struct Tower {
  std::size_t base = 0;
  std::size_t height = 0;

  bool operator==(const Tower&) const = default;
};

/// Disjoint towers over the positions [0, path_length) plus the positions
/// they leave uncovered.
struct TowerDecomposition {
  std::size_t path_length = 0;
  std::vector<Tower> towers;  // sorted by base
  std::vector<std::size_t> leftover;

  double leftover_fraction() const;
  /// Disjointness and exact coverage.
  bool is_partition() const;
  std::size_t min_height() const;
};

/// Bases are occurrences of `pattern`, thinned left to right so consecutive
/// bases are at least `min_height` apart. Each tower runs to the next base;
/// the head before the first base and a final tail shorter than
/// `min_height` are leftover.
TowerDecomposition kakutani_decompose(WordView path, WordView pattern, std::size_t min_height);
/// Same rule from explicit base candidates (sorted, distinct).
TowerDecomposition kakutani_from_candidates(std::size_t path_length,
                                            const std::vector<std::size_t>& candidates,
                                            std::size_t min_height);

/// Equal-height towers at 0, N, 2N, ...; requires N <= epsilon * n.
TowerDecomposition rohlin_tower(std::size_t path_length, std::size_t height, double epsilon);

struct Column {
  std::size_t height = 0;
  Word name_p;
  std::optional<Word> name_q;
  std::vector<std::size_t> members;  // indices into the decomposition's towers
};

/// Groups towers by (height, P-name, Q-name), in that lexicographic order.
std::vector<Column> extract_columns(const TowerDecomposition& decomposition, WordView path_p,
                                    std::optional<WordView> path_q = std::nullopt);

}  // namespace ergolab
