#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ergolab/core.hpp"
#include "ergolab/entropy.hpp"
#include "ergolab/models.hpp"
#include "ergolab/towers.hpp"

namespace ergolab {

struct BudgetCoefficient {
  std::size_t M = 0;
  double C = 0.0;
};

/// C = ((h - h' + eps) log_k 2 + 4 eps) / (1 - (h' + eps) log_k 2) and
/// M = ceil(max(eps, C) n).
BudgetCoefficient compute_M(std::size_t n, double h, double h_prime, std::size_t k, double epsilon);

struct RecodingParams {
  double epsilon = 0.0;
  std::size_t m = 0;  // marker period ceil(1/eps)
  std::size_t k = 0;  // output alphabet
  std::size_t n = 0;  // column height
  double h = 0.0;
  double h_prime = 0.0;
  std::size_t M = 0;
  double C = 0.0;

  static RecodingParams make(std::size_t n, double h, double h_prime, std::size_t k, double epsilon);
  /// Checks m = ceil(1/eps), eps n <= M <= n, 2m + 1 < M and k >= 2.
  void validate() const;
  /// Largest number of positions one column may modify: M + ceil(n/m).
  std::size_t modification_bound() const { return M + (n + m - 1) / m; }

  bool operator==(const RecodingParams&) const = default;
};

/// Fixed-width base-k field length for values below `count`: ceil(log_k
/// max(count, 2)), at least 1.
std::size_t digits_for(std::size_t count, std::size_t k);

/// Everything the encoder and decoder of one column height share: the
/// prefix codebook and the ordered fibers A_n(u).
struct ColumnCodebook {
  RecodingParams params;
  std::vector<Word> prefixes;                // sorted, each of length M
  std::map<Word, std::vector<Word>> fibers;  // u -> sorted A_n(u)
  std::size_t index_capacity = 1;            // max |A_n(u)|

  std::size_t index_digits() const { return digits_for(index_capacity, params.k); }
  std::size_t prefix_digits() const { return digits_for(prefixes.size(), params.k); }
  std::optional<std::size_t> prefix_rank(WordView prefix) const;
  const std::vector<Word>* fiber(const Word& u) const;
  /// Throws codebook errors for inconsistent content.
  void validate() const;

  bool operator==(const ColumnCodebook&) const = default;
};

/// Codebooks keyed by column height; all share one epsilon.
using CodebookSet = std::map<std::size_t, ColumnCodebook>;

/// Codebook from a relative SMB set: fibers as given, prefixes = the sorted
/// distinct M-prefixes of the u's.
ColumnCodebook make_codebook(const RelativeSmbSet& set, const RecodingParams& params);

/// The members of A_n among observed (u, v) names, with s and t supplied.
/// Pairs outside A_n are returned in `atypical`.
struct ObservedSet {
  RelativeSmbSet set;
  std::vector<std::pair<Word, Word>> atypical;
};
ObservedSet observed_relative_set(const JointModel& model,
                                  const std::vector<std::pair<Word, Word>>& names, std::size_t n,
                                  double epsilon, double s, double t);

/// Codebooks for every tower height of a decomposition, built from the
/// columns the two paths actually show. Each height gets
/// RecodingParams::make(n, t, s, k, eps); columns outside A_n are listed in
/// `atypical` and left out of the books.
struct ObservedFamily {
  CodebookSet books;
  std::vector<std::pair<Word, Word>> atypical;
};
ObservedFamily observed_codebooks(const JointModel& model, WordView path_p, WordView path_q,
                                  const TowerDecomposition& decomposition, std::size_t k,
                                  double epsilon, double s, double t);

/// Position sets of the three stages.
struct ColumnLayout {
  std::vector<std::size_t> markers;          // stage 1
  std::vector<std::size_t> index_slots;      // stage 2
  std::vector<std::size_t> prefix_slots;     // stage 3a
  std::vector<std::size_t> literal_slots;    // stage 3b
  std::vector<std::size_t> literal_sources;  // markers >= M, in order
};

/// Whether the data slots fit below M, without building the layout.
bool layout_fits(const RecodingParams& params, std::size_t index_digits, std::size_t prefix_digits);
/// Throws budget-exceeded when the data slots do not fit below M.
ColumnLayout column_layout(const RecodingParams& params, std::size_t index_digits,
                           std::size_t prefix_digits);

struct RecodedColumn {
  Word output;
  std::vector<std::size_t> modified_positions;  // sorted
  ColumnLayout layout;
};

RecodedColumn recode_column(WordView u, std::size_t q_index, const ColumnCodebook& book);
/// Inverse of recode_column: returns (u, v).
std::pair<Word, Word> decode_column(WordView w, const ColumnCodebook& book);

struct PathRecoding {
  Word recoded;
  std::size_t modified = 0;
  double change_fraction = 0.0;  // modified positions / path length
  double hamming_fraction = 0.0;  // positions that actually changed
  double change_bound = 0.0;      // max C + 2 eps + leftover fraction
  std::size_t columns = 0;
};

/// Recodes every tower; leftover positions are copied.
PathRecoding recode_path(WordView path_p, WordView path_q, const TowerDecomposition& decomposition,
                         const CodebookSet& books);

struct DecodedColumn {
  std::size_t base = 0;
  std::size_t height = 0;
  Word u;
  Word v;
};

struct PathDecoding {
  std::vector<DecodedColumn> columns;
  std::size_t candidates = 0;  // positions matching the base pattern
  std::size_t rejected = 0;    // candidates that did not decode or were skipped
};

/// Finds bases from the 2m-run of 1's followed by 0 and decodes each
/// column; heights come from the gap to the next base when that gap has a
/// codebook, otherwise the largest fitting height that decodes.
PathDecoding decode_path(WordView recoded, const CodebookSet& books);

/// Smallest n from which the layout fits for every height up to `limit`,
/// using the counting-bound widths (h - h' + eps) n and (h' + eps) M bits.
/// Returns nullopt if some height near `limit` still fails.
std::optional<std::size_t> minimal_feasible_n(double epsilon, double h, double h_prime,
                                              std::size_t k, std::size_t limit = 1u << 16);

// Codebook interchange file ---------------------------------------------

inline constexpr std::uint32_t kCodebookFormatVersion = 1;

void write_codebooks(std::ostream& out, const CodebookSet& books);
CodebookSet read_codebooks(std::istream& in);
void save_codebooks(const std::string& path, const CodebookSet& books);
CodebookSet load_codebooks(const std::string& path);

// Distribution transplant -------------------------------------------------

/// Draws a Q-name v for a P-name u.
class ConditionalSource {
 public:
  virtual ~ConditionalSource() = default;
  /// nullopt when u is unsupported.
  virtual std::optional<Word> draw(const Word& u, std::uint64_t seed) const = 0;
  /// A supported name standing in for an unsupported u, if the source has one.
  virtual std::optional<Word> nearest(const Word&) const { return std::nullopt; }
};

/// v ~ mu(. | u) from a joint model.
class JointConditional final : public ConditionalSource {
 public:
  explicit JointConditional(JointModelPtr model) : model_(std::move(model)) {}
  std::optional<Word> draw(const Word& u, std::uint64_t seed) const override;

 private:
  JointModelPtr model_;
};

/// Returns u itself.
class IdentityConditional final : public ConditionalSource {
 public:
  std::optional<Word> draw(const Word& u, std::uint64_t) const override { return u; }
};

/// Explicit table u -> weighted v's.
class TableConditional final : public ConditionalSource {
 public:
  using Entry = std::vector<std::pair<Word, double>>;
  explicit TableConditional(std::map<Word, Entry> table);
  std::optional<Word> draw(const Word& u, std::uint64_t seed) const override;
  const std::map<Word, Entry>& table() const noexcept { return table_; }
  /// Supported name closest to u in Hamming distance (ties: lexicographic).
  std::optional<Word> nearest(const Word& u) const override;

 private:
  std::map<Word, Entry> table_;
};

struct TransplantParams {
  std::size_t N = 1;
  double delta = 0.0;
  std::size_t L = 1;
  double beta = 0.0;
  std::size_t M_joint = 0;

  /// delta in (0, eps/2) is checked by the caller that knows eps;
  /// here: N >= 1, L > 8 max(M_joint, N) / beta.
  void validate() const;
  /// 2 max(M_joint, N) / L: the top/bottom boundary share of a tower.
  double boundary_fraction() const;
};

struct TransplantResult {
  Word output;
  std::size_t fallbacks = 0;  // columns served by the nearest supported name
  std::size_t towers = 0;
};

/// Relabels each tower over path_y with a v drawn for its name; tower t
/// uses derive_seed(seed, t). Leftover positions are copied.
TransplantResult transplant_blocks(WordView path_y, const TowerDecomposition& decomposition,
                                   const ConditionalSource& conditional, std::uint64_t seed,
                                   bool allow_fallback = true);

}  // namespace ergolab
