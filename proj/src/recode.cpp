#include "ergolab/recode.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "ergolab/rng.hpp"

namespace ergolab {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

std::size_t marker_period(double epsilon) {
  return static_cast<std::size_t>(std::ceil(1.0 / epsilon));
}

void write_digits(Word& out, const std::vector<std::size_t>& slots, std::uint64_t value,
                  std::size_t k) {
  for (std::size_t d = slots.size(); d-- > 0;) {
    out[slots[d]] = static_cast<Symbol>(value % k);
    value /= k;
  }
}

std::uint64_t read_digits(WordView w, const std::vector<std::size_t>& slots, std::size_t k) {
  std::uint64_t value = 0;
  for (std::size_t slot : slots) {
    if (w[slot] >= k) throw Error(ErrorCode::kCorruption, "digit outside the output alphabet");
    value = value * k + w[slot];
  }
  return value;
}

/// Number of data slots (positions > 2m, not multiples of m) below M, and
/// the number of markers at or above M.
std::pair<std::size_t, std::size_t> slot_counts(const RecodingParams& p) {
  const std::size_t m = p.m;
  std::size_t below = 0;
  if (p.M > 2 * m + 1) {
    const std::size_t span = p.M - 2 * m - 1;  // positions 2m+1 .. M-1
    const std::size_t multiples = (p.M - 1) / m >= 3 ? (p.M - 1) / m - 2 : 0;
    below = span - multiples;
  }
  const std::size_t last = p.n == 0 ? 0 : (p.n - 1) / m;
  const std::size_t first = std::max<std::size_t>(2, ceil_div(p.M, m));
  const std::size_t literals = last >= first ? last - first + 1 : 0;
  return {below, literals};
}

// log2 mu(w), -inf when the cylinder is empty.
double log2_measure(const ProcessModel& model, WordView w) {
  for (Symbol a : w)
    if (a >= model.alphabet_size()) return -std::numeric_limits<double>::infinity();
  auto cursor = model.cursor();
  CompensatedSum total;
  for (Symbol a : w) {
    const double ratio = cursor->extend(a);
    if (!(ratio > 0.0)) return -std::numeric_limits<double>::infinity();
    total += std::log2(ratio);
  }
  return total.value();
}

std::string describe(WordView w) {
  std::string s = word_to_string(w);
  if (s.size() > 48) s = s.substr(0, 45) + "...";
  return s;
}

}  // namespace

BudgetCoefficient compute_M(std::size_t n, double h, double h_prime, std::size_t k,
                            double epsilon) {
  if (k < 2 || k > kMaxAlphabet) throw Error(ErrorCode::kInvalidArgument, "k must be in [2, 256]");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must lie in (0, 1)");
  }
  const double log_k = std::log2(static_cast<double>(k));
  if (!(h_prime >= 0.0 && h >= h_prime && log_k > h)) {
    throw Error(ErrorCode::kInvalidArgument, "need log2 k > h >= h' >= 0");
  }
  const double inv = 1.0 / log_k;  // log_k 2
  const double denominator = 1.0 - (h_prime + epsilon) * inv;
  if (!(denominator > 0.0)) {
    throw Error(ErrorCode::kEpsilonTooLarge, "(h' + eps) log_k 2 >= 1");
  }
  const double C = ((h - h_prime + epsilon) * inv + 4.0 * epsilon) / denominator;
  if (!(C < 1.0)) {
    throw Error(ErrorCode::kEpsilonTooLarge, "C(eps) = " + std::to_string(C) + " >= 1");
  }
  BudgetCoefficient out;
  out.C = C;
  out.M = static_cast<std::size_t>(std::ceil(std::max(epsilon, C) * static_cast<double>(n)));
  out.M = std::min(out.M, n);
  return out;
}

RecodingParams RecodingParams::make(std::size_t n, double h, double h_prime, std::size_t k,
                                    double epsilon) {
  const auto budget = compute_M(n, h, h_prime, k, epsilon);
  RecodingParams p;
  p.epsilon = epsilon;
  p.m = marker_period(epsilon);
  p.k = k;
  p.n = n;
  p.h = h;
  p.h_prime = h_prime;
  p.M = budget.M;
  p.C = budget.C;
  p.validate();
  return p;
}

void RecodingParams::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must lie in (0, 1)");
  }
  if (m != marker_period(epsilon)) throw Error(ErrorCode::kInvalidArgument, "m != ceil(1/eps)");
  if (k < 2 || k > kMaxAlphabet) throw Error(ErrorCode::kInvalidArgument, "k must be in [2, 256]");
  if (!(C >= 0.0 && C < 1.0)) throw Error(ErrorCode::kInvalidArgument, "C must lie in [0, 1)");
  if (M > n || static_cast<double>(M) < epsilon * static_cast<double>(n) - 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "need eps n <= M <= n");
  }
  if (!(2 * m + 1 < M)) {
    throw Error(ErrorCode::kBudgetExceeded, "height " + std::to_string(n) + ": M = " +
                                                std::to_string(M) + " leaves no room above 2m + 1 = " +
                                                std::to_string(2 * m + 1));
  }
}

std::size_t digits_for(std::size_t count, std::size_t k) {
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "k must be at least 2");
  const std::size_t target = std::max<std::size_t>(count, 2);
  std::size_t digits = 1;
  for (std::size_t reach = k; reach < target; ++digits) {
    if (reach > std::numeric_limits<std::size_t>::max() / k) return digits + 1;
    reach *= k;
  }
  return digits;
}

std::optional<std::size_t> ColumnCodebook::prefix_rank(WordView prefix) const {
  auto it = std::lower_bound(prefixes.begin(), prefixes.end(), prefix,
                             [](const Word& a, WordView b) {
                               return std::lexicographical_compare(a.begin(), a.end(), b.begin(),
                                                                   b.end());
                             });
  if (it == prefixes.end() || !std::equal(it->begin(), it->end(), prefix.begin(), prefix.end())) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(it - prefixes.begin());
}

const std::vector<Word>* ColumnCodebook::fiber(const Word& u) const {
  auto it = fibers.find(u);
  return it == fibers.end() ? nullptr : &it->second;
}

void ColumnCodebook::validate() const {
  params.validate();
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kCodebook, what); };
  for (std::size_t i = 0; i < prefixes.size(); ++i) {
    if (prefixes[i].size() != params.M) fail("prefix length differs from M");
    if (i > 0 && !(prefixes[i - 1] < prefixes[i])) fail("prefixes not strictly sorted");
  }
  std::size_t widest = 0;
  for (const auto& [u, vs] : fibers) {
    if (u.size() != params.n) fail("fiber key length differs from n");
    for (Symbol a : u)
      if (a >= params.k) fail("fiber key outside the output alphabet");
    if (vs.empty()) fail("empty fiber");
    for (std::size_t i = 0; i < vs.size(); ++i) {
      if (vs[i].size() != params.n) fail("fiber entry length differs from n");
      if (i > 0 && !(vs[i - 1] < vs[i])) fail("fiber not strictly sorted");
    }
    if (!prefix_rank(WordView(u).first(params.M))) fail("fiber key prefix missing from codebook");
    widest = std::max(widest, vs.size());
  }
  if (widest > index_capacity) fail("index capacity below the widest fiber");
}

ColumnCodebook make_codebook(const RelativeSmbSet& set, const RecodingParams& params) {
  if (set.n != params.n) throw Error(ErrorCode::kCodebook, "set height differs from params");
  ColumnCodebook book;
  book.params = params;
  book.fibers = set.fibers;
  std::set<Word> prefixes;
  for (const auto& [u, vs] : set.fibers) {
    prefixes.emplace(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(params.M));
    book.index_capacity = std::max(book.index_capacity, vs.size());
  }
  book.prefixes.assign(prefixes.begin(), prefixes.end());
  book.validate();
  return book;
}

ObservedSet observed_relative_set(const JointModel& model,
                                  const std::vector<std::pair<Word, Word>>& names, std::size_t n,
                                  double epsilon, double s, double t) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  if (s > t + 1e-9) {
    throw Error(ErrorCode::kInternalConsistency, "P entropy exceeds joint entropy");
  }
  ObservedSet out;
  out.set.n = n;
  out.set.epsilon = epsilon;
  out.set.s = s;
  out.set.t = t;
  const double nn = static_cast<double>(n);
  const double u_floor = -(s + epsilon) * nn;
  const double v_floor = -(t - s + epsilon) * nn;
  std::set<std::pair<Word, Word>> distinct(names.begin(), names.end());
  std::map<Word, double> u_log;
  CompensatedSum coverage;
  for (const auto& [u, v] : distinct) {
    if (u.size() != n || v.size() != n) {
      throw Error(ErrorCode::kLengthMismatch, "observed name length differs from n");
    }
    auto it = u_log.find(u);
    if (it == u_log.end()) it = u_log.emplace(u, log2_measure(model.p_process(), u)).first;
    const double log_u = it->second;
    bool typical = log_u > u_floor;
    if (typical) {
      bool in_range = true;
      for (Symbol b : v) in_range = in_range && b < model.alphabet_q();
      const double log_uv =
          in_range ? log2_measure(model.pair_process(), model.combine(u, v))
                   : -std::numeric_limits<double>::infinity();
      typical = log_uv - log_u > v_floor;
      if (typical) coverage += std::exp2(log_uv);
    }
    if (typical) {
      out.set.fibers[u].push_back(v);
    } else {
      out.atypical.emplace_back(u, v);
    }
  }
  out.set.coverage = coverage.value();
  if (!out.set.satisfies_counting_bounds()) {
    throw Error(ErrorCode::kInternalConsistency, "observed set violates a counting bound");
  }
  return out;
}

ObservedFamily observed_codebooks(const JointModel& model, WordView path_p, WordView path_q,
                                  const TowerDecomposition& decomposition, std::size_t k,
                                  double epsilon, double s, double t) {
  if (path_p.size() != decomposition.path_length || path_q.size() != decomposition.path_length) {
    throw Error(ErrorCode::kLengthMismatch, "paths and decomposition differ in length");
  }
  std::map<std::size_t, std::vector<std::pair<Word, Word>>> names;
  for (const auto& column : extract_columns(decomposition, path_p, path_q)) {
    names[column.height].emplace_back(column.name_p, *column.name_q);
  }
  ObservedFamily out;
  for (auto& [height, list] : names) {
    const auto params = RecodingParams::make(height, t, s, k, epsilon);
    auto observed = observed_relative_set(model, list, height, epsilon, s, t);
    out.atypical.insert(out.atypical.end(), observed.atypical.begin(), observed.atypical.end());
    if (!observed.set.fibers.empty()) out.books.emplace(height, make_codebook(observed.set, params));
  }
  return out;
}

bool layout_fits(const RecodingParams& params, std::size_t index_digits,
                 std::size_t prefix_digits) {
  if (!(2 * params.m + 1 < params.M)) return false;
  const auto [below, literals] = slot_counts(params);
  return index_digits + prefix_digits + literals <= below;
}

ColumnLayout column_layout(const RecodingParams& params, std::size_t index_digits,
                           std::size_t prefix_digits) {
  params.validate();
  const std::size_t n = params.n;
  const std::size_t m = params.m;
  ColumnLayout layout;
  for (std::size_t i = 0; i < 2 * m && i < n; ++i) layout.markers.push_back(i);
  for (std::size_t j = 2; j * m < n; ++j) {
    layout.markers.push_back(j * m);
    if (j * m >= params.M) layout.literal_sources.push_back(j * m);
  }
  const std::size_t needed = index_digits + prefix_digits + layout.literal_sources.size();
  std::vector<std::size_t> slots;
  for (std::size_t p = 2 * m + 1; p < params.M && slots.size() < needed; ++p) {
    if (p % m != 0) slots.push_back(p);
  }
  if (slots.size() < needed) {
    throw Error(ErrorCode::kBudgetExceeded,
                "height " + std::to_string(n) + ": " + std::to_string(needed) +
                    " data digits do not fit below M = " + std::to_string(params.M));
  }
  auto take = [&](std::size_t from, std::size_t count) {
    return std::vector<std::size_t>(slots.begin() + static_cast<std::ptrdiff_t>(from),
                                    slots.begin() + static_cast<std::ptrdiff_t>(from + count));
  };
  layout.index_slots = take(0, index_digits);
  layout.prefix_slots = take(index_digits, prefix_digits);
  layout.literal_slots = take(index_digits + prefix_digits, layout.literal_sources.size());
  return layout;
}

RecodedColumn recode_column(WordView u, std::size_t q_index, const ColumnCodebook& book) {
  const auto& p = book.params;
  if (u.size() != p.n) throw Error(ErrorCode::kLengthMismatch, "column height differs from n");
  Alphabet(p.k).check(u);
  const Word key(u.begin(), u.end());
  const auto* fiber = book.fiber(key);
  if (!fiber) throw Error(ErrorCode::kAtypicalColumn, "name " + describe(u) + " has no fiber");
  if (q_index >= fiber->size()) {
    throw Error(ErrorCode::kInvalidArgument, "index " + std::to_string(q_index) +
                                                 " outside a fiber of size " +
                                                 std::to_string(fiber->size()));
  }
  const auto rank = book.prefix_rank(u.first(p.M));
  if (!rank) throw Error(ErrorCode::kCodebook, "M-prefix of " + describe(u) + " not in codebook");

  RecodedColumn out;
  out.layout = column_layout(p, book.index_digits(), book.prefix_digits());
  const auto& layout = out.layout;
  out.output = key;
  for (std::size_t i : layout.markers) out.output[i] = i < 2 * p.m ? 1 : 0;
  write_digits(out.output, layout.index_slots, q_index, p.k);
  write_digits(out.output, layout.prefix_slots, *rank, p.k);
  for (std::size_t j = 0; j < layout.literal_slots.size(); ++j) {
    out.output[layout.literal_slots[j]] = u[layout.literal_sources[j]];
  }
  auto& mod = out.modified_positions;
  for (const auto* part : {&layout.markers, &layout.index_slots, &layout.prefix_slots,
                           &layout.literal_slots}) {
    mod.insert(mod.end(), part->begin(), part->end());
  }
  std::sort(mod.begin(), mod.end());
  return out;
}

std::pair<Word, Word> decode_column(WordView w, const ColumnCodebook& book) {
  const auto& p = book.params;
  if (w.size() != p.n) throw Error(ErrorCode::kLengthMismatch, "column height differs from n");
  const auto layout = column_layout(p, book.index_digits(), book.prefix_digits());
  for (std::size_t i : layout.markers) {
    const Symbol expected = i < 2 * p.m ? 1 : 0;
    if (w[i] != expected) {
      throw Error(ErrorCode::kDesync, "marker at level " + std::to_string(i) + " reads " +
                                          std::to_string(w[i]));
    }
  }
  const std::uint64_t index = read_digits(w, layout.index_slots, p.k);
  const std::uint64_t rank = read_digits(w, layout.prefix_slots, p.k);
  if (rank >= book.prefixes.size()) {
    throw Error(ErrorCode::kCorruption, "prefix rank " + std::to_string(rank) + " outside codebook");
  }
  Word u(w.begin(), w.end());
  std::copy(book.prefixes[rank].begin(), book.prefixes[rank].end(), u.begin());
  for (std::size_t j = 0; j < layout.literal_slots.size(); ++j) {
    u[layout.literal_sources[j]] = w[layout.literal_slots[j]];
  }
  const auto* fiber = book.fiber(u);
  if (!fiber) throw Error(ErrorCode::kCorruption, "decoded name " + describe(u) + " has no fiber");
  if (index >= fiber->size()) {
    throw Error(ErrorCode::kCorruption, "index " + std::to_string(index) + " outside fiber");
  }
  return {std::move(u), (*fiber)[index]};
}

namespace {

double shared_epsilon(const CodebookSet& books) {
  double eps = 0.0;
  for (const auto& [h, book] : books) {
    if (h != book.params.n) throw Error(ErrorCode::kCodebook, "codebook keyed by the wrong height");
    if (eps == 0.0) eps = book.params.epsilon;
    if (book.params.epsilon != eps) {
      throw Error(ErrorCode::kCodebook, "codebooks disagree on epsilon");
    }
  }
  return eps;
}

}  // namespace

PathRecoding recode_path(WordView path_p, WordView path_q, const TowerDecomposition& decomposition,
                         const CodebookSet& books) {
  if (path_p.size() != path_q.size() || path_p.size() != decomposition.path_length) {
    throw Error(ErrorCode::kLengthMismatch, "paths and decomposition differ in length");
  }
  const double eps = shared_epsilon(books);
  PathRecoding out;
  out.recoded.assign(path_p.begin(), path_p.end());
  double worst_C = 0.0;
  for (const auto& tower : decomposition.towers) {
    auto it = books.find(tower.height);
    if (it == books.end()) {
      throw Error(ErrorCode::kAtypicalColumn, "no codebook for height " +
                                                  std::to_string(tower.height) + " (tower at " +
                                                  std::to_string(tower.base) + ")");
    }
    const auto& book = it->second;
    const auto b = static_cast<std::ptrdiff_t>(tower.base);
    const auto e = static_cast<std::ptrdiff_t>(tower.base + tower.height);
    const Word u(path_p.begin() + b, path_p.begin() + e);
    const Word v(path_q.begin() + b, path_q.begin() + e);
    const auto* fiber = book.fiber(u);
    auto pos = fiber ? std::lower_bound(fiber->begin(), fiber->end(), v) : decltype(fiber->begin()){};
    if (!fiber || pos == fiber->end() || *pos != v) {
      throw Error(ErrorCode::kAtypicalColumn, "column at " + std::to_string(tower.base) +
                                                  " with names (" + describe(u) + ", " +
                                                  describe(v) + ") is outside A_n");
    }
    const auto column = recode_column(u, static_cast<std::size_t>(pos - fiber->begin()), book);
    if (column.modified_positions.size() > book.params.modification_bound()) {
      throw Error(ErrorCode::kInternalConsistency, "column modified more than M + n/m levels");
    }
    std::copy(column.output.begin(), column.output.end(), out.recoded.begin() + b);
    out.modified += column.modified_positions.size();
    worst_C = std::max(worst_C, book.params.C);
    ++out.columns;
  }
  const double len = path_p.empty() ? 1.0 : static_cast<double>(path_p.size());
  out.change_fraction = static_cast<double>(out.modified) / len;
  std::size_t differ = 0;
  for (std::size_t i = 0; i < path_p.size(); ++i) differ += out.recoded[i] != path_p[i];
  out.hamming_fraction = static_cast<double>(differ) / len;
  out.change_bound = (out.columns ? worst_C + 2.0 * eps : 0.0) + decomposition.leftover_fraction();
  return out;
}

PathDecoding decode_path(WordView recoded, const CodebookSet& books) {
  if (books.empty()) throw Error(ErrorCode::kInvalidArgument, "no codebooks");
  shared_epsilon(books);
  const std::size_t m = books.begin()->second.params.m;
  const std::size_t n = recoded.size();
  // ones[i] = length of the run of 1's starting at i.
  std::vector<std::size_t> ones(n + 1, 0);
  for (std::size_t i = n; i-- > 0;) ones[i] = recoded[i] == 1 ? ones[i + 1] + 1 : 0;
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i + 2 * m < n; ++i)
    if (ones[i] == 2 * m) candidates.push_back(i);

  PathDecoding out;
  out.candidates = candidates.size();
  std::size_t next_free = 0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const std::size_t base = candidates[c];
    if (base < next_free) {
      ++out.rejected;
      continue;
    }
    std::vector<std::size_t> heights;
    for (std::size_t d = c + 1; d < candidates.size(); ++d) {
      const std::size_t gap = candidates[d] - base;
      if (gap > books.rbegin()->first) break;
      if (books.count(gap)) heights.push_back(gap);
    }
    for (auto it = books.rbegin(); it != books.rend(); ++it) {
      if (base + it->first <= n && std::find(heights.begin(), heights.end(), it->first) == heights.end()) {
        heights.push_back(it->first);
      }
    }
    bool decoded = false;
    for (std::size_t h : heights) {
      try {
        auto [u, v] = decode_column(recoded.subspan(base, h), books.at(h));
        out.columns.push_back({base, h, std::move(u), std::move(v)});
        next_free = base + h;
        decoded = true;
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDesync && e.code() != ErrorCode::kCorruption) throw;
      }
    }
    if (!decoded) ++out.rejected;
  }
  return out;
}

std::optional<std::size_t> minimal_feasible_n(double epsilon, double h, double h_prime,
                                              std::size_t k, std::size_t limit) {
  compute_M(1, h, h_prime, k, epsilon);  // validates, may throw epsilon-too-large
  const double log_k = std::log2(static_cast<double>(k));
  auto width = [&](double bits) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(bits / log_k - 1e-12)));
  };
  std::size_t last_failure = 0;
  for (std::size_t n = 1; n <= limit; ++n) {
    RecodingParams p;
    p.epsilon = epsilon;
    p.m = marker_period(epsilon);
    p.k = k;
    p.n = n;
    p.h = h;
    p.h_prime = h_prime;
    const auto budget = compute_M(n, h, h_prime, k, epsilon);
    p.M = budget.M;
    p.C = budget.C;
    const std::size_t index = width((h - h_prime + epsilon) * static_cast<double>(n));
    const std::size_t prefix = width((h_prime + epsilon) * static_cast<double>(p.M));
    if (!layout_fits(p, index, prefix)) last_failure = n;
  }
  if (last_failure + 1 > limit / 2) return std::nullopt;
  return last_failure + 1;
}

// ---------------------------------------------------------------------------
// Codebook interchange file
//
// Little-endian binary:
//   "ERGOLABC" u32 version u32 count
//   per codebook, by increasing height:
//     u64 n, u32 k, u64 m, u64 M, f64 epsilon, f64 h, f64 h_prime, f64 C,
//     u64 index_capacity,
//     u64 #prefixes, then the prefixes (M bytes each),
//     u64 #fibers, then per fiber: u (n bytes), u64 #v, the v's (n bytes each)

namespace {

constexpr char kMagic[8] = {'E', 'R', 'G', 'O', 'L', 'A', 'B', 'C'};

void put_u64(std::ostream& out, std::uint64_t x) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((x >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

void put_u32(std::ostream& out, std::uint32_t x) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((x >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

void put_f64(std::ostream& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

void put_word(std::ostream& out, const Word& w) {
  out.write(reinterpret_cast<const char*>(w.data()), static_cast<std::streamsize>(w.size()));
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(char* dst, std::size_t count) {
    in_.read(dst, static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in_.gcount()) != count) {
      throw Error(ErrorCode::kCodebook, "codebook file truncated");
    }
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(reinterpret_cast<char*>(b), 8);
    std::uint64_t x = 0;
    for (int i = 7; i >= 0; --i) x = (x << 8) | b[i];
    return x;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4);
    std::uint32_t x = 0;
    for (int i = 3; i >= 0; --i) x = (x << 8) | b[i];
    return x;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  Word word(std::size_t n) {
    Word w(n);
    bytes(reinterpret_cast<char*>(w.data()), n);
    return w;
  }
  std::size_t count(std::uint64_t limit) {
    const std::uint64_t x = u64();
    if (x > limit) throw Error(ErrorCode::kCodebook, "implausible count in codebook file");
    return static_cast<std::size_t>(x);
  }

 private:
  std::istream& in_;
};

}  // namespace

void write_codebooks(std::ostream& out, const CodebookSet& books) {
  out.write(kMagic, sizeof kMagic);
  put_u32(out, kCodebookFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(books.size()));
  for (const auto& [height, book] : books) {
    const auto& p = book.params;
    put_u64(out, p.n);
    put_u32(out, static_cast<std::uint32_t>(p.k));
    put_u64(out, p.m);
    put_u64(out, p.M);
    put_f64(out, p.epsilon);
    put_f64(out, p.h);
    put_f64(out, p.h_prime);
    put_f64(out, p.C);
    put_u64(out, book.index_capacity);
    put_u64(out, book.prefixes.size());
    for (const auto& w : book.prefixes) put_word(out, w);
    put_u64(out, book.fibers.size());
    for (const auto& [u, vs] : book.fibers) {
      put_word(out, u);
      put_u64(out, vs.size());
      for (const auto& v : vs) put_word(out, v);
    }
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing codebooks");
}

CodebookSet read_codebooks(std::istream& in) {
  Reader r(in);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) throw Error(ErrorCode::kCodebook, "not a codebook file");
  const std::uint32_t version = r.u32();
  if (version != kCodebookFormatVersion) {
    throw Error(ErrorCode::kCodebook, "unsupported codebook version " + std::to_string(version));
  }
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 32;
  const std::uint32_t count = r.u32();
  CodebookSet books;
  for (std::uint32_t c = 0; c < count; ++c) {
    ColumnCodebook book;
    auto& p = book.params;
    p.n = r.count(kLimit);
    p.k = r.u32();
    p.m = r.count(kLimit);
    p.M = r.count(kLimit);
    p.epsilon = r.f64();
    p.h = r.f64();
    p.h_prime = r.f64();
    p.C = r.f64();
    book.index_capacity = r.count(kLimit);
    const std::size_t prefixes = r.count(kLimit);
    book.prefixes.reserve(prefixes);
    for (std::size_t i = 0; i < prefixes; ++i) book.prefixes.push_back(r.word(p.M));
    const std::size_t fibers = r.count(kLimit);
    for (std::size_t f = 0; f < fibers; ++f) {
      Word u = r.word(p.n);
      const std::size_t size = r.count(kLimit);
      std::vector<Word> vs;
      vs.reserve(size);
      for (std::size_t i = 0; i < size; ++i) vs.push_back(r.word(p.n));
      book.fibers.emplace(std::move(u), std::move(vs));
    }
    book.validate();
    if (!books.emplace(p.n, std::move(book)).second) {
      throw Error(ErrorCode::kCodebook, "duplicate height in codebook file");
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::kCodebook, "trailing bytes after codebooks");
  }
  return books;
}

void save_codebooks(const std::string& path, const CodebookSet& books) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  write_codebooks(out, books);
}

CodebookSet load_codebooks(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  return read_codebooks(in);
}

// ---------------------------------------------------------------------------
// Transplant

std::optional<Word> JointConditional::draw(const Word& u, std::uint64_t seed) const {
  if (u.size() == 0) return Word{};
  if (log2_measure(model_->p_process(), u) == -std::numeric_limits<double>::infinity()) {
    return std::nullopt;
  }
  return model_->sample_conditional_q(u, seed);
}

TableConditional::TableConditional(std::map<Word, Entry> table) : table_(std::move(table)) {
  for (const auto& [u, entry] : table_) {
    if (entry.empty()) throw Error(ErrorCode::kInvalidArgument, "empty conditional entry");
    CompensatedSum total;
    for (const auto& [v, w] : entry) {
      if (v.size() != u.size()) throw Error(ErrorCode::kLengthMismatch, "v length differs from u");
      if (!(w >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative conditional weight");
      total += w;
    }
    if (!(total.value() > 0.0)) throw Error(ErrorCode::kInvalidArgument, "zero conditional mass");
  }
}

std::optional<Word> TableConditional::draw(const Word& u, std::uint64_t seed) const {
  auto it = table_.find(u);
  if (it == table_.end()) return std::nullopt;
  const auto& entry = it->second;
  CompensatedSum total;
  for (const auto& [v, w] : entry) total += w;
  const double target = Rng(seed).uniform() * total.value();
  CompensatedSum running;
  for (const auto& [v, w] : entry) {
    running += w;
    if (target < running.value()) return v;
  }
  return entry.back().first;
}

std::optional<Word> TableConditional::nearest(const Word& u) const {
  std::optional<Word> best;
  std::size_t best_distance = 0;
  for (const auto& [key, entry] : table_) {
    if (key.size() != u.size()) continue;
    std::size_t d = 0;
    for (std::size_t i = 0; i < u.size(); ++i) d += key[i] != u[i];
    if (!best || d < best_distance) {
      best = key;
      best_distance = d;
    }
  }
  return best;
}

void TransplantParams::validate() const {
  if (N == 0) throw Error(ErrorCode::kValidation, "N must be positive");
  if (!(delta > 0.0)) throw Error(ErrorCode::kValidation, "delta must be positive");
  if (!(beta > 0.0)) throw Error(ErrorCode::kValidation, "beta must be positive");
  if (!(static_cast<double>(L) > 8.0 * static_cast<double>(std::max(M_joint, N)) / beta)) {
    throw Error(ErrorCode::kValidation, "need L > 8 max(M, N) / beta");
  }
}

double TransplantParams::boundary_fraction() const {
  return 2.0 * static_cast<double>(std::max(M_joint, N)) / static_cast<double>(L);
}

TransplantResult transplant_blocks(WordView path_y, const TowerDecomposition& decomposition,
                                   const ConditionalSource& conditional, std::uint64_t seed,
                                   bool allow_fallback) {
  if (path_y.size() != decomposition.path_length) {
    throw Error(ErrorCode::kLengthMismatch, "path and decomposition differ in length");
  }
  TransplantResult out;
  out.output.assign(path_y.begin(), path_y.end());
  for (std::size_t t = 0; t < decomposition.towers.size(); ++t) {
    const auto& tower = decomposition.towers[t];
    const auto b = static_cast<std::ptrdiff_t>(tower.base);
    const Word u(path_y.begin() + b, path_y.begin() + b + static_cast<std::ptrdiff_t>(tower.height));
    const std::uint64_t tower_seed = derive_seed(seed, t);
    auto v = conditional.draw(u, tower_seed);
    if (!v) {
      std::optional<Word> stand_in = allow_fallback ? conditional.nearest(u) : std::nullopt;
      if (stand_in) v = conditional.draw(*stand_in, tower_seed);
      if (!v) {
        throw Error(ErrorCode::kUnsupportedName, "no conditional for name " + describe(u) +
                                                     " (tower at " + std::to_string(tower.base) +
                                                     ")");
      }
      ++out.fallbacks;
    }
    if (v->size() != tower.height) {
      throw Error(ErrorCode::kLengthMismatch, "conditional returned a name of the wrong length");
    }
    std::copy(v->begin(), v->end(), out.output.begin() + b);
    ++out.towers;
  }
  return out;
}

}  // namespace ergolab
