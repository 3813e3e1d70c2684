#include "ergolab/core.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace ergolab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kDistinctSpace: return "distinct-space";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kIncompatibleDistribution: return "incompatible-distribution";
    case ErrorCode::kLengthMismatch: return "length-mismatch";
    case ErrorCode::kInvalidModel: return "invalid-model";
    case ErrorCode::kSymbolOutOfAlphabet: return "symbol-out-of-alphabet";
    case ErrorCode::kNullConditioning: return "null-conditioning";
    case ErrorCode::kCapacity: return "capacity";
    case ErrorCode::kImpossiblePath: return "impossible-path";
    case ErrorCode::kInternalConsistency: return "internal-consistency";
    case ErrorCode::kInfeasibleTower: return "infeasible-tower";
    case ErrorCode::kEpsilonTooLarge: return "epsilon-too-large";
    case ErrorCode::kBudgetExceeded: return "budget-exceeded";
    case ErrorCode::kCodebook: return "codebook";
    case ErrorCode::kDesync: return "desync";
    case ErrorCode::kCorruption: return "corruption";
    case ErrorCode::kAtypicalColumn: return "atypical-column";
    case ErrorCode::kUnsupportedName: return "unsupported-name";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

Alphabet::Alphabet(std::size_t size) : size_(size) {
  if (size == 0 || size > kMaxAlphabet) {
    throw Error(ErrorCode::kInvalidArgument,
                "alphabet size must be in [1, 256], got " + std::to_string(size));
  }
}

void Alphabet::check(WordView w) const {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] >= size_) {
      throw Error(ErrorCode::kSymbolOutOfAlphabet,
                  "symbol " + std::to_string(w[i]) + " at position " + std::to_string(i) +
                      " outside alphabet of size " + std::to_string(size_));
    }
  }
}

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::fabs(sum_) >= std::fabs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

double compensated_total(std::span<const double> xs) noexcept {
  CompensatedSum s;
  for (double x : xs) s += x;
  return s.value();
}

BlockDistribution::BlockDistribution(std::size_t block_length, std::size_t alphabet_size,
                                     std::map<Word, double> weights)
    : block_length_(block_length), alphabet_size_(alphabet_size), weights_(std::move(weights)) {
  const Alphabet alphabet(alphabet_size);
  CompensatedSum total;
  for (const auto& [block, w] : weights_) {
    if (block.size() != block_length_) {
      throw Error(ErrorCode::kIncompatibleDistribution, "block of wrong length in distribution");
    }
    alphabet.check(block);
    if (!(w >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative block weight");
    total += w;
  }
  if (!weights_.empty() && std::fabs(total.value() - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument,
                "block weights sum to " + std::to_string(total.value()) + ", expected 1");
  }
}

double BlockDistribution::weight(const Word& block) const {
  auto it = weights_.find(block);
  return it == weights_.end() ? 0.0 : it->second;
}

double BlockDistribution::total() const {
  CompensatedSum s;
  for (const auto& kv : weights_) s += kv.second;
  return s.value();
}

WeightedLabeling::WeightedLabeling(std::vector<LabeledAtom> atoms) : atoms_(std::move(atoms)) {
  CompensatedSum total;
  for (const auto& a : atoms_) {
    if (!(a.weight >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative atom weight");
    total += a.weight;
  }
  if (std::fabs(total.value() - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "atom weights must sum to 1");
  }
}

WeightedLabeling WeightedLabeling::uniform(std::span<const std::size_t> labels) {
  std::vector<LabeledAtom> atoms;
  atoms.reserve(labels.size());
  const double w = 1.0 / static_cast<double>(labels.size());
  for (auto l : labels) atoms.push_back({w, l});
  return WeightedLabeling(std::move(atoms));
}

double rho_distance(const WeightedLabeling& p, const WeightedLabeling& q) {
  const auto& a = p.atoms();
  const auto& b = q.atoms();
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDistinctSpace, "labelings have different atom counts");
  }
  CompensatedSum total;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].weight != b[i].weight) {
      throw Error(ErrorCode::kDistinctSpace,
                  "atom " + std::to_string(i) + " has different weights in the two labelings");
    }
    // A relabeled atom sits in P_{a} \ Q_{a} and in Q_{b} \ P_{b}.
    if (a[i].label != b[i].label) total += 2.0 * a[i].weight;
  }
  return total.value();
}

namespace {

bool fits_rolling_code(std::size_t block_length, std::size_t alphabet_size) {
  const double bits = static_cast<double>(block_length) * std::log2(static_cast<double>(alphabet_size));
  return bits <= 63.0;
}

Word decode_block(std::uint64_t code, std::size_t block_length, std::size_t r) {
  Word block(block_length);
  for (std::size_t i = block_length; i-- > 0;) {
    block[i] = static_cast<Symbol>(code % r);
    code /= r;
  }
  return block;
}

}  // namespace

BlockDistribution empirical_block_distribution(WordView w, std::size_t block_length,
                                               std::size_t alphabet_size) {
  if (block_length == 0) throw Error(ErrorCode::kInvalidArgument, "block length must be positive");
  if (w.size() < block_length) {
    throw Error(ErrorCode::kInsufficientData, "word of length " + std::to_string(w.size()) +
                                                  " has no window of length " +
                                                  std::to_string(block_length));
  }
  Alphabet(alphabet_size).check(w);
  const std::size_t windows = w.size() - block_length + 1;
  const double inv = 1.0 / static_cast<double>(windows);
  std::map<Word, double> weights;

  if (fits_rolling_code(block_length, alphabet_size)) {
    const std::uint64_t r = alphabet_size;
    std::uint64_t top = 1;
    for (std::size_t i = 1; i < block_length; ++i) top *= r;
    std::vector<std::uint64_t> codes;
    codes.reserve(windows);
    std::uint64_t code = 0;
    for (std::size_t i = 0; i < block_length; ++i) code = code * r + w[i];
    codes.push_back(code);
    for (std::size_t i = block_length; i < w.size(); ++i) {
      code = (code - w[i - block_length] * top) * r + w[i];
      codes.push_back(code);
    }
    std::sort(codes.begin(), codes.end());
    for (std::size_t i = 0; i < codes.size();) {
      std::size_t j = i;
      while (j < codes.size() && codes[j] == codes[i]) ++j;
      weights.emplace(decode_block(codes[i], block_length, alphabet_size),
                      static_cast<double>(j - i) * inv);
      i = j;
    }
  } else {
    std::map<Word, std::size_t> counts;
    for (std::size_t i = 0; i < windows; ++i) {
      ++counts[Word(w.begin() + static_cast<std::ptrdiff_t>(i),
                    w.begin() + static_cast<std::ptrdiff_t>(i + block_length))];
    }
    for (auto& [block, c] : counts) weights.emplace(block, static_cast<double>(c) * inv);
  }
  return BlockDistribution(block_length, alphabet_size, std::move(weights));
}

double l1_distance(const BlockDistribution& a, const BlockDistribution& b) {
  if (a.block_length() != b.block_length() || a.alphabet_size() != b.alphabet_size()) {
    throw Error(ErrorCode::kIncompatibleDistribution,
                "distributions differ in block length or alphabet");
  }
  CompensatedSum total;
  auto ia = a.weights().begin();
  auto ib = b.weights().begin();
  const auto ea = a.weights().end();
  const auto eb = b.weights().end();
  while (ia != ea || ib != eb) {
    if (ib == eb || (ia != ea && ia->first < ib->first)) {
      total += std::fabs(ia->second);
      ++ia;
    } else if (ia == ea || ib->first < ia->first) {
      total += std::fabs(ib->second);
      ++ib;
    } else {
      total += std::fabs(ia->second - ib->second);
      ++ia;
      ++ib;
    }
  }
  return total.value();
}

double hamming_fraction(WordView u, WordView v) {
  if (u.size() != v.size()) throw Error(ErrorCode::kLengthMismatch, "words differ in length");
  if (u.empty()) throw Error(ErrorCode::kInvalidArgument, "hamming fraction of empty words");
  std::size_t diff = 0;
  for (std::size_t i = 0; i < u.size(); ++i) diff += (u[i] != v[i]);
  return static_cast<double>(diff) / static_cast<double>(u.size());
}

Word word_from_string(std::string_view text) {
  Word w;
  w.reserve(text.size());
  for (char c : text) {
    if (c >= '0' && c <= '9') {
      w.push_back(static_cast<Symbol>(c - '0'));
    } else if (c >= 'a' && c <= 'z') {
      w.push_back(static_cast<Symbol>(10 + c - 'a'));
    } else {
      throw Error(ErrorCode::kInvalidArgument, std::string("bad symbol character '") + c + "'");
    }
  }
  return w;
}

std::string word_to_string(WordView w) {
  std::string s;
  s.reserve(w.size());
  for (Symbol x : w) {
    if (x < 10) {
      s.push_back(static_cast<char>('0' + x));
    } else if (x < 36) {
      s.push_back(static_cast<char>('a' + x - 10));
    } else {
      s += "[" + std::to_string(x) + "]";
    }
  }
  return s;
}

}  // namespace ergolab
