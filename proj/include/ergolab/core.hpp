#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ergolab/error.hpp"

namespace ergolab {

using Symbol = std::uint8_t;
using Word = std::vector<Symbol>;
using WordView = std::span<const Symbol>;

inline constexpr std::size_t kMaxAlphabet = 256;

/// Number of symbols r; symbols are the integers [0, r).
class Alphabet {
 public:
  explicit Alphabet(std::size_t size);

  std::size_t size() const noexcept { return size_; }
  bool contains(std::size_t symbol) const noexcept { return symbol < size_; }
  void check(WordView w) const;

  friend bool operator==(const Alphabet&, const Alphabet&) = default;

 private:
  std::size_t size_;
};

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + compensation_; }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

double compensated_total(std::span<const double> xs) noexcept;

/// Distribution over N-blocks. Blocks are kept in lexicographic order.
class BlockDistribution {
 public:
  BlockDistribution(std::size_t block_length, std::size_t alphabet_size,
                    std::map<Word, double> weights);

  std::size_t block_length() const noexcept { return block_length_; }
  std::size_t alphabet_size() const noexcept { return alphabet_size_; }
  const std::map<Word, double>& weights() const noexcept { return weights_; }
  std::size_t support_size() const noexcept { return weights_.size(); }

  double weight(const Word& block) const;
  double total() const;

 private:
  std::size_t block_length_;
  std::size_t alphabet_size_;
  std::map<Word, double> weights_;
};

/// A finite measure space split into weighted atoms, each carrying a label.
/// Two labelings over the same atoms describe two partitions of one space.
struct LabeledAtom {
  double weight;
  std::size_t label;
};

class WeightedLabeling {
 public:
  explicit WeightedLabeling(std::vector<LabeledAtom> atoms);

  const std::vector<LabeledAtom>& atoms() const noexcept { return atoms_; }

  /// Uniform atoms of weight 1/labels.size().
  static WeightedLabeling uniform(std::span<const std::size_t> labels);

 private:
  std::vector<LabeledAtom> atoms_;
};

/// Sum over labels of mu(P_l symmetric-difference Q_l).
double rho_distance(const WeightedLabeling& p, const WeightedLabeling& q);

/// Overlapping-window block frequencies.
BlockDistribution empirical_block_distribution(WordView w, std::size_t block_length,
                                               std::size_t alphabet_size);

double l1_distance(const BlockDistribution& a, const BlockDistribution& b);

double hamming_fraction(WordView u, WordView v);

/// "0101" -> {0,1,0,1}. Digits and lowercase letters (a = 10) are accepted.
Word word_from_string(std::string_view text);
std::string word_to_string(WordView w);

}  // namespace ergolab
