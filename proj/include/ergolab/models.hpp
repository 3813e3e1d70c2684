#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ergolab/core.hpp"
#include "ergolab/fixed_point.hpp"

namespace ergolab {

/// Default enumeration guard for exact block distributions (r^n <= 2^22).
inline constexpr std::size_t kBlockCapacity = std::size_t{1} << 22;
/// Guard for joint (u,v) enumerations.
inline constexpr std::size_t kJointCapacity = std::size_t{1} << 24;

/// Tracks the cylinder of a growing word. `extend(a)` appends `a` and
/// returns mu(u a) / mu(u), with mu(empty word) = 1.
class CylinderCursor {
 public:
  virtual ~CylinderCursor() = default;
  virtual double extend(Symbol a) = 0;
  virtual std::unique_ptr<CylinderCursor> clone() const = 0;
};

/// Receives (block, mu(block)) for each positive-measure block, in
/// lexicographic order.
using BlockVisitor = std::function<void(WordView, double)>;

/// A stationary ergodic process with a seeded sampler and an exact
/// cylinder-measure evaluator. Implementations are immutable.
class ProcessModel {
 public:
  virtual ~ProcessModel() = default;

  virtual std::string_view kind() const = 0;
  virtual std::size_t alphabet_size() const = 0;
  /// Deterministic in (n, seed).
  virtual Word sample(std::size_t n, std::uint64_t seed) const = 0;
  virtual std::unique_ptr<CylinderCursor> cursor() const = 0;
  virtual std::optional<double> exact_entropy_rate() const = 0;

  /// Upper bound on the number of n-blocks an exact enumeration visits.
  virtual std::size_t enumeration_size(std::size_t n) const;
  /// Exact distribution of the positive-measure n-blocks.
  virtual BlockDistribution block_distribution(std::size_t n,
                                               std::size_t capacity = kBlockCapacity) const;
  /// Streams the same blocks without materializing the distribution.
  virtual void visit_blocks(std::size_t n, std::size_t capacity, const BlockVisitor& visit) const;

  double cylinder_measure(WordView u) const;

 protected:
  void enumerate_blocks(std::size_t n, const BlockVisitor& visit) const;
};

using ModelPtr = std::shared_ptr<const ProcessModel>;

/// Row-stochastic, irreducible, aperiodic transition matrix with its
/// stationary vector.
class MarkovChain {
 public:
  explicit MarkovChain(std::vector<std::vector<double>> transition);

  std::size_t states() const noexcept { return transition_.size(); }
  const std::vector<std::vector<double>>& transition() const noexcept { return transition_; }
  const std::vector<double>& stationary() const noexcept { return stationary_; }

  std::vector<std::size_t> sample_states(std::size_t n, std::uint64_t seed) const;

 private:
  std::vector<std::vector<double>> transition_;
  std::vector<double> stationary_;
  std::vector<std::vector<double>> cumulative_;
};

class IidModel final : public ProcessModel {
 public:
  explicit IidModel(std::vector<double> weights);

  std::string_view kind() const override { return "iid"; }
  std::size_t alphabet_size() const override { return weights_.size(); }
  Word sample(std::size_t n, std::uint64_t seed) const override;
  std::unique_ptr<CylinderCursor> cursor() const override;
  std::optional<double> exact_entropy_rate() const override;

  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

/// A Markov chain observed through a labeling of its states. With an
/// injective labeling this is a plain Markov process ("markov"); otherwise
/// a hidden/lumped chain ("lumped-markov").
class MarkovModel final : public ProcessModel {
 public:
  MarkovModel(MarkovChain chain, std::vector<Symbol> labeling, std::size_t alphabet_size = 0);

  std::string_view kind() const override { return injective_ ? "markov" : "lumped-markov"; }
  std::size_t alphabet_size() const override { return alphabet_size_; }
  Word sample(std::size_t n, std::uint64_t seed) const override;
  std::unique_ptr<CylinderCursor> cursor() const override;
  std::optional<double> exact_entropy_rate() const override;

  const MarkovChain& chain() const noexcept { return chain_; }
  const std::vector<Symbol>& labeling() const noexcept { return labeling_; }
  bool injective() const noexcept { return injective_; }

 private:
  MarkovChain chain_;
  std::vector<Symbol> labeling_;
  std::size_t alphabet_size_;
  bool injective_;
};

/// Coding of the circle rotation x -> x + alpha (mod 1) by an interval
/// partition. Interval i is [cuts[i], cuts[i+1]) with cuts[0] = 0, and
/// carries symbols[i]. All arithmetic is exact on the 2^-128 grid.
class RotationModel final : public ProcessModel {
 public:
  struct Arc {
    Fixed128 lo;
    Fixed128 last;  // inclusive
  };

  RotationModel(Fixed128 alpha, std::vector<Fixed128> breakpoints,
                std::vector<Symbol> symbols = {}, bool check_irrational = true);

  std::string_view kind() const override { return "rotation"; }
  std::size_t alphabet_size() const override { return alphabet_size_; }
  Word sample(std::size_t n, std::uint64_t seed) const override;
  std::unique_ptr<CylinderCursor> cursor() const override;
  std::optional<double> exact_entropy_rate() const override { return 0.0; }
  std::size_t enumeration_size(std::size_t n) const override;
  BlockDistribution block_distribution(std::size_t n,
                                       std::size_t capacity = kBlockCapacity) const override;
  void visit_blocks(std::size_t n, std::size_t capacity, const BlockVisitor& visit) const override;

  Fixed128 alpha() const noexcept { return alpha_; }
  const std::vector<Fixed128>& cuts() const noexcept { return cuts_; }
  const std::vector<Symbol>& symbols() const noexcept { return symbols_; }

  Symbol symbol_at(Fixed128 x) const;
  Word itinerary(Fixed128 x, std::size_t n) const;
  /// Arcs of T^{-shift}(points labeled `a`), non-wrapping and sorted.
  std::vector<Arc> preimage_arcs(Symbol a, std::size_t shift) const;

 private:
  Fixed128 alpha_;
  std::vector<Fixed128> cuts_;
  std::vector<Symbol> symbols_;
  std::size_t alphabet_size_;
};

/// Direct product of two independent processes. Symbol (l, r) is encoded as
/// l + r_left * r, so a left symbol l is also the code of (l, 0).
class ProductModel final : public ProcessModel {
 public:
  ProductModel(ModelPtr left, ModelPtr right);

  std::string_view kind() const override { return "product"; }
  std::size_t alphabet_size() const override;
  Word sample(std::size_t n, std::uint64_t seed) const override;
  std::unique_ptr<CylinderCursor> cursor() const override;
  std::optional<double> exact_entropy_rate() const override;
  std::size_t enumeration_size(std::size_t n) const override;
  BlockDistribution block_distribution(std::size_t n,
                                       std::size_t capacity = kBlockCapacity) const override;
  void visit_blocks(std::size_t n, std::size_t capacity, const BlockVisitor& visit) const override;

  const ProcessModel& left() const noexcept { return *left_; }
  const ProcessModel& right() const noexcept { return *right_; }
  ModelPtr left_ptr() const noexcept { return left_; }
  ModelPtr right_ptr() const noexcept { return right_; }

  Symbol encode(Symbol l, Symbol r) const noexcept {
    return static_cast<Symbol>(l + left_->alphabet_size() * r);
  }
  std::pair<Symbol, Symbol> decode(Symbol x) const noexcept {
    const auto rl = left_->alphabet_size();
    return {static_cast<Symbol>(x % rl), static_cast<Symbol>(x / rl)};
  }

 private:
  ModelPtr left_;
  ModelPtr right_;
};

/// Two labelings P and Q of one process. Pair symbols of the P x Q process
/// are p + r_p * q.
class JointModel {
 public:
  virtual ~JointModel() = default;

  virtual std::string_view kind() const = 0;
  virtual std::size_t alphabet_p() const = 0;
  virtual std::size_t alphabet_q() const = 0;
  virtual const ProcessModel& pair_process() const = 0;
  virtual const ProcessModel& p_process() const = 0;
  virtual const ProcessModel& q_process() const = 0;
  virtual std::pair<Word, Word> sample(std::size_t n, std::uint64_t seed) const = 0;
  /// Draws v from mu(. | u) exactly.
  virtual Word sample_conditional_q(WordView u, std::uint64_t seed) const = 0;

  Word combine(WordView u, WordView v) const;
  std::pair<Word, Word> split(WordView pair_word) const;
  double joint_cylinder_measure(WordView u, WordView v) const;
  double conditional_measure(WordView u, WordView v) const;
};

using JointModelPtr = std::shared_ptr<const JointModel>;

/// Joint Markov model: one chain, two state labelings.
class HiddenJointModel final : public JointModel {
 public:
  HiddenJointModel(MarkovChain chain, std::vector<Symbol> labeling_p,
                   std::vector<Symbol> labeling_q);

  std::string_view kind() const override { return "joint-markov"; }
  std::size_t alphabet_p() const override { return p_.alphabet_size(); }
  std::size_t alphabet_q() const override { return q_.alphabet_size(); }
  const ProcessModel& pair_process() const override { return pair_; }
  const ProcessModel& p_process() const override { return p_; }
  const ProcessModel& q_process() const override { return q_; }
  std::pair<Word, Word> sample(std::size_t n, std::uint64_t seed) const override;
  Word sample_conditional_q(WordView u, std::uint64_t seed) const override;

 private:
  MarkovModel p_;
  MarkovModel q_;
  MarkovModel pair_;
};

/// X = left x right with P = projection to the left factor and Q = the full
/// product symbol. Realizes a zero-entropy extension X -> Y = left when the
/// right factor has zero entropy.
class ProductJointModel final : public JointModel {
 public:
  explicit ProductJointModel(std::shared_ptr<const ProductModel> product);

  std::string_view kind() const override { return "joint-product"; }
  std::size_t alphabet_p() const override { return product_->left().alphabet_size(); }
  std::size_t alphabet_q() const override { return product_->alphabet_size(); }
  const ProcessModel& pair_process() const override { return *pair_; }
  const ProcessModel& p_process() const override { return product_->left(); }
  const ProcessModel& q_process() const override { return *product_; }
  std::pair<Word, Word> sample(std::size_t n, std::uint64_t seed) const override;
  Word sample_conditional_q(WordView u, std::uint64_t seed) const override;

  const ProductModel& product() const noexcept { return *product_; }

 private:
  std::shared_ptr<const ProductModel> product_;
  std::unique_ptr<ProcessModel> pair_;
};

// Convenience constructors used by tests, the CLI and the bindings.
std::shared_ptr<MarkovModel> make_symmetric_flip(double flip);
std::shared_ptr<RotationModel> make_rotation(std::string_view alpha, std::string_view breakpoint);

}  // namespace ergolab
