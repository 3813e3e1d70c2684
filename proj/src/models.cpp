#include "ergolab/models.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "ergolab/rng.hpp"

namespace ergolab {

namespace {

double xlog2x(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

std::size_t saturating_pow(std::size_t base, std::size_t exp) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (out > std::numeric_limits<std::size_t>::max() / std::max<std::size_t>(base, 1)) {
      return std::numeric_limits<std::size_t>::max();
    }
    out *= base;
  }
  return out;
}

std::size_t saturating_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a) {
    return std::numeric_limits<std::size_t>::max();
  }
  return a * b;
}

std::size_t pick(const std::vector<double>& cumulative, double u) {
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

std::vector<double> cumulative_of(const std::vector<double>& p) {
  std::vector<double> c(p.size());
  CompensatedSum s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    s += p[i];
    c[i] = s.value();
  }
  return c;
}

void check_capacity(std::size_t needed, std::size_t capacity, std::size_t n) {
  if (needed > capacity) {
    throw Error(ErrorCode::kCapacity, "enumerating " + std::to_string(n) + "-blocks needs " +
                                          (needed == std::numeric_limits<std::size_t>::max()
                                               ? std::string("too many")
                                               : std::to_string(needed)) +
                                          " entries; capacity is " + std::to_string(capacity));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ProcessModel

std::size_t ProcessModel::enumeration_size(std::size_t n) const {
  return saturating_pow(alphabet_size(), n);
}

BlockDistribution ProcessModel::block_distribution(std::size_t n, std::size_t capacity) const {
  std::map<Word, double> weights;
  visit_blocks(n, capacity, [&](WordView block, double mass) {
    weights.emplace_hint(weights.end(), Word(block.begin(), block.end()), mass);
  });
  return BlockDistribution(n, alphabet_size(), std::move(weights));
}

void ProcessModel::visit_blocks(std::size_t n, std::size_t capacity,
                                const BlockVisitor& visit) const {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "block length must be positive");
  check_capacity(enumeration_size(n), capacity, n);
  enumerate_blocks(n, visit);
}

void ProcessModel::enumerate_blocks(std::size_t n, const BlockVisitor& visit) const {
  const std::size_t r = alphabet_size();
  Word w(n);
  std::vector<std::unique_ptr<CylinderCursor>> cursors(n + 1);
  std::vector<double> mass(n + 1, 0.0);
  cursors[0] = cursor();
  mass[0] = 1.0;
  std::function<void(std::size_t)> descend = [&](std::size_t depth) {
    if (depth == n) {
      visit(w, mass[n]);
      return;
    }
    for (std::size_t a = 0; a < r; ++a) {
      auto next = cursors[depth]->clone();
      const double ratio = next->extend(static_cast<Symbol>(a));
      if (!(ratio > 0.0)) continue;
      w[depth] = static_cast<Symbol>(a);
      mass[depth + 1] = mass[depth] * ratio;
      cursors[depth + 1] = std::move(next);
      descend(depth + 1);
    }
  };
  descend(0);
}

double ProcessModel::cylinder_measure(WordView u) const {
  if (u.empty()) throw Error(ErrorCode::kInvalidArgument, "cylinder of the empty word");
  Alphabet(alphabet_size()).check(u);
  auto c = cursor();
  double mass = 1.0;
  for (Symbol a : u) {
    mass *= c->extend(a);
    if (!(mass > 0.0)) return 0.0;
  }
  return mass;
}

// ---------------------------------------------------------------------------
// MarkovChain

MarkovChain::MarkovChain(std::vector<std::vector<double>> transition)
    : transition_(std::move(transition)) {
  const std::size_t m = transition_.size();
  if (m == 0) throw Error(ErrorCode::kInvalidModel, "Markov chain needs at least one state");
  for (std::size_t i = 0; i < m; ++i) {
    if (transition_[i].size() != m) {
      throw Error(ErrorCode::kInvalidModel, "transition matrix is not square");
    }
    CompensatedSum row;
    for (double p : transition_[i]) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(ErrorCode::kInvalidModel, "transition probability outside [0,1]");
      }
      row += p;
    }
    if (std::fabs(row.value() - 1.0) > 1e-12) {
      throw Error(ErrorCode::kInvalidModel,
                  "row " + std::to_string(i) + " sums to " + std::to_string(row.value()));
    }
  }

  // Primitive (irreducible and aperiodic) iff some power up to Wielandt's
  // bound (m-1)^2 + 1 is strictly positive.
  std::vector<std::vector<char>> reach(m, std::vector<char>(m, 0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) reach[i][j] = transition_[i][j] > 0.0;
  auto power = reach;
  const std::size_t bound = (m - 1) * (m - 1) + 1;
  bool primitive = false;
  for (std::size_t k = 1; k <= bound; ++k) {
    bool all = true;
    for (const auto& row : power)
      for (char x : row) all = all && x;
    if (all) {
      primitive = true;
      break;
    }
    std::vector<std::vector<char>> next(m, std::vector<char>(m, 0));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t l = 0; l < m; ++l)
        if (power[i][l])
          for (std::size_t j = 0; j < m; ++j) next[i][j] = next[i][j] || reach[l][j];
    power = std::move(next);
  }
  if (!primitive) {
    throw Error(ErrorCode::kInvalidModel, "Markov chain is not irreducible and aperiodic");
  }

  Eigen::MatrixXd a(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          transition_[j][i] - (i == j ? 1.0 : 0.0);
  a.row(static_cast<Eigen::Index>(m - 1)).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  b(static_cast<Eigen::Index>(m - 1)) = 1.0;
  const Eigen::VectorXd pi = a.fullPivLu().solve(b);
  stationary_.resize(m);
  for (std::size_t i = 0; i < m; ++i) stationary_[i] = std::max(0.0, pi(static_cast<Eigen::Index>(i)));
  const double total = compensated_total(stationary_);
  for (double& p : stationary_) p /= total;
  for (std::size_t j = 0; j < m; ++j) {
    CompensatedSum s;
    for (std::size_t i = 0; i < m; ++i) s += stationary_[i] * transition_[i][j];
    if (std::fabs(s.value() - stationary_[j]) > 1e-10) {
      throw Error(ErrorCode::kInvalidModel, "stationary vector did not converge");
    }
  }

  cumulative_.reserve(m);
  for (const auto& row : transition_) cumulative_.push_back(cumulative_of(row));
}

std::vector<std::size_t> MarkovChain::sample_states(std::size_t n, std::uint64_t seed) const {
  Rng rng(seed);
  std::vector<std::size_t> states(n);
  if (n == 0) return states;
  const auto start = cumulative_of(stationary_);
  std::size_t s = pick(start, rng.uniform());
  states[0] = s;
  for (std::size_t t = 1; t < n; ++t) {
    s = pick(cumulative_[s], rng.uniform());
    states[t] = s;
  }
  return states;
}

// ---------------------------------------------------------------------------
// IidModel

namespace {

class IidCursor final : public CylinderCursor {
 public:
  explicit IidCursor(const std::vector<double>* weights) : weights_(weights) {}
  double extend(Symbol a) override { return a < weights_->size() ? (*weights_)[a] : 0.0; }
  std::unique_ptr<CylinderCursor> clone() const override {
    return std::make_unique<IidCursor>(*this);
  }

 private:
  const std::vector<double>* weights_;
};

}  // namespace

IidModel::IidModel(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty() || weights_.size() > kMaxAlphabet) {
    throw Error(ErrorCode::kInvalidModel, "i.i.d. model needs 1..256 weights");
  }
  for (double w : weights_) {
    if (!(w >= 0.0)) throw Error(ErrorCode::kInvalidModel, "negative i.i.d. weight");
  }
  if (std::fabs(compensated_total(weights_) - 1.0) > 1e-12) {
    throw Error(ErrorCode::kInvalidModel, "i.i.d. weights must sum to 1");
  }
  cumulative_ = cumulative_of(weights_);
}

Word IidModel::sample(std::size_t n, std::uint64_t seed) const {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "sample length must be positive");
  Rng rng(seed);
  Word w(n);
  for (auto& x : w) x = static_cast<Symbol>(pick(cumulative_, rng.uniform()));
  return w;
}

std::unique_ptr<CylinderCursor> IidModel::cursor() const {
  return std::make_unique<IidCursor>(&weights_);
}

std::optional<double> IidModel::exact_entropy_rate() const {
  CompensatedSum h;
  for (double w : weights_) h += -xlog2x(w);
  return h.value();
}

// ---------------------------------------------------------------------------
// MarkovModel

namespace {

/// Normalized forward recursion over hidden states.
class MarkovCursor final : public CylinderCursor {
 public:
  explicit MarkovCursor(const MarkovModel* model) : model_(model) {}

  double extend(Symbol a) override {
    const auto& chain = model_->chain();
    const auto& labels = model_->labeling();
    const std::size_t m = chain.states();
    std::vector<double> next(m, 0.0);
    if (filter_.empty()) {
      for (std::size_t j = 0; j < m; ++j)
        if (labels[j] == a) next[j] = chain.stationary()[j];
    } else {
      const auto& t = chain.transition();
      for (std::size_t i = 0; i < m; ++i) {
        if (filter_[i] == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j)
          if (labels[j] == a) next[j] += filter_[i] * t[i][j];
      }
    }
    double total = 0.0;
    for (double x : next) total += x;
    if (total > 0.0)
      for (double& x : next) x /= total;
    filter_ = std::move(next);
    return total;
  }

  std::unique_ptr<CylinderCursor> clone() const override {
    return std::make_unique<MarkovCursor>(*this);
  }

 private:
  const MarkovModel* model_;
  std::vector<double> filter_;
};

}  // namespace

MarkovModel::MarkovModel(MarkovChain chain, std::vector<Symbol> labeling, std::size_t alphabet_size)
    : chain_(std::move(chain)), labeling_(std::move(labeling)) {
  if (labeling_.empty()) {
    labeling_.resize(chain_.states());
    for (std::size_t i = 0; i < labeling_.size(); ++i) labeling_[i] = static_cast<Symbol>(i);
  }
  if (labeling_.size() != chain_.states()) {
    throw Error(ErrorCode::kInvalidModel, "labeling must assign a symbol to every state");
  }
  const std::size_t max_label = *std::max_element(labeling_.begin(), labeling_.end());
  alphabet_size_ = alphabet_size == 0 ? max_label + 1 : alphabet_size;
  if (max_label >= alphabet_size_ || alphabet_size_ > kMaxAlphabet) {
    throw Error(ErrorCode::kInvalidModel, "labeling exceeds the alphabet");
  }
  std::vector<Symbol> sorted = labeling_;
  std::sort(sorted.begin(), sorted.end());
  injective_ = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
}

Word MarkovModel::sample(std::size_t n, std::uint64_t seed) const {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "sample length must be positive");
  const auto states = chain_.sample_states(n, seed);
  Word w(n);
  for (std::size_t t = 0; t < n; ++t) w[t] = labeling_[states[t]];
  return w;
}

std::unique_ptr<CylinderCursor> MarkovModel::cursor() const {
  return std::make_unique<MarkovCursor>(this);
}

std::optional<double> MarkovModel::exact_entropy_rate() const {
  if (!injective_) return std::nullopt;
  CompensatedSum h;
  const auto& t = chain_.transition();
  for (std::size_t i = 0; i < chain_.states(); ++i) {
    CompensatedSum row;
    for (double p : t[i]) row += -xlog2x(p);
    h += chain_.stationary()[i] * row.value();
  }
  return h.value();
}

// ---------------------------------------------------------------------------
// RotationModel

namespace {

constexpr Fixed128 kFixedMax = ~Fixed128{0};

double arc_measure(const std::vector<RotationModel::Arc>& arcs) {
  CompensatedSum s;
  for (const auto& a : arcs) s += fraction_to_double(a.last - a.lo) + 0x1.0p-128;
  return s.value();
}

std::vector<RotationModel::Arc> intersect(const std::vector<RotationModel::Arc>& a,
                                          const std::vector<RotationModel::Arc>& b) {
  std::vector<RotationModel::Arc> out;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    const Fixed128 lo = std::max(a[i].lo, b[j].lo);
    const Fixed128 last = std::min(a[i].last, b[j].last);
    if (lo <= last) out.push_back({lo, last});
    if (a[i].last < b[j].last) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

class RotationCursor final : public CylinderCursor {
 public:
  explicit RotationCursor(const RotationModel* model) : model_(model) {}

  double extend(Symbol a) override {
    auto target = model_->preimage_arcs(a, step_++);
    double ratio;
    if (full_) {
      ratio = arc_measure(target);
      arcs_ = std::move(target);
      full_ = false;
    } else {
      const double before = arc_measure(arcs_);
      auto next = intersect(arcs_, target);
      ratio = before > 0.0 ? arc_measure(next) / before : 0.0;
      arcs_ = std::move(next);
    }
    return arcs_.empty() ? 0.0 : ratio;
  }

  std::unique_ptr<CylinderCursor> clone() const override {
    return std::make_unique<RotationCursor>(*this);
  }

 private:
  const RotationModel* model_;
  std::vector<RotationModel::Arc> arcs_;
  bool full_ = true;
  std::size_t step_ = 0;
};

}  // namespace

RotationModel::RotationModel(Fixed128 alpha, std::vector<Fixed128> breakpoints,
                             std::vector<Symbol> symbols, bool check_irrational)
    : alpha_(alpha), symbols_(std::move(symbols)) {
  cuts_.push_back(0);
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    if (i == 0 && breakpoints[i] == 0) continue;
    if (breakpoints[i] <= cuts_.back()) {
      throw Error(ErrorCode::kInvalidModel, "rotation breakpoints must be strictly increasing");
    }
    cuts_.push_back(breakpoints[i]);
  }
  if (symbols_.empty()) {
    for (std::size_t i = 0; i < cuts_.size(); ++i) symbols_.push_back(static_cast<Symbol>(i));
  }
  if (symbols_.size() != cuts_.size()) {
    throw Error(ErrorCode::kInvalidModel, "rotation needs one symbol per interval");
  }
  alphabet_size_ = std::size_t{*std::max_element(symbols_.begin(), symbols_.end())} + 1;
  if (check_irrational) {
    // Reject alpha within 2^-100 of p/q for q <= 10^6, i.e. ||q alpha|| < q 2^-100.
    for (std::uint64_t q = 1; q <= 1000000; ++q) {
      const Fixed128 x = alpha_ * q;
      const Fixed128 dist = std::min(x, Fixed128{0} - x);
      if (dist < (static_cast<Fixed128>(q) << 28)) {
        throw Error(ErrorCode::kInvalidModel,
                    "rotation angle is within 2^-100 of a rational with denominator " +
                        std::to_string(q));
      }
    }
  }
}

Symbol RotationModel::symbol_at(Fixed128 x) const {
  auto it = std::upper_bound(cuts_.begin(), cuts_.end(), x);
  return symbols_[static_cast<std::size_t>(it - cuts_.begin()) - 1];
}

Word RotationModel::itinerary(Fixed128 x, std::size_t n) const {
  Word w(n);
  for (std::size_t j = 0; j < n; ++j) {
    w[j] = symbol_at(x);
    x += alpha_;
  }
  return w;
}

Word RotationModel::sample(std::size_t n, std::uint64_t seed) const {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "sample length must be positive");
  Rng rng(seed);
  const Fixed128 hi = rng.next();
  const Fixed128 x0 = (hi << 64) | rng.next();
  return itinerary(x0, n);
}

std::vector<RotationModel::Arc> RotationModel::preimage_arcs(Symbol a, std::size_t shift) const {
  const Fixed128 offset = alpha_ * static_cast<Fixed128>(shift);
  std::vector<Arc> out;
  for (std::size_t i = 0; i < cuts_.size(); ++i) {
    if (symbols_[i] != a) continue;
    const Fixed128 end = i + 1 < cuts_.size() ? cuts_[i + 1] : Fixed128{0};
    const Fixed128 lo = cuts_[i] - offset;
    const Fixed128 last = end - 1 - offset;
    if (lo <= last) {
      out.push_back({lo, last});
    } else {
      out.push_back({0, last});
      out.push_back({lo, kFixedMax});
    }
  }
  std::sort(out.begin(), out.end(), [](const Arc& x, const Arc& y) { return x.lo < y.lo; });
  return out;
}

std::unique_ptr<CylinderCursor> RotationModel::cursor() const {
  return std::make_unique<RotationCursor>(this);
}

std::size_t RotationModel::enumeration_size(std::size_t n) const {
  return saturating_mul(cuts_.size(), n);
}

void RotationModel::visit_blocks(std::size_t n, std::size_t capacity,
                                 const BlockVisitor& visit) const {
  const auto d = block_distribution(n, capacity);
  for (const auto& [block, p] : d.weights()) visit(block, p);
}

BlockDistribution RotationModel::block_distribution(std::size_t n, std::size_t capacity) const {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "block length must be positive");
  check_capacity(enumeration_size(n), capacity, n);
  // n-blocks are constant on the arcs cut out by the points c - j alpha.
  std::vector<Fixed128> points;
  points.reserve(cuts_.size() * n);
  for (Fixed128 c : cuts_)
    for (std::size_t j = 0; j < n; ++j) points.push_back(c - alpha_ * static_cast<Fixed128>(j));
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  std::map<Word, CompensatedSum> mass;
  if (points.size() == 1) {
    mass[itinerary(points[0], n)] += 1.0;
  } else {
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Fixed128 next = points[(i + 1) % points.size()];
      mass[itinerary(points[i], n)] += fraction_to_double(next - points[i]);
    }
  }
  std::map<Word, double> weights;
  for (auto& [block, s] : mass) weights.emplace_hint(weights.end(), block, s.value());
  return BlockDistribution(n, alphabet_size_, std::move(weights));
}

// ---------------------------------------------------------------------------
// ProductModel

namespace {

class ProductCursor final : public CylinderCursor {
 public:
  ProductCursor(const ProductModel* model, std::unique_ptr<CylinderCursor> left,
                std::unique_ptr<CylinderCursor> right)
      : model_(model), left_(std::move(left)), right_(std::move(right)) {}

  double extend(Symbol x) override {
    const auto [l, r] = model_->decode(x);
    const double a = left_->extend(l);
    const double b = right_->extend(r);
    return a * b;
  }

  std::unique_ptr<CylinderCursor> clone() const override {
    return std::make_unique<ProductCursor>(model_, left_->clone(), right_->clone());
  }

 private:
  const ProductModel* model_;
  std::unique_ptr<CylinderCursor> left_;
  std::unique_ptr<CylinderCursor> right_;
};

}  // namespace

ProductModel::ProductModel(ModelPtr left, ModelPtr right)
    : left_(std::move(left)), right_(std::move(right)) {
  if (!left_ || !right_) throw Error(ErrorCode::kInvalidModel, "product needs two components");
  if (left_->alphabet_size() * right_->alphabet_size() > kMaxAlphabet) {
    throw Error(ErrorCode::kInvalidModel, "product alphabet exceeds 256 symbols");
  }
}

std::size_t ProductModel::alphabet_size() const {
  return left_->alphabet_size() * right_->alphabet_size();
}

Word ProductModel::sample(std::size_t n, std::uint64_t seed) const {
  const Word l = left_->sample(n, derive_seed(seed, 0));
  const Word r = right_->sample(n, derive_seed(seed, 1));
  Word w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = encode(l[i], r[i]);
  return w;
}

std::unique_ptr<CylinderCursor> ProductModel::cursor() const {
  return std::make_unique<ProductCursor>(this, left_->cursor(), right_->cursor());
}

std::optional<double> ProductModel::exact_entropy_rate() const {
  const auto a = left_->exact_entropy_rate();
  const auto b = right_->exact_entropy_rate();
  if (!a || !b) return std::nullopt;
  return *a + *b;
}

std::size_t ProductModel::enumeration_size(std::size_t n) const {
  return saturating_mul(left_->enumeration_size(n), right_->enumeration_size(n));
}

void ProductModel::visit_blocks(std::size_t n, std::size_t capacity,
                                const BlockVisitor& visit) const {
  const auto d = block_distribution(n, capacity);
  for (const auto& [block, p] : d.weights()) visit(block, p);
}

BlockDistribution ProductModel::block_distribution(std::size_t n, std::size_t capacity) const {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "block length must be positive");
  check_capacity(enumeration_size(n), capacity, n);
  const auto dl = left_->block_distribution(n, capacity);
  const auto dr = right_->block_distribution(n, capacity);
  std::map<Word, double> weights;
  Word w(n);
  for (const auto& [bl, pl] : dl.weights()) {
    for (const auto& [br, pr] : dr.weights()) {
      for (std::size_t i = 0; i < n; ++i) w[i] = encode(bl[i], br[i]);
      weights.emplace(w, pl * pr);
    }
  }
  return BlockDistribution(n, alphabet_size(), std::move(weights));
}

// ---------------------------------------------------------------------------
// JointModel

Word JointModel::combine(WordView u, WordView v) const {
  if (u.size() != v.size()) throw Error(ErrorCode::kLengthMismatch, "u and v differ in length");
  Alphabet(alphabet_p()).check(u);
  Alphabet(alphabet_q()).check(v);
  const std::size_t rp = alphabet_p();
  Word w(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) w[i] = static_cast<Symbol>(u[i] + rp * v[i]);
  return w;
}

std::pair<Word, Word> JointModel::split(WordView pair_word) const {
  const std::size_t rp = alphabet_p();
  Word u(pair_word.size());
  Word v(pair_word.size());
  for (std::size_t i = 0; i < pair_word.size(); ++i) {
    u[i] = static_cast<Symbol>(pair_word[i] % rp);
    v[i] = static_cast<Symbol>(pair_word[i] / rp);
  }
  return {std::move(u), std::move(v)};
}

double JointModel::joint_cylinder_measure(WordView u, WordView v) const {
  return pair_process().cylinder_measure(combine(u, v));
}

double JointModel::conditional_measure(WordView u, WordView v) const {
  const double marginal = p_process().cylinder_measure(u);
  if (!(marginal > 0.0)) {
    throw Error(ErrorCode::kNullConditioning, "conditioning on a null cylinder");
  }
  return joint_cylinder_measure(u, v) / marginal;
}

namespace {

std::vector<Symbol> pair_labeling(const std::vector<Symbol>& lp, const std::vector<Symbol>& lq) {
  if (lp.size() != lq.size()) {
    throw Error(ErrorCode::kInvalidModel, "labelings must cover the same states");
  }
  const std::size_t rp = std::size_t{*std::max_element(lp.begin(), lp.end())} + 1;
  const std::size_t rq = std::size_t{*std::max_element(lq.begin(), lq.end())} + 1;
  if (rp * rq > kMaxAlphabet) throw Error(ErrorCode::kInvalidModel, "pair alphabet too large");
  std::vector<Symbol> out(lp.size());
  for (std::size_t i = 0; i < lp.size(); ++i) out[i] = static_cast<Symbol>(lp[i] + rp * lq[i]);
  return out;
}

std::size_t alphabet_of(const std::vector<Symbol>& l) {
  return std::size_t{*std::max_element(l.begin(), l.end())} + 1;
}

}  // namespace

HiddenJointModel::HiddenJointModel(MarkovChain chain, std::vector<Symbol> labeling_p,
                                   std::vector<Symbol> labeling_q)
    : p_(chain, labeling_p),
      q_(chain, labeling_q),
      pair_(chain, pair_labeling(labeling_p, labeling_q),
            alphabet_of(labeling_p) * alphabet_of(labeling_q)) {}

std::pair<Word, Word> HiddenJointModel::sample(std::size_t n, std::uint64_t seed) const {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "sample length must be positive");
  const auto states = p_.chain().sample_states(n, seed);
  Word u(n);
  Word v(n);
  for (std::size_t t = 0; t < n; ++t) {
    u[t] = p_.labeling()[states[t]];
    v[t] = q_.labeling()[states[t]];
  }
  return {std::move(u), std::move(v)};
}

Word HiddenJointModel::sample_conditional_q(WordView u, std::uint64_t seed) const {
  // Forward filtering, backward sampling over the hidden states.
  const auto& chain = p_.chain();
  const auto& t = chain.transition();
  const auto& lp = p_.labeling();
  const std::size_t m = chain.states();
  const std::size_t n = u.size();
  if (n == 0) return {};
  std::vector<std::vector<double>> filter(n, std::vector<double>(m, 0.0));
  for (std::size_t step = 0; step < n; ++step) {
    auto& f = filter[step];
    for (std::size_t j = 0; j < m; ++j) {
      if (lp[j] != u[step]) continue;
      if (step == 0) {
        f[j] = chain.stationary()[j];
      } else {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += filter[step - 1][i] * t[i][j];
        f[j] = s;
      }
    }
    double total = 0.0;
    for (double x : f) total += x;
    if (!(total > 0.0)) {
      throw Error(ErrorCode::kNullConditioning, "conditioning word has zero measure");
    }
    for (double& x : f) x /= total;
  }
  Rng rng(seed);
  auto draw = [&](const std::vector<double>& weights) {
    double total = 0.0;
    for (double x : weights) total += x;
    double target = rng.uniform() * total;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      if (weights[j] <= 0.0) continue;
      if (target < weights[j]) return j;
      target -= weights[j];
    }
    std::size_t last = weights.size();
    while (last-- > 0)
      if (weights[last] > 0.0) return last;
    return std::size_t{0};
  };
  Word v(n);
  std::size_t state = draw(filter[n - 1]);
  v[n - 1] = q_.labeling()[state];
  std::vector<double> w(m);
  for (std::size_t step = n - 1; step-- > 0;) {
    for (std::size_t i = 0; i < m; ++i) w[i] = filter[step][i] * t[i][state];
    state = draw(w);
    v[step] = q_.labeling()[state];
  }
  return v;
}

namespace {

/// P x Q process of a ProductJointModel: pair symbol p + r_l * x is valid
/// only when p is the left coordinate of x.
class ProductPairProcess final : public ProcessModel {
 public:
  explicit ProductPairProcess(const ProductModel* product) : product_(product) {}

  std::string_view kind() const override { return "product-pair"; }
  std::size_t alphabet_size() const override {
    return product_->left().alphabet_size() * product_->alphabet_size();
  }
  Word sample(std::size_t n, std::uint64_t seed) const override {
    Word x = product_->sample(n, seed);
    const std::size_t rl = product_->left().alphabet_size();
    for (auto& s : x) s = static_cast<Symbol>(product_->decode(s).first + rl * s);
    return x;
  }
  std::unique_ptr<CylinderCursor> cursor() const override {
    return std::make_unique<Cursor>(product_, product_->cursor());
  }
  std::optional<double> exact_entropy_rate() const override {
    return product_->exact_entropy_rate();
  }
  std::size_t enumeration_size(std::size_t n) const override {
    return product_->enumeration_size(n);
  }
  BlockDistribution block_distribution(std::size_t n, std::size_t capacity) const override {
    const auto d = product_->block_distribution(n, capacity);
    const std::size_t rl = product_->left().alphabet_size();
    std::map<Word, double> weights;
    for (const auto& [block, p] : d.weights()) {
      Word w(block);
      for (auto& s : w) s = static_cast<Symbol>(product_->decode(s).first + rl * s);
      weights.emplace(std::move(w), p);
    }
    return BlockDistribution(n, alphabet_size(), std::move(weights));
  }
  void visit_blocks(std::size_t n, std::size_t capacity,
                    const BlockVisitor& visit) const override {
    const auto d = block_distribution(n, capacity);
  for (const auto& [block, p] : d.weights()) visit(block, p);
  }

 private:
  class Cursor final : public CylinderCursor {
   public:
    Cursor(const ProductModel* product, std::unique_ptr<CylinderCursor> inner)
        : product_(product), inner_(std::move(inner)) {}
    double extend(Symbol c) override {
      const std::size_t rl = product_->left().alphabet_size();
      const auto p = static_cast<Symbol>(c % rl);
      const auto x = static_cast<Symbol>(c / rl);
      if (dead_ || product_->decode(x).first != p) {
        dead_ = true;
        return 0.0;
      }
      return inner_->extend(x);
    }
    std::unique_ptr<CylinderCursor> clone() const override {
      auto c = std::make_unique<Cursor>(product_, inner_->clone());
      c->dead_ = dead_;
      return c;
    }

   private:
    const ProductModel* product_;
    std::unique_ptr<CylinderCursor> inner_;
    bool dead_ = false;
  };

  const ProductModel* product_;
};

}  // namespace

ProductJointModel::ProductJointModel(std::shared_ptr<const ProductModel> product)
    : product_(std::move(product)) {
  if (!product_) throw Error(ErrorCode::kInvalidModel, "null product model");
  if (alphabet_p() * alphabet_q() > kMaxAlphabet) {
    throw Error(ErrorCode::kInvalidModel, "pair alphabet of the product joint exceeds 256");
  }
  pair_ = std::make_unique<ProductPairProcess>(product_.get());
}

std::pair<Word, Word> ProductJointModel::sample(std::size_t n, std::uint64_t seed) const {
  Word x = product_->sample(n, seed);
  Word u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = product_->decode(x[i]).first;
  return {std::move(u), std::move(x)};
}

Word ProductJointModel::sample_conditional_q(WordView u, std::uint64_t seed) const {
  Alphabet(alphabet_p()).check(u);
  const Word r = product_->right().sample(u.size(), seed);
  Word v(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) v[i] = product_->encode(u[i], r[i]);
  return v;
}

// ---------------------------------------------------------------------------

std::shared_ptr<MarkovModel> make_symmetric_flip(double flip) {
  return std::make_shared<MarkovModel>(
      MarkovChain({{1.0 - flip, flip}, {flip, 1.0 - flip}}), std::vector<Symbol>{0, 1});
}

std::shared_ptr<RotationModel> make_rotation(std::string_view alpha, std::string_view breakpoint) {
  return std::make_shared<RotationModel>(parse_fraction(alpha),
                                         std::vector<Fixed128>{parse_fraction(breakpoint)});
}

}  // namespace ergolab
