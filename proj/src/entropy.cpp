#include "ergolab/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ergolab {

namespace {

double neg_xlog2x(double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; }

/// Entropies of the prefix marginals of a lexicographic block stream. Blocks
/// sharing a k-prefix arrive contiguously, so each k-block mass is complete
/// when the prefix changes.
class PrefixEntropies {
 public:
  PrefixEntropies(std::size_t n, std::size_t lowest)
      : n_(n), lowest_(std::max<std::size_t>(lowest, 1)), group_(n + 1), entropy_(n + 1) {}

  void add(WordView block, double mass) {
    std::size_t d = 0;
    if (started_) {
      while (d < n_ && block[d] == prev_[d]) ++d;
    }
    flush(d + 1);
    for (std::size_t k = lowest_; k <= n_; ++k) group_[k] += mass;
    prev_.assign(block.begin(), block.end());
    started_ = true;
  }

  /// H_k for k >= lowest; H_0 = 0.
  double entropy(std::size_t k) {
    if (k == 0) return 0.0;
    flush(lowest_);
    return entropy_[k].value();
  }

 private:
  void flush(std::size_t from) {
    for (std::size_t k = std::max(from, lowest_); k <= n_; ++k) {
      entropy_[k] += neg_xlog2x(group_[k].value());
      group_[k] = CompensatedSum();
    }
  }

  std::size_t n_;
  std::size_t lowest_;
  std::vector<CompensatedSum> group_;
  std::vector<CompensatedSum> entropy_;
  Word prev_;
  bool started_ = false;
};

/// P-marginal masses keyed by u, accumulated from the joint stream.
std::map<Word, double> p_marginal(const JointModel& model, std::size_t n, std::size_t capacity,
                                  PrefixEntropies* joint) {
  const std::size_t rp = model.alphabet_p();
  std::map<Word, CompensatedSum> sums;
  Word u(n);
  model.pair_process().visit_blocks(n, capacity, [&](WordView block, double mass) {
    for (std::size_t i = 0; i < n; ++i) u[i] = static_cast<Symbol>(block[i] % rp);
    sums[u] += mass;
    if (joint) joint->add(block, mass);
  });
  std::map<Word, double> out;
  for (auto& [w, s] : sums) out.emplace_hint(out.end(), w, s.value());
  return out;
}

ConditionalEntropies entropies_from(const std::map<Word, double>& marginal,
                                    PrefixEntropies& joint, std::size_t n) {
  PrefixEntropies p(n, n - 1);
  for (const auto& [u, mass] : marginal) p.add(u, mass);
  ConditionalEntropies out;
  out.n = n;
  out.s = p.entropy(n) - p.entropy(n - 1);
  out.t = joint.entropy(n) - joint.entropy(n - 1);
  return out;
}

}  // namespace

double partition_entropy(std::span<const double> p) {
  CompensatedSum total;
  CompensatedSum h;
  for (double x : p) {
    if (!(x >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative probability");
    total += x;
    h += neg_xlog2x(x);
  }
  if (std::fabs(total.value() - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument,
                "probabilities sum to " + std::to_string(total.value()));
  }
  return std::max(0.0, h.value());
}

double block_entropy(const ProcessModel& model, std::size_t n, std::size_t capacity) {
  CompensatedSum h;
  model.visit_blocks(n, capacity, [&](WordView, double mass) { h += neg_xlog2x(mass); });
  return std::max(0.0, h.value());
}

double EntropyReport::rate_upper() const {
  if (block_entropies.empty()) return 0.0;
  return block_entropies.back() / static_cast<double>(block_entropies.size());
}

double EntropyReport::rate_conditional() const {
  const std::size_t n = block_entropies.size();
  if (n == 0) return 0.0;
  return n == 1 ? block_entropies[0] : block_entropies[n - 1] - block_entropies[n - 2];
}

EntropyReport entropy_report(const ProcessModel& model, std::size_t n, std::size_t capacity) {
  PrefixEntropies acc(n, 1);
  model.visit_blocks(n, capacity, [&](WordView block, double mass) { acc.add(block, mass); });
  EntropyReport report;
  for (std::size_t k = 1; k <= n; ++k) report.block_entropies.push_back(acc.entropy(k));
  return report;
}

double SmbTrajectory::final_value() const {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "empty trajectory");
  return values.back();
}

SmbTrajectory smb_trajectory(const ProcessModel& model, WordView path) {
  if (path.empty()) throw Error(ErrorCode::kInvalidArgument, "empty path");
  Alphabet(model.alphabet_size()).check(path);
  auto cursor = model.cursor();
  SmbTrajectory out;
  out.values.reserve(path.size());
  CompensatedSum log_mass;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const double ratio = cursor->extend(path[i]);
    if (!(ratio > 0.0)) {
      throw Error(ErrorCode::kImpossiblePath,
                  "prefix of length " + std::to_string(i + 1) + " has measure zero");
    }
    log_mass += std::log2(ratio);
    out.values.push_back(-log_mass.value() / static_cast<double>(i + 1));
  }
  return out;
}

ConditionalEntropies conditional_entropies(const JointModel& model, std::size_t n,
                                           std::size_t capacity) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "block length must be positive");
  PrefixEntropies joint(n, n - 1);
  const auto marginal = p_marginal(model, n, capacity, &joint);
  return entropies_from(marginal, joint, n);
}

std::size_t RelativeSmbSet::pair_count() const {
  std::size_t total = 0;
  for (const auto& [u, vs] : fibers) total += vs.size();
  return total;
}

std::size_t RelativeSmbSet::max_fiber() const {
  std::size_t best = 0;
  for (const auto& [u, vs] : fibers) best = std::max(best, vs.size());
  return best;
}

bool RelativeSmbSet::contains(const Word& u, const Word& v) const {
  auto it = fibers.find(u);
  return it != fibers.end() && std::binary_search(it->second.begin(), it->second.end(), v);
}

bool RelativeSmbSet::satisfies_counting_bounds() const {
  if (!(std::log2(static_cast<double>(distinct_u())) < u_bound_log2()) && !fibers.empty()) {
    return false;
  }
  for (const auto& [u, vs] : fibers) {
    if (!(std::log2(static_cast<double>(vs.size())) < fiber_bound_log2())) return false;
  }
  return true;
}

namespace {

RelativeSmbSet build_set(const JointModel& model, std::size_t n, double epsilon, double s,
                         double t, const std::map<Word, double>& marginal,
                         std::size_t capacity) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  if (s > t + 1e-9) {
    throw Error(ErrorCode::kInternalConsistency,
                "P entropy " + std::to_string(s) + " exceeds joint entropy " + std::to_string(t));
  }
  RelativeSmbSet set;
  set.n = n;
  set.epsilon = epsilon;
  set.s = s;
  set.t = t;
  const double nn = static_cast<double>(n);
  const double u_threshold = std::exp2(-(s + epsilon) * nn);
  const double v_threshold = std::exp2(-(t - s + epsilon) * nn);

  const std::size_t rp = model.alphabet_p();
  Word u(n);
  Word v(n);
  CompensatedSum coverage;
  auto hint = marginal.end();
  model.pair_process().visit_blocks(n, capacity, [&](WordView block, double mass) {
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = static_cast<Symbol>(block[i] % rp);
      v[i] = static_cast<Symbol>(block[i] / rp);
    }
    if (hint == marginal.end() || hint->first != u) hint = marginal.find(u);
    const double mu_u = hint->second;
    if (!(mu_u > u_threshold)) return;
    if (!(mass / mu_u > v_threshold)) return;
    set.fibers[u].push_back(v);
    coverage += mass;
  });
  for (auto& [key, vs] : set.fibers) std::sort(vs.begin(), vs.end());
  set.coverage = coverage.value();
  if (!set.satisfies_counting_bounds()) {
    throw Error(ErrorCode::kInternalConsistency, "relative SMB set violates a counting bound");
  }
  return set;
}

}  // namespace

RelativeSmbSet relative_smb_set(const JointModel& model, std::size_t n, double epsilon,
                                std::size_t capacity) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "block length must be positive");
  PrefixEntropies joint(n, n - 1);
  const auto marginal = p_marginal(model, n, capacity, &joint);
  const auto e = entropies_from(marginal, joint, n);
  return build_set(model, n, epsilon, e.s, e.t, marginal, capacity);
}

RelativeSmbSet relative_smb_set(const JointModel& model, std::size_t n, double epsilon,
                                double s, double t, std::size_t capacity) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "block length must be positive");
  const auto marginal = p_marginal(model, n, capacity, nullptr);
  return build_set(model, n, epsilon, s, t, marginal, capacity);
}

std::vector<double> coverage_growth(const JointModel& model, double epsilon,
                                    std::span<const std::size_t> n_list, std::size_t capacity) {
  std::vector<double> out;
  out.reserve(n_list.size());
  for (std::size_t n : n_list) out.push_back(relative_smb_set(model, n, epsilon, capacity).coverage);
  return out;
}

}  // namespace ergolab
