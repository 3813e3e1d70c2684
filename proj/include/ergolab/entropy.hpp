#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "ergolab/core.hpp"
#include "ergolab/models.hpp"

namespace ergolab {

/// -sum p log2 p with 0 log 0 = 0.
double partition_entropy(std::span<const double> p);

/// Entropy of the exact n-block distribution.
double block_entropy(const ProcessModel& model, std::size_t n,
                     std::size_t capacity = kBlockCapacity);

struct EntropyReport {
  std::vector<double> block_entropies;  // H_1..H_n

  double rate_upper() const;
  double rate_conditional() const;
};

/// H_1..H_n from a single enumeration of n-blocks.
EntropyReport entropy_report(const ProcessModel& model, std::size_t n,
                             std::size_t capacity = kBlockCapacity);

struct SmbTrajectory {
  std::vector<double> values;  // -(1/k) log2 mu(x_1..x_k), k = 1..n

  double final_value() const;
};

SmbTrajectory smb_trajectory(const ProcessModel& model, WordView path);

/// Conditional block entropies H_n - H_{n-1} of the P labeling (s) and of
/// the joint labeling (t).
struct ConditionalEntropies {
  std::size_t n = 0;
  double s = 0.0;
  double t = 0.0;
};

ConditionalEntropies conditional_entropies(const JointModel& model, std::size_t n,
                                           std::size_t capacity = kJointCapacity);

/// A_n = {(u,v) : mu(u) > 2^-(s+eps)n, mu(v|u) > 2^-(t-s+eps)n}, stored as
/// u -> A_n(u) with each fiber in lexicographic order of v.
struct RelativeSmbSet {
  std::size_t n = 0;
  double epsilon = 0.0;
  double s = 0.0;
  double t = 0.0;
  std::map<Word, std::vector<Word>> fibers;
  double coverage = 0.0;

  std::size_t pair_count() const;
  std::size_t distinct_u() const { return fibers.size(); }
  std::size_t max_fiber() const;
  bool contains(const Word& u, const Word& v) const;
  /// log2 of the two counting bounds.
  double u_bound_log2() const { return (s + epsilon) * static_cast<double>(n); }
  double fiber_bound_log2() const { return (t - s + epsilon) * static_cast<double>(n); }
  bool satisfies_counting_bounds() const;
};

RelativeSmbSet relative_smb_set(const JointModel& model, std::size_t n, double epsilon,
                                std::size_t capacity = kJointCapacity);
/// Same construction with s and t supplied by the caller.
RelativeSmbSet relative_smb_set(const JointModel& model, std::size_t n, double epsilon,
                                double s, double t, std::size_t capacity = kJointCapacity);

std::vector<double> coverage_growth(const JointModel& model, double epsilon,
                                    std::span<const std::size_t> n_list,
                                    std::size_t capacity = kJointCapacity);

}  // namespace ergolab
