#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ergolab/core.hpp"
#include "ergolab/models.hpp"

namespace ergolab {

/// Block-length policy of the plug-in scheme.
///  - conditional: H_k - H_{k-1} where k <= n/2 is the largest length such
///    that every length j <= k has at most sqrt(#windows) distinct j-blocks.
///  - ratio-fixed: H_k / k with k = max(1, floor(log2 n / (2 log2 r))).
enum class PluginPolicy { kConditional, kRatioFixed };

std::string_view to_string(PluginPolicy policy);
PluginPolicy plugin_policy_from_string(std::string_view name);

/// alphabet_size = 0 infers max(symbol) + 1.
double plugin_scheme(WordView w, PluginPolicy policy = PluginPolicy::kConditional,
                     std::size_t alphabet_size = 0);
/// c log2(c) / n for the c phrases of the LZ78 parsing (a final partial
/// phrase counts).
double lz78_scheme(WordView w);
/// Mean of log2(i) / l_i over probes i in the final quarter, l_i the
/// longest prefix of w[i..] starting earlier in w (l_i = 0 counts as 1).
double returntime_scheme(WordView w);
double freq_scheme(WordView w, Symbol symbol, std::size_t alphabet_size);

/// Plug-in entropy of the empirical k-block distribution (bits).
double empirical_block_entropy(WordView w, std::size_t k);

struct SchemeDescriptor {
  std::string name;  // plugin | lz78 | returntime | freq
  PluginPolicy plugin_policy = PluginPolicy::kConditional;
  Symbol symbol = 1;  // freq only

  static SchemeDescriptor parse(std::string_view text);
  std::string label() const;
  bool is_entropy_scheme() const { return name != "freq"; }
  /// Throws unsupported-name or validation errors.
  void validate(std::size_t alphabet_size) const;
  double evaluate(WordView w, std::size_t alphabet_size) const;
};

std::vector<SchemeDescriptor> all_schemes();

struct ConvergenceReport {
  SchemeDescriptor scheme;
  std::string model;
  std::vector<std::size_t> n_grid;
  std::size_t trials = 0;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> seeds;             // per trial
  std::vector<std::vector<double>> estimates;  // trials x n_grid
  double limit_estimate = 0.0;                 // median at the largest n
  double epsilon = 0.0;
  double in_probability_fraction = 0.0;

  double fraction_within(double eps) const;
};

/// Trial t evaluates the scheme on prefixes of one sample path drawn with
/// derive_seed(master_seed, t).
ConvergenceReport convergence_report(const SchemeDescriptor& scheme, const ProcessModel& model,
                                     const std::vector<std::size_t>& n_grid, std::size_t trials,
                                     double epsilon, std::uint64_t master_seed,
                                     std::string model_name = {});

double median(std::vector<double> values);

}  // namespace ergolab
