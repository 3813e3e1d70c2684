#include "ergolab/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "ergolab/parallel.hpp"
#include "ergolab/rng.hpp"
#include "ergolab/suffix.hpp"

namespace ergolab {

namespace {

std::size_t inferred_alphabet(WordView w) {
  std::size_t r = 0;
  for (Symbol a : w) r = std::max<std::size_t>(r, a + 1u);
  return r;
}

double entropy_of_counts(const std::vector<std::size_t>& counts, std::size_t total) {
  CompensatedSum h;
  const double t = static_cast<double>(total);
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / t;
    h += -p * std::log2(p);
  }
  return std::max(0.0, h.value());
}

/// Empirical k-block entropy from the suffix array: suffixes of length >= k
/// sharing a k-prefix are contiguous, and a shorter suffix between two of
/// them would cap their lcp below k.
double block_entropy_from_sa(const std::vector<Index>& sa, const std::vector<Index>& lcp,
                             std::size_t n, std::size_t k) {
  std::vector<std::size_t> counts;
  bool prev_valid = false;
  for (std::size_t j = 0; j < n; ++j) {
    const bool valid = n - sa[j] >= k;
    if (!valid) {
      prev_valid = false;
      continue;
    }
    if (prev_valid && lcp[j] >= k) {
      ++counts.back();
    } else {
      counts.push_back(1);
    }
    prev_valid = true;
  }
  return entropy_of_counts(counts, n - k + 1);
}

double plugin_conditional(WordView w) {
  const std::size_t n = w.size();
  const auto sa = suffix_array(w);
  const auto lcp = lcp_array(w, sa);
  // distinct[k] = #{j : lcp[j] < k <= n - sa[j]}
  std::vector<std::int64_t> diff(n + 2, 0);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t lo = (j == 0 ? 0 : lcp[j]) + 1;
    const std::size_t hi = n - sa[j];
    if (lo <= hi) {
      ++diff[lo];
      --diff[hi + 1];
    }
  }
  // Capped at n/2 so both block lengths keep at least n/2 windows.
  std::size_t k = 0;
  std::int64_t distinct = 0;
  for (std::size_t len = 1; len <= n / 2; ++len) {
    distinct += diff[len];
    if (static_cast<double>(distinct) > std::sqrt(static_cast<double>(n - len + 1))) break;
    k = len;
  }
  if (k <= 1) return block_entropy_from_sa(sa, lcp, n, 1);
  const double h = block_entropy_from_sa(sa, lcp, n, k) - block_entropy_from_sa(sa, lcp, n, k - 1);
  return std::max(0.0, h);
}

void require_length(WordView w, std::size_t min, const char* scheme) {
  if (w.size() < min) {
    throw Error(ErrorCode::kInsufficientData, std::string(scheme) + " needs a word of length >= " +
                                                  std::to_string(min));
  }
}

}  // namespace

std::string_view to_string(PluginPolicy policy) {
  return policy == PluginPolicy::kConditional ? "conditional" : "ratio-fixed";
}

PluginPolicy plugin_policy_from_string(std::string_view name) {
  if (name == "conditional") return PluginPolicy::kConditional;
  if (name == "ratio-fixed") return PluginPolicy::kRatioFixed;
  throw Error(ErrorCode::kUnsupportedName, "unknown plug-in policy '" + std::string(name) + "'");
}

double empirical_block_entropy(WordView w, std::size_t k) {
  if (k == 0 || k > w.size()) throw Error(ErrorCode::kInsufficientData, "block longer than word");
  std::vector<double> p;
  const auto d = empirical_block_distribution(w, k, std::max<std::size_t>(2, inferred_alphabet(w)));
  p.reserve(d.support_size());
  for (const auto& [block, weight] : d.weights()) p.push_back(weight);
  CompensatedSum h;
  for (double x : p) h += -x * std::log2(x);
  return std::max(0.0, h.value());
}

double plugin_scheme(WordView w, PluginPolicy policy, std::size_t alphabet_size) {
  require_length(w, 2, "plugin");
  if (policy == PluginPolicy::kConditional) return plugin_conditional(w);
  const std::size_t r = std::max<std::size_t>(2, alphabet_size ? alphabet_size : inferred_alphabet(w));
  const double k_real =
      std::floor(std::log2(static_cast<double>(w.size())) / (2.0 * std::log2(static_cast<double>(r))));
  const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(k_real));
  return empirical_block_entropy(w, k) / static_cast<double>(k);
}

double lz78_scheme(WordView w) {
  require_length(w, 2, "lz78");
  const std::size_t r = std::max<std::size_t>(2, inferred_alphabet(w));
  std::size_t phrases = 0;
  bool partial = false;
  if (r <= 16) {
    std::vector<Index> child(r, 0);  // node 0 is the root
    Index node = 0;
    for (Symbol a : w) {
      const std::size_t slot = static_cast<std::size_t>(node) * r + a;
      if (child[slot] != 0) {
        node = child[slot];
        partial = true;
        continue;
      }
      const Index fresh = static_cast<Index>(child.size() / r);
      child[slot] = fresh;
      child.resize(child.size() + r, 0);
      ++phrases;
      node = 0;
      partial = false;
    }
  } else {
    std::unordered_map<std::uint64_t, Index> child;
    Index node = 0;
    Index next = 1;
    for (Symbol a : w) {
      const std::uint64_t key = (static_cast<std::uint64_t>(node) << 8) | a;
      auto it = child.find(key);
      if (it != child.end()) {
        node = it->second;
        partial = true;
        continue;
      }
      child.emplace(key, next++);
      ++phrases;
      node = 0;
      partial = false;
    }
  }
  if (partial) ++phrases;
  const double c = static_cast<double>(phrases);
  return c * std::log2(c) / static_cast<double>(w.size());
}

double returntime_scheme(WordView w) {
  require_length(w, 16, "returntime");
  const std::size_t n = w.size();
  const auto sa = suffix_array(w);
  const auto lpf = longest_previous_factor(sa, lcp_array(w, sa));
  CompensatedSum total;
  const std::size_t first = n - n / 4;
  for (std::size_t i = first; i < n; ++i) {
    const double l = std::max<double>(1.0, lpf[i]);
    total += std::log2(static_cast<double>(i)) / l;
  }
  return total.value() / static_cast<double>(n - first);
}

double freq_scheme(WordView w, Symbol symbol, std::size_t alphabet_size) {
  require_length(w, 1, "freq");
  if (symbol >= alphabet_size) {
    throw Error(ErrorCode::kSymbolOutOfAlphabet, "symbol " + std::to_string(symbol) +
                                                     " outside alphabet of size " +
                                                     std::to_string(alphabet_size));
  }
  const auto hits = std::count(w.begin(), w.end(), symbol);
  return static_cast<double>(hits) / static_cast<double>(w.size());
}

SchemeDescriptor SchemeDescriptor::parse(std::string_view text) {
  SchemeDescriptor d;
  const auto colon = text.find(':');
  d.name = std::string(text.substr(0, colon));
  const std::string_view arg = colon == std::string_view::npos ? "" : text.substr(colon + 1);
  if (d.name == "plugin") {
    if (!arg.empty()) d.plugin_policy = plugin_policy_from_string(arg);
  } else if (d.name == "freq") {
    if (!arg.empty()) {
      int v = -1;
      try {
        v = std::stoi(std::string(arg));
      } catch (const std::exception&) {
      }
      if (v < 0 || v >= static_cast<int>(kMaxAlphabet)) {
        throw Error(ErrorCode::kValidation, "freq symbol must be an integer in [0, 256)");
      }
      d.symbol = static_cast<Symbol>(v);
    }
  } else if (d.name == "lz78" || d.name == "returntime") {
    if (!arg.empty()) throw Error(ErrorCode::kValidation, d.name + " takes no parameter");
  } else {
    throw Error(ErrorCode::kUnsupportedName, "unknown scheme '" + d.name + "'");
  }
  return d;
}

std::string SchemeDescriptor::label() const {
  if (name == "plugin" && plugin_policy != PluginPolicy::kConditional) {
    return name + ":" + std::string(to_string(plugin_policy));
  }
  if (name == "freq") return name + ":" + std::to_string(symbol);
  return name;
}

void SchemeDescriptor::validate(std::size_t alphabet_size) const {
  if (name == "freq") {
    if (symbol >= alphabet_size) {
      throw Error(ErrorCode::kValidation, "freq symbol " + std::to_string(symbol) +
                                              " outside alphabet of size " +
                                              std::to_string(alphabet_size));
    }
  } else if (name != "plugin" && name != "lz78" && name != "returntime") {
    throw Error(ErrorCode::kUnsupportedName, "unknown scheme '" + name + "'");
  }
}

double SchemeDescriptor::evaluate(WordView w, std::size_t alphabet_size) const {
  if (name == "plugin") return plugin_scheme(w, plugin_policy, alphabet_size);
  if (name == "lz78") return lz78_scheme(w);
  if (name == "returntime") return returntime_scheme(w);
  if (name == "freq") return freq_scheme(w, symbol, alphabet_size);
  throw Error(ErrorCode::kUnsupportedName, "unknown scheme '" + name + "'");
}

std::vector<SchemeDescriptor> all_schemes() {
  return {SchemeDescriptor::parse("plugin"), SchemeDescriptor::parse("lz78"),
          SchemeDescriptor::parse("returntime"), SchemeDescriptor::parse("freq")};
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

double ConvergenceReport::fraction_within(double eps) const {
  if (estimates.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& row : estimates) hits += std::fabs(row.back() - limit_estimate) <= eps;
  return static_cast<double>(hits) / static_cast<double>(estimates.size());
}

ConvergenceReport convergence_report(const SchemeDescriptor& scheme, const ProcessModel& model,
                                     const std::vector<std::size_t>& n_grid, std::size_t trials,
                                     double epsilon, std::uint64_t master_seed,
                                     std::string model_name) {
  if (n_grid.empty()) throw Error(ErrorCode::kValidation, "n_grid is empty");
  for (std::size_t j = 0; j < n_grid.size(); ++j) {
    if (n_grid[j] == 0 || (j > 0 && n_grid[j] <= n_grid[j - 1])) {
      throw Error(ErrorCode::kValidation, "n_grid must be positive and increasing");
    }
  }
  if (trials < 10) throw Error(ErrorCode::kValidation, "at least 10 trials are required");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kValidation, "epsilon must be positive");
  scheme.validate(model.alphabet_size());

  ConvergenceReport report;
  report.scheme = scheme;
  report.model = model_name.empty() ? std::string(model.kind()) : std::move(model_name);
  report.n_grid = n_grid;
  report.trials = trials;
  report.master_seed = master_seed;
  report.epsilon = epsilon;
  report.seeds.resize(trials);
  report.estimates.assign(trials, std::vector<double>(n_grid.size(), 0.0));
  const std::size_t r = model.alphabet_size();
  parallel_for(trials, [&](std::size_t t) {
    const std::uint64_t seed = derive_seed(master_seed, t);
    report.seeds[t] = seed;
    const Word path = model.sample(n_grid.back(), seed);
    for (std::size_t j = 0; j < n_grid.size(); ++j) {
      report.estimates[t][j] = scheme.evaluate(WordView(path).first(n_grid[j]), r);
    }
  });
  std::vector<double> last;
  for (const auto& row : report.estimates) last.push_back(row.back());
  report.limit_estimate = median(last);
  report.in_probability_fraction = report.fraction_within(epsilon);
  return report;
}

}  // namespace ergolab
