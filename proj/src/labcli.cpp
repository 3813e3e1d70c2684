#include "ergolab/labcli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ergolab/entropy.hpp"
#include "ergolab/parallel.hpp"
#include "ergolab/recode.hpp"
#include "ergolab/rng.hpp"
#include "ergolab/schemes.hpp"
#include "ergolab/towers.hpp"

namespace ergolab {

namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::kValidation, what); }

constexpr std::pair<ExperimentKind, std::string_view> kKindNames[] = {
    {ExperimentKind::kEntropyConvergence, "entropy-convergence"},
    {ExperimentKind::kIndistinguishability, "indistinguishability"},
    {ExperimentKind::kSmb, "smb"},
    {ExperimentKind::kRelativeSmb, "relative-smb"},
    {ExperimentKind::kRecodeRoundtrip, "recode-roundtrip"},
    {ExperimentKind::kTransplant, "transplant"},
};

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_short(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

LoadedModel load_checked(const std::filesystem::path& path) {
  try {
    return load_model(path);
  } catch (const Error& e) {
    invalid("model " + path.string() + ": " + e.what());
  }
}

std::vector<SchemeDescriptor> expand_schemes(const std::vector<std::string>& names) {
  std::vector<SchemeDescriptor> out;
  for (const auto& name : names) {
    if (name == "all") {
      for (auto& s : all_schemes()) out.push_back(s);
    } else {
      out.push_back(SchemeDescriptor::parse(name));
    }
  }
  return out;
}

double symbol_frequency(const ProcessModel& model, Symbol a) {
  const Word u{a};
  return a < model.alphabet_size() ? model.cylinder_measure(u) : 0.0;
}

// Exact rate, or the conditional block-entropy bound at `length`.
double reference_rate(const ProcessModel& model, std::size_t length) {
  if (auto h = model.exact_entropy_rate()) return *h;
  return entropy_report(model, length).rate_conditional();
}

struct Context {
  const ExperimentConfig& config;
  ExperimentReport& report;
  std::string experiment;

  void row(const std::string& model, const std::string& scheme, std::size_t n, std::size_t trial,
           double estimate, double limit, bool within, std::uint64_t seed) {
    report.rows.push_back({experiment, model, scheme, n, trial, estimate, limit, within, seed});
  }
  void verdict(std::string name, std::string invariant, bool passed, std::string detail) {
    report.verdicts.push_back({std::move(name), std::move(invariant), passed, std::move(detail)});
  }
  template <class F>
  bool unit(const std::string& label, F&& body) {
    try {
      body();
      return true;
    } catch (const Error& e) {
      report.errors.push_back(label + ": " + e.what());
      return false;
    }
  }
};

std::vector<ConvergenceReport> convergence_rows(Context& ctx, const LoadedModel& model,
                                               const std::vector<SchemeDescriptor>& schemes) {
  const auto& c = ctx.config;
  std::vector<ConvergenceReport> reports;
  for (const auto& scheme : schemes) {
    ctx.unit(model.name + "/" + scheme.label(), [&] {
      auto r = convergence_report(scheme, *model.process, c.n_grid, c.trials, c.epsilon,
                                  c.master_seed, model.name);
      for (std::size_t t = 0; t < r.trials; ++t) {
        for (std::size_t j = 0; j < r.n_grid.size(); ++j) {
          const double x = r.estimates[t][j];
          ctx.row(model.name, scheme.label(), r.n_grid[j], t, x, r.limit_estimate,
                  std::fabs(x - r.limit_estimate) <= c.epsilon, r.seeds[t]);
        }
      }
      reports.push_back(std::move(r));
    });
  }
  return reports;
}

void run_entropy_convergence(Context& ctx) {
  const auto& c = ctx.config;
  const auto schemes = expand_schemes(c.schemes);
  for (const auto& path : c.models) {
    const auto model = load_model(path);
    for (const auto& r : convergence_rows(ctx, model, schemes)) {
      const auto label = r.scheme.label();
      const double tol = c.tolerance_for(label);
      if (r.scheme.is_entropy_scheme()) {
        if (auto h = model.process->exact_entropy_rate()) {
          ctx.verdict("oracle agreement: " + label + " on " + model.name,
                      "scheme limit within tolerance of the exact entropy rate",
                      std::fabs(r.limit_estimate - *h) <= tol,
                      "limit " + fmt_short(r.limit_estimate) + " vs rate " + fmt_short(*h) +
                          ", tolerance " + fmt_short(tol));
          continue;
        }
        ctx.verdict("convergence: " + label + " on " + model.name,
                    "fraction of trials within epsilon of the limit estimate",
                    r.in_probability_fraction >= c.required_fraction,
                    fmt_short(r.in_probability_fraction) + " within " + fmt_short(c.epsilon));
      } else {
        const double f = symbol_frequency(*model.process, r.scheme.symbol);
        ctx.verdict("oracle agreement: " + label + " on " + model.name,
                    "frequency limit equals the exact cylinder measure",
                    std::fabs(r.limit_estimate - f) <= tol,
                    "limit " + fmt_short(r.limit_estimate) + " vs measure " + fmt_short(f));
      }
    }
  }
}

void run_indistinguishability(Context& ctx) {
  const auto& c = ctx.config;
  const auto schemes = expand_schemes(c.schemes);
  std::map<std::string, std::vector<std::pair<std::string, double>>> limits;
  for (const auto& path : c.models) {
    const auto model = load_model(path);
    for (const auto& r : convergence_rows(ctx, model, schemes)) {
      const auto label = r.scheme.label();
      limits[label].emplace_back(model.name, r.limit_estimate);
      if (!r.scheme.is_entropy_scheme()) {
        const double f = symbol_frequency(*model.process, r.scheme.symbol);
        ctx.verdict("oracle agreement: " + label + " on " + model.name,
                    "frequency limit equals the exact cylinder measure",
                    std::fabs(r.limit_estimate - f) <= c.freq_tolerance,
                    "limit " + fmt_short(r.limit_estimate) + " vs measure " + fmt_short(f));
      }
    }
  }
  for (const auto& scheme : schemes) {
    const auto label = scheme.label();
    const auto& values = limits[label];
    if (values.size() < 2) continue;
    double lo = values.front().second, hi = lo;
    std::string detail;
    for (const auto& [name, x] : values) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
      detail += (detail.empty() ? "" : ", ") + name + " " + fmt_short(x);
    }
    if (scheme.is_entropy_scheme()) {
      ctx.verdict("invariance: " + label, "invariant scheme limits agree across codings",
                  hi - lo <= c.tolerance_for(label), detail);
    } else {
      ctx.verdict("separation: " + label, "non-invariant scheme separates the codings",
                  hi - lo > 2 * c.freq_tolerance, detail);
    }
  }
}

void run_smb(Context& ctx) {
  const auto& c = ctx.config;
  const std::size_t n = c.n_grid.back();
  for (const auto& path : c.models) {
    const auto model = load_model(path);
    std::vector<std::optional<SmbTrajectory>> paths(c.trials);
    std::vector<std::string> failures(c.trials);
    parallel_for(c.trials, [&](std::size_t t) {
      try {
        paths[t] = smb_trajectory(*model.process,
                                  model.process->sample(n, derive_seed(c.master_seed, t)));
      } catch (const Error& e) {
        failures[t] = e.what();
      }
    });
    const double limit = reference_rate(*model.process, c.entropy_length);
    std::size_t hits = 0, done = 0;
    for (std::size_t t = 0; t < c.trials; ++t) {
      if (!paths[t]) {
        ctx.report.errors.push_back(model.name + "/trial " + std::to_string(t) + ": " + failures[t]);
        continue;
      }
      ++done;
      for (std::size_t len : c.n_grid) {
        const double x = paths[t]->values[len - 1];
        ctx.row(model.name, "smb", len, t, x, limit, std::fabs(x - limit) <= c.epsilon,
                derive_seed(c.master_seed, t));
      }
      hits += std::fabs(paths[t]->final_value() - limit) <= c.epsilon;
    }
    const double fraction = c.trials ? static_cast<double>(hits) / static_cast<double>(c.trials) : 0;
    ctx.verdict("SMB concentration on " + model.name,
                "final -(1/n) log2 mu within epsilon of the entropy rate",
                done == c.trials && fraction >= c.required_fraction,
                std::to_string(hits) + "/" + std::to_string(c.trials) + " within " +
                    fmt_short(c.epsilon) + " of " + fmt_short(limit));
  }
}

void run_relative_smb(Context& ctx) {
  const auto& c = ctx.config;
  const auto model = load_model(c.models.front());
  double last_coverage = 0.0;
  bool last_done = false;
  for (std::size_t n : c.n_grid) {
    last_done = ctx.unit(model.name + "/n=" + std::to_string(n), [&] {
      const auto set = relative_smb_set(*model.joint, n, c.epsilon);
      const bool bounds = set.satisfies_counting_bounds();
      ctx.row(model.name, "relative-smb", n, 0, set.coverage, 1.0, set.coverage >= 1.0 - c.epsilon,
              0);
      ctx.verdict("counting bounds at n=" + std::to_string(n),
                  "|{u}| <= 2^((s+eps)n) and |A_n(u)| <= 2^((t-s+eps)n)", bounds,
                  std::to_string(set.distinct_u()) + " names, widest fiber " +
                      std::to_string(set.max_fiber()));
      last_coverage = set.coverage;
    });
  }
  ctx.verdict("coverage at n=" + std::to_string(c.n_grid.back()),
              "mu(A_n) reaches the configured coverage", last_done && last_coverage >= c.min_coverage,
              "coverage " + fmt_short(last_coverage) + ", required " + fmt_short(c.min_coverage));
}

struct RecodeOutcome {
  std::optional<PathRecoding> recoding;
  bool exact = false;
  bool within_bound = false;
  std::size_t columns_checked = 0;
  std::string error;
};

RecodeOutcome recode_trial(const JointModel& joint, const ExperimentConfig& c, std::size_t height,
                           std::size_t length, std::uint64_t seed, double s, double t) {
  RecodeOutcome out;
  const auto [p, q] = joint.sample(length, seed);
  const auto towers = rohlin_tower(length, height, 0.5);
  const auto family = observed_codebooks(joint, p, q, towers, c.k, c.epsilon, s, t);
  if (!family.atypical.empty()) {
    out.error = std::to_string(family.atypical.size()) + " atypical columns";
    return out;
  }
  out.recoding = recode_path(p, q, towers, family.books);
  bool exact = true;
  // Every (u, v) of every codebook, not only the ones on the path.
  for (const auto& [h, book] : family.books) {
    for (const auto& [u, vs] : book.fibers) {
      for (std::size_t i = 0; i < vs.size(); ++i) {
        const auto column = recode_column(u, i, book);
        const auto [du, dv] = decode_column(column.output, book);
        exact = exact && du == u && dv == vs[i] &&
                column.modified_positions.size() <= book.params.modification_bound();
        ++out.columns_checked;
      }
    }
  }
  const auto decoded = decode_path(out.recoding->recoded, family.books);
  exact = exact && decoded.columns.size() == towers.towers.size();
  for (std::size_t i = 0; exact && i < decoded.columns.size(); ++i) {
    const auto& col = decoded.columns[i];
    const auto& tower = towers.towers[i];
    const auto b = static_cast<std::ptrdiff_t>(tower.base);
    const auto e = b + static_cast<std::ptrdiff_t>(tower.height);
    exact = col.base == tower.base && col.height == tower.height &&
            col.u == Word(p.begin() + b, p.begin() + e) && col.v == Word(q.begin() + b, q.begin() + e);
  }
  out.exact = exact;
  out.within_bound = out.recoding->change_fraction <= out.recoding->change_bound;
  return out;
}

void run_recode(Context& ctx) {
  const auto& c = ctx.config;
  const auto model = load_model(c.models.front());
  const auto ce = conditional_entropies(*model.joint, c.entropy_length);
  const std::size_t units = c.n_grid.size() * c.trials;
  std::vector<RecodeOutcome> outcomes(units);
  std::vector<std::uint64_t> seeds(units);
  parallel_for(units, [&](std::size_t i) {
    const std::size_t height = c.n_grid[i / c.trials];
    seeds[i] = derive_seed(derive_seed(c.master_seed, height), i % c.trials);
    try {
      outcomes[i] = recode_trial(*model.joint, c, height, c.path_length, seeds[i], ce.s, ce.t);
    } catch (const Error& e) {
      outcomes[i].error = e.what();
    }
  });
  bool exact = true, bounded = true, typical = true;
  std::size_t checked = 0;
  double worst_margin = 1.0;
  for (std::size_t i = 0; i < units; ++i) {
    const std::size_t height = c.n_grid[i / c.trials];
    const auto& o = outcomes[i];
    if (!o.recoding) {
      ctx.report.errors.push_back(model.name + "/height " + std::to_string(height) + ": " + o.error);
      typical = false;
      continue;
    }
    exact = exact && o.exact;
    bounded = bounded && o.within_bound;
    checked += o.columns_checked;
    worst_margin = std::min(worst_margin, o.recoding->change_bound - o.recoding->change_fraction);
    ctx.row(model.name, "recode", height, i % c.trials, o.recoding->change_fraction,
            o.recoding->change_bound, o.exact && o.within_bound, seeds[i]);
  }
  ctx.verdict("typical columns", "every tower column lies in A_n of its height", typical,
              std::to_string(ctx.report.errors.size()) + " failed runs");
  ctx.verdict("decoder exactness", "decode(recode(u, i)) = (u, v_i) and full path decode", typical && exact,
              std::to_string(checked) + " codebook columns checked");
  ctx.verdict("change accounting", "change fraction <= C(eps) + 2 eps + leftover",
              typical && bounded, "smallest margin " + fmt_short(worst_margin));
}

void run_transplant(Context& ctx) {
  const auto& c = ctx.config;
  const auto model = load_model(c.models.front());
  const auto& joint = *model.joint;
  const bool identity = c.conditional == "identity";
  std::unique_ptr<ConditionalSource> source;
  if (identity) {
    source = std::make_unique<IdentityConditional>();
  } else {
    source = std::make_unique<JointConditional>(model.joint);
  }
  const std::size_t N = c.block_length;
  std::optional<BlockDistribution> exact;
  if (!identity) exact = joint.q_process().block_distribution(N);

  bool all_within = true;
  std::string detail;
  for (std::size_t L : c.n_grid) {
    for (std::size_t t = 0; t < c.trials; ++t) {
      const std::uint64_t seed = derive_seed(derive_seed(c.master_seed, L), t);
      const bool ok = ctx.unit(model.name + "/L=" + std::to_string(L), [&] {
        const auto y = joint.p_process().sample(c.path_length, seed);
        const auto towers = rohlin_tower(c.path_length, L, c.epsilon);
        const auto result = transplant_blocks(y, towers, *source, derive_seed(seed, 1));
        double estimate = 0.0, limit = 0.0;
        if (identity) {
          estimate = hamming_fraction(result.output, y);
        } else {
          const double windows = static_cast<double>(c.path_length - N + 1);
          estimate = l1_distance(
              empirical_block_distribution(result.output, N, joint.alphabet_q()), *exact);
          limit = c.delta + 3.0 * std::sqrt(std::exp2(static_cast<double>(N)) / windows);
        }
        const bool within = identity ? estimate == 0.0 : estimate <= limit;
        all_within = all_within && within;
        ctx.row(model.name, identity ? "transplant:identity" : "transplant", L, t, estimate, limit,
                within, seed);
        detail = (identity ? "change fraction " : "l1 ") + fmt_short(estimate) +
                 (identity ? "" : " vs bound " + fmt_short(limit));
      });
      all_within = all_within && ok;
    }
  }
  if (identity) {
    ctx.verdict("identity transplant", "point-mass conditional leaves the path unchanged",
                all_within, detail);
  } else {
    ctx.verdict("transplant l1 bound",
                "empirical N-blocks within delta + 3 sqrt(2^N / windows) of the exact X blocks",
                all_within, "last run: " + detail);
  }
}

ExperimentConfig with_defaults(ExperimentConfig c) {
  const std::size_t top = c.n_grid.empty() ? 0 : c.n_grid.back();
  if (c.path_length == 0) {
    if (c.kind == ExperimentKind::kRecodeRoundtrip) c.path_length = 100 * top;
    if (c.kind == ExperimentKind::kTransplant) c.path_length = 40 * top;
  }
  if (c.m_joint == 0) c.m_joint = c.block_length;
  return c;
}

void check(const ExperimentConfig& c);

bool row_less(const ReportRow& a, const ReportRow& b) {
  return std::tie(a.experiment, a.model, a.scheme, a.n, a.trial) <
         std::tie(b.experiment, b.model, b.scheme, b.n, b.trial);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        fields.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back();
    } else {
      fields.back() += ch;
    }
  }
  return fields;
}

constexpr std::string_view kCsvHeader =
    "experiment,model,scheme,n,trial,estimate,limit_estimate,within_epsilon,seed";

// JSON has no NaN or infinity; those travel as strings.
ordered number_json(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double number_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  invalid("report JSON has a non-numeric value '" + s + "'");
}

ordered row_json(const ReportRow& r) {
  ordered j;
  j["experiment"] = r.experiment;
  j["model"] = r.model;
  j["scheme"] = r.scheme;
  j["n"] = r.n;
  j["trial"] = r.trial;
  j["estimate"] = number_json(r.estimate);
  j["limit_estimate"] = number_json(r.limit_estimate);
  j["within_epsilon"] = r.within_epsilon;
  j["seed"] = r.seed;
  return j;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

ExperimentKind experiment_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  invalid("unknown experiment kind \"" + std::string(name) + "\"");
}

double ExperimentConfig::tolerance_for(const std::string& scheme) const {
  if (auto it = tolerances.find(scheme); it != tolerances.end()) return it->second;
  const auto base = scheme.substr(0, scheme.find(':'));
  if (auto it = tolerances.find(base); it != tolerances.end()) return it->second;
  return epsilon;
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                              std::string name) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    invalid(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) invalid("config must be a JSON object");
  static const std::set<std::string> known = {
      "experiment", "name", "model", "models", "scheme", "schemes", "n_grid", "n", "trials",
      "epsilon", "delta", "beta", "master_seed", "output", "tolerances", "freq_tolerance",
      "min_coverage", "required_fraction", "k", "path_length", "entropy_length", "block_length",
      "m_joint", "conditional"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) invalid("unknown config field \"" + key + "\"");
  }
  ExperimentConfig c;
  try {
    if (!j.contains("experiment")) invalid("config needs \"experiment\"");
    c.kind = experiment_kind_from_string(j.at("experiment").get<std::string>());
    c.name = j.value("name", name);
    if (j.contains("model")) c.models.push_back((base_dir / j.at("model").get<std::string>()).lexically_normal());
    for (const auto& m : j.value("models", std::vector<std::string>{})) c.models.push_back((base_dir / m).lexically_normal());
    if (j.contains("scheme")) c.schemes.push_back(j.at("scheme").get<std::string>());
    for (const auto& s : j.value("schemes", std::vector<std::string>{})) c.schemes.push_back(s);
    if (j.contains("n")) c.n_grid.push_back(j.at("n").get<std::size_t>());
    for (auto n : j.value("n_grid", std::vector<std::size_t>{})) c.n_grid.push_back(n);
    c.trials = j.value("trials", std::size_t{1});
    c.epsilon = j.value("epsilon", 0.0);
    c.delta = j.value("delta", 0.0);
    c.beta = j.value("beta", 0.0);
    c.master_seed = j.value("master_seed", std::uint64_t{0});
    if (j.contains("output")) c.output = (base_dir / j.at("output").get<std::string>()).lexically_normal();
    c.tolerances = j.value("tolerances", std::map<std::string, double>{});
    c.freq_tolerance = j.value("freq_tolerance", c.freq_tolerance);
    c.min_coverage = j.value("min_coverage", c.min_coverage);
    c.required_fraction = j.value("required_fraction", c.required_fraction);
    c.k = j.value("k", std::size_t{0});
    c.path_length = j.value("path_length", std::size_t{0});
    c.entropy_length = j.value("entropy_length", c.entropy_length);
    c.block_length = j.value("block_length", c.block_length);
    c.m_joint = j.value("m_joint", std::size_t{0});
    c.conditional = j.value("conditional", c.conditional);
  } catch (const json::exception& e) {
    invalid(std::string("config field has the wrong type: ") + e.what());
  }
  c.echo = j.dump();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path(), path.stem().string());
}

void validate(const ExperimentConfig& config) { check(with_defaults(config)); }

namespace {

void check(const ExperimentConfig& c) {
  if (c.models.empty()) invalid("model: at least one model is required");
  if (c.n_grid.empty()) invalid("n_grid: at least one length is required");
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
    if (c.n_grid[i] == 0) invalid("n_grid: lengths must be positive");
    if (i > 0 && c.n_grid[i] <= c.n_grid[i - 1]) invalid("n_grid: must be strictly increasing");
  }
  if (!(c.epsilon > 0.0)) invalid("epsilon: must be positive");
  if (c.trials == 0) invalid("trials: must be positive");
  std::vector<LoadedModel> models;
  for (const auto& path : c.models) models.push_back(load_checked(path));

  const bool needs_joint = c.kind == ExperimentKind::kRelativeSmb ||
                           c.kind == ExperimentKind::kRecodeRoundtrip ||
                           c.kind == ExperimentKind::kTransplant;
  for (const auto& m : models) {
    if (needs_joint != m.is_joint()) {
      invalid("model " + m.name + ": " + std::string(to_string(c.kind)) +
              (needs_joint ? " needs a joint model" : " needs a single-process model"));
    }
  }
  if (needs_joint && models.size() != 1) invalid("model: exactly one joint model is required");

  switch (c.kind) {
    case ExperimentKind::kEntropyConvergence:
    case ExperimentKind::kIndistinguishability: {
      if (c.kind == ExperimentKind::kIndistinguishability && models.size() < 2) {
        invalid("models: indistinguishability compares at least two models");
      }
      if (c.trials < 10) invalid("trials: convergence reports need at least 10 trials");
      if (c.schemes.empty()) invalid("schemes: at least one scheme is required");
      std::vector<SchemeDescriptor> schemes;
      try {
        schemes = expand_schemes(c.schemes);
      } catch (const Error& e) {
        invalid(std::string("schemes: ") + e.what());
      }
      for (const auto& m : models) {
        for (const auto& s : schemes) {
          try {
            s.validate(m.process->alphabet_size());
            if (s.name == "returntime" && c.n_grid.front() < 16) {
              throw Error(ErrorCode::kInsufficientData, "returntime needs n >= 16");
            }
          } catch (const Error& e) {
            invalid("schemes: " + s.label() + " on " + m.name + ": " + e.what());
          }
        }
      }
      break;
    }
    case ExperimentKind::kSmb:
      if (!(c.required_fraction > 0.0 && c.required_fraction <= 1.0)) {
        invalid("required_fraction: must lie in (0, 1]");
      }
      for (const auto& m : models) {
        if (!m.process->exact_entropy_rate() &&
            m.process->enumeration_size(c.entropy_length) > kBlockCapacity) {
          invalid("entropy_length: reference rate of " + m.name + " is not enumerable");
        }
      }
      break;
    case ExperimentKind::kRelativeSmb: {
      const auto& pair = models.front().joint->pair_process();
      for (std::size_t n : c.n_grid) {
        if (pair.enumeration_size(n) > kJointCapacity) {
          invalid("n_grid: joint blocks of length " + std::to_string(n) + " exceed the enumeration capacity");
        }
      }
      if (!(c.min_coverage >= 0.0 && c.min_coverage <= 1.0)) invalid("min_coverage: must lie in [0, 1]");
      break;
    }
    case ExperimentKind::kRecodeRoundtrip: {
      const auto& joint = *models.front().joint;
      if (c.epsilon >= 1.0) invalid("epsilon: must lie in (0, 1)");
      if (c.k < 2 || c.k > kMaxAlphabet) invalid("k: recoder alphabet must lie in [2, 256]");
      if (c.k < joint.alphabet_p()) invalid("k: smaller than the P alphabet");
      if (c.path_length < 2 * c.n_grid.back()) invalid("path_length: must be at least twice the largest height");
      if (joint.pair_process().enumeration_size(c.entropy_length) > kJointCapacity) {
        invalid("entropy_length: joint blocks are not enumerable");
      }
      const auto ce = conditional_entropies(joint, c.entropy_length);
      for (std::size_t h : c.n_grid) {
        try {
          RecodingParams::make(h, ce.t, ce.s, c.k, c.epsilon);
        } catch (const Error& e) {
          invalid("n_grid: height " + std::to_string(h) + ": " + e.what());
        }
      }
      break;
    }
    case ExperimentKind::kTransplant: {
      if (c.conditional != "joint" && c.conditional != "identity") {
        invalid("conditional: must be \"joint\" or \"identity\"");
      }
      if (c.epsilon >= 1.0) invalid("epsilon: must lie in (0, 1)");
      if (c.block_length == 0 || c.block_length > 12) invalid("block_length: must lie in [1, 12]");
      if (c.conditional == "joint") {
        if (!(c.delta > 0.0 && c.delta < c.epsilon / 2)) invalid("delta: must lie in (0, epsilon/2)");
        const auto& joint = *models.front().joint;
        if (joint.q_process().enumeration_size(c.block_length) > kBlockCapacity) {
          invalid("block_length: X blocks are not enumerable");
        }
      }
      for (std::size_t L : c.n_grid) {
        const TransplantParams p{c.block_length, c.delta, L, c.beta, c.m_joint};
        try {
          if (c.conditional == "joint") p.validate();
          rohlin_tower(c.path_length, L, c.epsilon);
        } catch (const Error& e) {
          invalid("n_grid: tower height " + std::to_string(L) + ": " + e.what());
        }
      }
      if (c.path_length < c.block_length) invalid("path_length: shorter than block_length");
      break;
    }
  }
}

}  // namespace

bool ExperimentReport::passed() const {
  return !verdicts.empty() &&
         std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

ExperimentReport run_experiment(const ExperimentConfig& raw) {
  const auto config = with_defaults(raw);
  check(config);
  ExperimentReport report;
  report.experiment = config.name;
  report.kind = std::string(to_string(config.kind));
  report.config = config.echo;
  Context ctx{config, report, config.name};
  const Stopwatch clock;
  switch (config.kind) {
    case ExperimentKind::kEntropyConvergence: run_entropy_convergence(ctx); break;
    case ExperimentKind::kIndistinguishability: run_indistinguishability(ctx); break;
    case ExperimentKind::kSmb: run_smb(ctx); break;
    case ExperimentKind::kRelativeSmb: run_relative_smb(ctx); break;
    case ExperimentKind::kRecodeRoundtrip: run_recode(ctx); break;
    case ExperimentKind::kTransplant: run_transplant(ctx); break;
  }
  report.timings.emplace_back("total", clock.seconds());
  if (report.rows.empty() && !report.errors.empty()) {
    throw Error(ErrorCode::kInternalConsistency, "every row failed; first: " + report.errors.front());
  }
  if (!report.errors.empty()) {
    ctx.verdict("rows completed", "per-row computations succeed", false,
                std::to_string(report.errors.size()) + " rows failed");
  }
  std::stable_sort(report.rows.begin(), report.rows.end(), row_less);
  return report;
}

ReportFormat report_format_from_string(std::string_view name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  if (name == "text") return ReportFormat::kText;
  invalid("format must be csv, json or text");
}

std::string report_csv(const ExperimentReport& report) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : report.rows) {
    out += csv_field(r.experiment) + ',' + csv_field(r.model) + ',' + csv_field(r.scheme) + ',' +
           std::to_string(r.n) + ',' + std::to_string(r.trial) + ',' + fmt(r.estimate) + ',' +
           fmt(r.limit_estimate) + ',' + (r.within_epsilon ? "true" : "false") + ',' +
           std::to_string(r.seed) + '\n';
  }
  return out;
}

std::vector<ReportRow> rows_from_csv(std::string_view text) {
  std::vector<ReportRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) invalid("CSV header does not match");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) invalid("CSV row has " + std::to_string(f.size()) + " fields");
    try {
      rows.push_back({f[0], f[1], f[2], std::stoull(f[3]), std::stoull(f[4]), std::stod(f[5]),
                      std::stod(f[6]), f[7] == "true", std::stoull(f[8])});
    } catch (const std::logic_error&) {
      invalid("CSV row is malformed: " + line);
    }
  }
  return rows;
}

std::string report_json(const ExperimentReport& report) {
  ordered j;
  j["experiment"] = report.experiment;
  j["kind"] = report.kind;
  j["config"] = report.config.empty() ? ordered::object() : ordered::parse(report.config);
  j["passed"] = report.passed();
  j["verdicts"] = ordered::array();
  for (const auto& v : report.verdicts) {
    j["verdicts"].push_back(
        {{"name", v.name}, {"invariant", v.invariant}, {"passed", v.passed}, {"detail", v.detail}});
  }
  j["errors"] = report.errors;
  j["timings"] = ordered::object();
  for (const auto& [name, seconds] : report.timings) j["timings"][name] = seconds;
  j["rows"] = ordered::array();
  for (const auto& r : report.rows) j["rows"].push_back(row_json(r));
  return j.dump(2) + "\n";
}

ExperimentReport report_from_json(std::string_view text) {
  ExperimentReport report;
  try {
    const auto j = json::parse(text);
    report.experiment = j.at("experiment").get<std::string>();
    report.kind = j.value("kind", std::string{});
    if (j.contains("config")) report.config = j.at("config").dump();
    const json verdicts = j.value("verdicts", json::array());
    for (const auto& v : verdicts) {
      report.verdicts.push_back({v.at("name"), v.value("invariant", ""), v.at("passed"),
                                 v.value("detail", "")});
    }
    report.errors = j.value("errors", std::vector<std::string>{});
    const json timings = j.value("timings", json::object());
    for (const auto& [name, seconds] : timings.items()) {
      report.timings.emplace_back(name, seconds.get<double>());
    }
    for (const auto& r : j.at("rows")) {
      report.rows.push_back({r.at("experiment"), r.at("model"), r.at("scheme"), r.at("n"),
                             r.at("trial"), number_from_json(r.at("estimate")),
                             number_from_json(r.at("limit_estimate")),
                             r.at("within_epsilon"), r.at("seed")});
    }
  } catch (const json::exception& e) {
    invalid(std::string("report JSON is malformed: ") + e.what());
  }
  return report;
}

std::string report_text(const ExperimentReport& report) {
  std::ostringstream out;
  out << "experiment " << report.experiment << " (" << report.kind << "): "
      << (report.passed() ? "PASS" : "FAIL") << "\n\n";
  std::size_t width = 8;
  for (const auto& v : report.verdicts) width = std::max(width, v.name.size());
  for (const auto& v : report.verdicts) {
    out << (v.passed ? "  pass  " : "  FAIL  ") << v.name << std::string(width - v.name.size() + 2, ' ')
        << v.detail << "\n";
  }
  if (!report.errors.empty()) {
    out << "\nerrors:\n";
    for (const auto& e : report.errors) out << "  " << e << "\n";
  }
  struct Group {
    std::vector<double> estimates;
    double limit = 0.0;
    std::size_t within = 0;
  };
  std::map<std::tuple<std::string, std::string, std::size_t>, Group> groups;
  for (const auto& r : report.rows) {
    auto& g = groups[{r.model, r.scheme, r.n}];
    g.estimates.push_back(r.estimate);
    g.limit = r.limit_estimate;
    g.within += r.within_epsilon;
  }
  if (!groups.empty()) {
    char line[200];
    std::snprintf(line, sizeof line, "\n%-24s %-22s %10s %7s %12s %12s %8s\n", "model", "scheme", "n",
                  "trials", "median", "limit", "within");
    out << line;
    for (auto& [key, g] : groups) {
      const auto& [model, scheme, n] = key;
      std::snprintf(line, sizeof line, "%-24s %-22s %10zu %7zu %12.6f %12.6f %8.3f\n", model.c_str(),
                    scheme.c_str(), n, g.estimates.size(), median(g.estimates), g.limit,
                    static_cast<double>(g.within) / static_cast<double>(g.estimates.size()));
      out << line;
    }
  }
  for (const auto& [name, seconds] : report.timings) {
    out << "\n" << name << " time: " << fmt_short(seconds) << " s";
  }
  out << "\n";
  return out.str();
}

std::vector<std::filesystem::path> emit_reports(const ExperimentReport& report,
                                                const std::vector<ReportFormat>& formats,
                                                const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (auto format : formats) {
    std::string body, ext;
    switch (format) {
      case ReportFormat::kCsv: body = report_csv(report); ext = ".csv"; break;
      case ReportFormat::kJson: body = report_json(report); ext = ".json"; break;
      case ReportFormat::kText: body = report_text(report); ext = ".txt"; break;
    }
    const auto path = out_dir / (report.experiment + ext);
    std::ofstream out(path, std::ios::binary);
    out << body;
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    written.push_back(path);
  }
  return written;
}

}  // namespace ergolab
