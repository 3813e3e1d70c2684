// ergolab command-line front end. Exit codes: 0 all verdicts pass,
// 1 a verdict failed, 2 validation error, 3 runtime error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "ergolab/entropy.hpp"
#include "ergolab/labcli.hpp"
#include "ergolab/recode.hpp"
#include "ergolab/rng.hpp"
#include "ergolab/towers.hpp"

using namespace ergolab;

namespace {

enum Exit { kPass = 0, kVerdictFailure = 1, kValidationError = 2, kRuntimeError = 3 };

struct Options {
  std::string config;
  std::string model;
  std::vector<std::string> schemes;
  std::vector<std::size_t> lengths;
  std::size_t trials = 0;
  std::uint64_t seed = 1;
  double epsilon = 0.0;
  std::string out;
  std::string format = "text";

  // subcommand extras
  std::vector<std::size_t> heights;
  std::size_t k = 0;
  std::string pattern;
  std::size_t min_height = 0;
  std::size_t block_length = 6;
  double delta = 0.05;
  double beta = 0.1;
  std::string conditional = "joint";
  std::string codebooks;
};

void add_common(CLI::App* cmd, Options& o, bool schemes) {
  cmd->add_option("--model", o.model, "Model file")->required()->check(CLI::ExistingFile);
  if (schemes) cmd->add_option("--scheme", o.schemes, "Scheme descriptor (repeatable)");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--format", o.format, "Report format")
      ->check(CLI::IsMember({"csv", "json", "text"}));
}

int emit(const ExperimentReport& report, const Options& o) {
  const auto format = report_format_from_string(o.format);
  if (!o.out.empty()) {
    for (const auto& path : emit_reports(report, {format}, o.out)) std::cerr << "wrote " << path.string() << "\n";
  } else {
    switch (format) {
      case ReportFormat::kCsv: std::cout << report_csv(report); break;
      case ReportFormat::kJson: std::cout << report_json(report); break;
      case ReportFormat::kText: std::cout << report_text(report); break;
    }
  }
  return report.passed() ? kPass : kVerdictFailure;
}

ExperimentConfig base_config(ExperimentKind kind, const Options& o, const std::string& name) {
  ExperimentConfig c;
  c.kind = kind;
  c.name = name;
  c.models = {o.model};
  c.master_seed = o.seed;
  c.epsilon = o.epsilon;
  c.trials = o.trials;
  c.n_grid = o.lengths;
  c.echo = "{}";
  return c;
}

int simulate(const Options& o) {
  const auto model = load_model(o.model);
  const std::size_t n = o.lengths.front();
  std::string text;
  if (model.is_joint()) {
    const auto [p, q] = model.joint->sample(n, o.seed);
    text = word_to_string(p) + "\n" + word_to_string(q) + "\n";
  } else {
    text = word_to_string(model.process->sample(n, o.seed)) + "\n";
  }
  if (o.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(o.out);
    out << text;
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + o.out);
  }
  return kPass;
}

int decompose(const Options& o) {
  const auto model = load_model(o.model);
  if (model.is_joint()) throw Error(ErrorCode::kValidation, "decompose needs a single-process model");
  const std::size_t n = o.lengths.front();
  const auto path = model.process->sample(n, o.seed);
  TowerDecomposition d;
  if (!o.pattern.empty()) {
    d = kakutani_decompose(path, word_from_string(o.pattern), o.min_height);
  } else if (!o.heights.empty()) {
    d = rohlin_tower(n, o.heights.front(), o.epsilon);
  } else {
    throw Error(ErrorCode::kValidation, "decompose needs --pattern or --height");
  }
  const bool partition = d.is_partition();
  const bool tall = d.towers.empty() || d.min_height() >= (o.pattern.empty() ? o.heights.front() : o.min_height);
  if (o.format == "json" || o.format == "csv") {
    std::cout << (o.format == "csv" ? "base,height\n" : "[\n");
    for (std::size_t i = 0; i < d.towers.size(); ++i) {
      const auto& t = d.towers[i];
      if (o.format == "csv") {
        std::cout << t.base << "," << t.height << "\n";
      } else {
        std::cout << "  {\"base\": " << t.base << ", \"height\": " << t.height << "}"
                  << (i + 1 < d.towers.size() ? ",\n" : "\n");
      }
    }
    if (o.format == "json") std::cout << "]\n";
  } else {
    std::cout << "path length      " << n << "\n"
              << "towers           " << d.towers.size() << "\n"
              << "min height       " << (d.towers.empty() ? 0 : d.min_height()) << "\n"
              << "leftover         " << d.leftover.size() << " (" << d.leftover_fraction() << ")\n"
              << "partition        " << (partition ? "yes" : "NO") << "\n";
  }
  return partition && tall ? kPass : kVerdictFailure;
}

int relative_smb(const Options& o) {
  auto c = base_config(ExperimentKind::kRelativeSmb, o, "relative-smb");
  if (c.trials == 0) c.trials = 1;
  return emit(run_experiment(c), o);
}

int recode(const Options& o) {
  auto c = base_config(ExperimentKind::kRecodeRoundtrip, o, "recode");
  if (c.trials == 0) c.trials = 1;
  c.n_grid = o.heights;
  c.path_length = o.lengths.empty() ? 0 : o.lengths.front();
  c.k = o.k;
  const auto report = run_experiment(c);
  if (!o.codebooks.empty()) {
    // The family of the first height's first trial, rebuilt from its seed.
    const auto model = load_model(o.model);
    const std::size_t height = c.n_grid.front();
    const std::size_t length = c.path_length ? c.path_length : 100 * c.n_grid.back();
    const auto ce = conditional_entropies(*model.joint, c.entropy_length);
    const auto [p, q] = model.joint->sample(length, derive_seed(derive_seed(o.seed, height), 0));
    const auto towers = rohlin_tower(length, height, 0.5);
    const auto family = observed_codebooks(*model.joint, p, q, towers, c.k, c.epsilon, ce.s, ce.t);
    save_codebooks(o.codebooks, family.books);
    if (load_codebooks(o.codebooks) != family.books) {
      throw Error(ErrorCode::kInternalConsistency, "codebook file did not round trip");
    }
    std::cerr << "wrote " << o.codebooks << "\n";
  }
  return emit(report, o);
}

int transplant(const Options& o) {
  auto c = base_config(ExperimentKind::kTransplant, o, "transplant");
  if (c.trials == 0) c.trials = 1;
  c.n_grid = o.heights;
  c.path_length = o.lengths.empty() ? 0 : o.lengths.front();
  c.block_length = o.block_length;
  c.delta = o.delta;
  c.beta = o.beta;
  c.conditional = o.conditional;
  return emit(run_experiment(c), o);
}

int experiment(const Options& o) {
  auto c = load_config(o.config);
  if (!o.model.empty()) c.models = {o.model};
  if (!o.schemes.empty()) c.schemes = o.schemes;
  if (!o.lengths.empty()) c.n_grid = o.lengths;
  if (o.trials) c.trials = o.trials;
  if (o.epsilon > 0) c.epsilon = o.epsilon;
  const auto report = run_experiment(c);
  if (o.out.empty() && !c.output.empty()) {
    for (const auto& path : emit_reports(report, {ReportFormat::kCsv, ReportFormat::kJson, ReportFormat::kText},
                                         c.output)) {
      std::cerr << "wrote " << path.string() << "\n";
    }
    std::cout << report_text(report);
    return report.passed() ? kPass : kVerdictFailure;
  }
  return emit(report, o);
}

bool is_validation(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation:
    case ErrorCode::kInvalidModel:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kUnsupportedName:
    case ErrorCode::kEpsilonTooLarge:
    case ErrorCode::kInfeasibleTower:
    case ErrorCode::kBudgetExceeded:
      return true;
    default:
      return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ergolab: finitary observation of stationary processes"};
  app.require_subcommand(1);
  // One Options per subcommand: default_val() writes through immediately.
  Options sim_o, est_o, smb_o, rel_o, dec_o, rec_o, tr_o, exp_o;

  auto* sim = app.add_subcommand("simulate", "Sample a path from a model");
  sim->add_option("--model", sim_o.model, "Model file")->required()->check(CLI::ExistingFile);
  sim->add_option("--length", sim_o.lengths, "Path length")->required()->expected(1);
  sim->add_option("--seed", sim_o.seed, "Seed");
  sim->add_option("--out", sim_o.out, "Output file (default stdout)");

  auto* est = app.add_subcommand("estimate", "Convergence report of entropy schemes");
  add_common(est, est_o, true);
  est->add_option("--length", est_o.lengths, "Lengths (repeatable, increasing)")->required();
  est->add_option("--trials", est_o.trials, "Trials")->default_val(10);
  est->add_option("--epsilon", est_o.epsilon, "In-probability tolerance")->default_val(0.05);

  auto* smb = app.add_subcommand("smb", "-(1/n) log2 mu(x_1..x_n) along sample paths");
  add_common(smb, smb_o, false);
  smb->add_option("--length", smb_o.lengths, "Lengths (repeatable, increasing)")->required();
  smb->add_option("--trials", smb_o.trials, "Paths")->default_val(50);
  smb->add_option("--epsilon", smb_o.epsilon, "Tolerance")->default_val(0.05);

  auto* rel = app.add_subcommand("relative-smb", "Construct A_n for a joint model");
  add_common(rel, rel_o, false);
  rel->add_option("--length", rel_o.lengths, "Block lengths n (repeatable)")->required();
  rel->add_option("--epsilon", rel_o.epsilon, "epsilon")->default_val(0.3);

  auto* dec = app.add_subcommand("decompose", "Tower decomposition of a sampled path");
  dec->add_option("--model", dec_o.model, "Model file")->required()->check(CLI::ExistingFile);
  dec->add_option("--length", dec_o.lengths, "Path length")->required()->expected(1);
  dec->add_option("--seed", dec_o.seed, "Seed");
  dec->add_option("--pattern", dec_o.pattern, "Kakutani base pattern, e.g. 0110");
  dec->add_option("--min-height", dec_o.min_height, "Kakutani minimum height")->default_val(16);
  dec->add_option("--height", dec_o.heights, "Rohlin tower height")->expected(1);
  dec->add_option("--epsilon", dec_o.epsilon, "Rohlin epsilon")->default_val(0.1);
  dec->add_option("--format", dec_o.format, "Output format")->check(CLI::IsMember({"csv", "json", "text"}));

  auto* rec = app.add_subcommand("recode", "Recode and decode tower columns of a joint model");
  add_common(rec, rec_o, false);
  rec->add_option("--height", rec_o.heights, "Column heights (repeatable)")->required();
  rec->add_option("--length", rec_o.lengths, "Path length (default 100 x largest height)")->expected(1);
  rec->add_option("--k", rec_o.k, "Output alphabet")->required();
  rec->add_option("--epsilon", rec_o.epsilon, "epsilon")->default_val(0.125);
  rec->add_option("--trials", rec_o.trials, "Paths per height")->default_val(1);
  rec->add_option("--codebooks", rec_o.codebooks, "Write the first height's codebooks here");

  auto* tr = app.add_subcommand("transplant", "Relabel tower columns from a conditional");
  add_common(tr, tr_o, false);
  tr->add_option("--height", tr_o.heights, "Tower height L (repeatable)")->required();
  tr->add_option("--length", tr_o.lengths, "Path length (default 40 x largest height)")->expected(1);
  tr->add_option("--block-length", tr_o.block_length, "Block length N");
  tr->add_option("--delta", tr_o.delta, "delta");
  tr->add_option("--beta", tr_o.beta, "beta");
  tr->add_option("--epsilon", tr_o.epsilon, "Tower epsilon")->default_val(0.2);
  tr->add_option("--trials", tr_o.trials, "Paths")->default_val(1);
  tr->add_option("--conditional", tr_o.conditional, "joint | identity")
      ->check(CLI::IsMember({"joint", "identity"}));

  auto* exp = app.add_subcommand("experiment", "Run an experiment config");
  exp->add_option("--config", exp_o.config, "Config file")->required()->check(CLI::ExistingFile);
  exp->add_option("--model", exp_o.model, "Override the model")->check(CLI::ExistingFile);
  exp->add_option("--scheme", exp_o.schemes, "Override the schemes");
  exp->add_option("--length", exp_o.lengths, "Override n_grid");
  exp->add_option("--trials", exp_o.trials, "Override trials");
  exp->add_option("--seed", exp_o.seed, "Unused; the config's master_seed is authoritative");
  exp->add_option("--epsilon", exp_o.epsilon, "Override epsilon");
  exp->add_option("--out", exp_o.out, "Output directory");
  exp->add_option("--format", exp_o.format, "Report format")->check(CLI::IsMember({"csv", "json", "text"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kValidationError;
  }

  try {
    if (*sim) return simulate(sim_o);
    if (*est) {
      auto c = base_config(ExperimentKind::kEntropyConvergence, est_o, "estimate");
      c.schemes = est_o.schemes.empty() ? std::vector<std::string>{"all"} : est_o.schemes;
      return emit(run_experiment(c), est_o);
    }
    if (*smb) return emit(run_experiment(base_config(ExperimentKind::kSmb, smb_o, "smb")), smb_o);
    if (*rel) return relative_smb(rel_o);
    if (*dec) return decompose(dec_o);
    if (*rec) return recode(rec_o);
    if (*tr) return transplant(tr_o);
    if (*exp) return experiment(exp_o);
  } catch (const Error& e) {
    std::cerr << "ergolab: " << e.what() << "\n";
    return is_validation(e.code()) ? kValidationError : kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "ergolab: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kRuntimeError;
}
