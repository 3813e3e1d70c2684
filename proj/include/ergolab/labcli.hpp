#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ergolab/modelio.hpp"

namespace ergolab {

enum class ExperimentKind {
  kEntropyConvergence,
  kIndistinguishability,
  kSmb,
  kRelativeSmb,
  kRecodeRoundtrip,
  kTransplant,
};

std::string_view to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(std::string_view name);

/// Parsed experiment file. Paths are resolved against the config's
/// directory. Unset optional numbers take per-kind defaults in validate().
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kEntropyConvergence;
  std::string name;
  std::vector<std::filesystem::path> models;
  std::vector<std::string> schemes;
  std::vector<std::size_t> n_grid;
  std::size_t trials = 1;
  double epsilon = 0.0;
  double delta = 0.0;
  double beta = 0.0;
  std::uint64_t master_seed = 0;
  std::filesystem::path output;
  std::map<std::string, double> tolerances;  // per scheme label
  double freq_tolerance = 0.005;
  double min_coverage = 0.9;
  double required_fraction = 0.96;
  std::size_t k = 0;                // recoder output alphabet
  std::size_t path_length = 0;
  std::size_t entropy_length = 8;   // block length for s and t
  std::size_t block_length = 6;     // transplant N; n_grid holds L
  std::size_t m_joint = 0;
  std::string conditional = "joint";
  std::string echo;                 // canonical JSON of the input

  double tolerance_for(const std::string& scheme) const;
};

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {},
                              std::string name = "experiment");
ExperimentConfig load_config(const std::filesystem::path& path);

struct ReportRow {
  std::string experiment;
  std::string model;
  std::string scheme;
  std::size_t n = 0;
  std::size_t trial = 0;
  double estimate = 0.0;
  double limit_estimate = 0.0;
  bool within_epsilon = false;
  std::uint64_t seed = 0;

  bool operator==(const ReportRow&) const = default;
};

struct Verdict {
  std::string name;
  std::string invariant;  // the property the verdict checks
  bool passed = false;
  std::string detail;
};

struct ExperimentReport {
  std::string experiment;
  std::string kind;
  std::string config;  // echo
  std::vector<ReportRow> rows;
  std::vector<Verdict> verdicts;
  std::vector<std::string> errors;
  std::vector<std::pair<std::string, double>> timings;  // seconds

  bool passed() const;
};

/// Loads every referenced model and checks each precondition the config
/// can violate. Throws validation errors naming the offending field.
void validate(const ExperimentConfig& config);

/// Validates, then runs. Rows come out sorted by
/// (experiment, model, scheme, n, trial).
ExperimentReport run_experiment(const ExperimentConfig& config);

enum class ReportFormat { kCsv, kJson, kText };
ReportFormat report_format_from_string(std::string_view name);

std::string report_csv(const ExperimentReport& report);
std::string report_json(const ExperimentReport& report);
std::string report_text(const ExperimentReport& report);
ExperimentReport report_from_json(std::string_view text);
std::vector<ReportRow> rows_from_csv(std::string_view text);

/// Writes <out_dir>/<experiment>.<csv|json|txt>; returns the paths.
std::vector<std::filesystem::path> emit_reports(const ExperimentReport& report,
                                                const std::vector<ReportFormat>& formats,
                                                const std::filesystem::path& out_dir);

}  // namespace ergolab
