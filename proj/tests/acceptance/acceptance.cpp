#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ergolab/labcli.hpp"
#include "ergolab/recode.hpp"
#include "ergolab/rng.hpp"
#include "ergolab/towers.hpp"

using namespace ergolab;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(ERGOLAB_SOURCE_DIR) / "configs";

struct Outcome {
  bool passed = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    passed = passed && ok;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ExperimentReport run(const std::string& config_name) {
  return run_experiment(load_config(kConfigs / (config_name + ".json")));
}

void add_verdicts(Outcome& out, const ExperimentReport& report) {
  for (const auto& v : report.verdicts) out.require(v.passed, v.name + " (" + v.detail + ")");
  for (const auto& e : report.errors) out.require(false, e);
}

void add_runtime(Outcome& out, double seconds, double limit) {
  out.require(seconds <= limit, "runtime " + fmt(seconds) + " s of " + fmt(limit) + " s");
}

Outcome entropy_oracle() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  add_verdicts(out, run("entropy_markov"));
  add_runtime(out, seconds_since(start), 300.0);
  return out;
}

Outcome zero_entropy() {
  Outcome out;
  add_verdicts(out, run("zero_entropy"));
  return out;
}

Outcome invariance() {
  Outcome out;
  add_verdicts(out, run("invariance"));
  return out;
}

Outcome relative_smb() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  add_verdicts(out, run("relative_smb"));
  add_runtime(out, seconds_since(start), 60.0);
  return out;
}

Outcome smb_trajectories() {
  Outcome out;
  const auto report = run("smb_markov");
  std::size_t paths = 0, within = 0;
  for (const auto& row : report.rows) {
    if (row.n != 10000) continue;
    ++paths;
    within += std::fabs(row.estimate - 0.468996) <= 0.05;
  }
  out.require(paths == 50, std::to_string(paths) + " paths of length 10^4");
  out.require(within >= 48, std::to_string(within) + "/50 final values within 0.05 of 0.468996");
  return out;
}

Outcome recoder() {
  Outcome out;
  add_verdicts(out, run("recode_roundtrip"));

  // 10^3 distinct random heights up to 4096, one sampled path each.
  std::vector<std::size_t> heights(4096 - 32 + 1);
  for (std::size_t i = 0; i < heights.size(); ++i) heights[i] = 32 + i;
  Rng rng(derive_seed(2718, 6));
  for (std::size_t i = 0; i < 1000; ++i) std::swap(heights[i], heights[i + rng.below(heights.size() - i)]);
  heights.resize(1000);
  std::sort(heights.begin(), heights.end());
  std::string grid;
  for (auto h : heights) grid += (grid.empty() ? "" : ",") + std::to_string(h);
  const auto config = parse_config(
      R"({"experiment": "recode-roundtrip", "name": "recode_random_heights",
          "model": "../models/joint_coin_over_constant.json", "n_grid": [)" + grid + R"(],
          "trials": 1, "epsilon": 0.125, "k": 8, "path_length": 8192, "master_seed": 6})",
      kConfigs, "recode_random_heights");
  const auto report = run_experiment(config);
  add_verdicts(out, report);
  out.require(report.rows.size() == 1000, std::to_string(report.rows.size()) + " random heights");

  struct Example {
    std::size_t n, k;
    double h, h_prime, eps, C;
  };
  // C = ((h - h' + eps) log_k 2 + 4 eps) / (1 - (h' + eps) log_k 2)
  const std::vector<Example> examples = {
      {1000, 2, 0.0, 0.0, 0.01, 0.05 / 0.99},
      {1000, 4, 1.0, 0.5, 0.01, 0.295 / 0.745},
      {100, 16, 0.5, 0.25, 0.1, 0.4875 / 0.9125},
      {64, 8, 1.0, 0.0, 0.125, (1.125 / 3 + 0.5) / (1 - 0.125 / 3)},
  };
  double worst = 0.0;
  bool M_ok = true;
  for (const auto& e : examples) {
    const auto b = compute_M(e.n, e.h, e.h_prime, e.k, e.eps);
    worst = std::max(worst, std::fabs(b.C - e.C));
    M_ok = M_ok && b.M == std::min<std::size_t>(e.n, std::ceil(std::max(e.eps, e.C) * e.n));
  }
  out.require(worst <= 1e-12 && M_ok, "compute_M hand examples, worst |dC| " + fmt(worst));
  return out;
}

Outcome transplant() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  add_verdicts(out, run("transplant"));
  add_runtime(out, seconds_since(start), 120.0);
  return out;
}

Outcome tower_invariants() {
  Outcome out;
  Rng rng(derive_seed(31337, 8));
  std::size_t kakutani_bad = 0, rohlin_bad = 0, rohlin_calls = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + rng.below(2000);
    const std::size_t N = 1 + rng.below(40);
    Word path(n);
    for (auto& x : path) x = static_cast<Symbol>(rng.below(2));
    Word pattern(1 + rng.below(std::min<std::size_t>(N, 4)));
    for (auto& x : pattern) x = static_cast<Symbol>(rng.below(2));
    const auto k = kakutani_decompose(path, pattern, N);
    bool ok = k.is_partition();
    for (const auto& t : k.towers) ok = ok && t.height >= N;
    kakutani_bad += !ok;

    const double eps = 0.01 + 0.98 * rng.uniform();
    if (N <= eps * static_cast<double>(n)) {
      ++rohlin_calls;
      const auto r = rohlin_tower(n, N, eps);
      bool good = r.is_partition() && r.leftover_fraction() <= static_cast<double>(N) / n + 1e-15 &&
                  r.leftover_fraction() <= eps;
      for (const auto& t : r.towers) good = good && t.height == N;
      rohlin_bad += !good;
    } else {
      bool threw = false;
      try {
        rohlin_tower(n, N, eps);
      } catch (const Error& e) {
        threw = e.code() == ErrorCode::kInfeasibleTower;
      }
      rohlin_bad += !threw;
    }
  }
  out.require(kakutani_bad == 0, "kakutani_decompose 10^4 calls, " + std::to_string(kakutani_bad) + " bad");
  out.require(rohlin_bad == 0, "rohlin_tower 10^4 calls (" + std::to_string(rohlin_calls) +
                                   " feasible), " + std::to_string(rohlin_bad) + " bad");
  return out;
}

Outcome reproducibility() {
  Outcome out;
  for (const char* name : {"quick_entropy", "smb_markov", "relative_smb", "recode_roundtrip",
                           "transplant", "transplant_identity"}) {
    // Second run uses a different worker count.
    setenv("ERGOLAB_THREADS", "1", 1);
    const auto a = report_csv(run(name));
    setenv("ERGOLAB_THREADS", "4", 1);
    const auto b = report_csv(run(name));
    unsetenv("ERGOLAB_THREADS");
    out.require(a == b, std::string(name) + " " + std::to_string(a.size()) + " bytes");
  }
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"entropy oracle agreement on Markov flip-0.1", entropy_oracle},
      {"zero-entropy rotations", zero_entropy},
      {"invariant vs non-invariant schemes", invariance},
      {"relative SMB counting bounds and coverage", relative_smb},
      {"SMB trajectories", smb_trajectories},
      {"recoder correctness", recoder},
      {"transplant l1 bound", transplant},
      {"tower invariants", tower_invariants},
      {"reproducible CSV", reproducibility},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    const auto start = std::chrono::steady_clock::now();
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome.require(false, std::string("error: ") + e.what());
    }
    failures += !outcome.passed;
    std::printf("criterion %zu %-45s %s  [%.1f s] %s\n", i + 1, criteria[i].first.c_str(),
                outcome.passed ? "PASS" : "FAIL", seconds_since(start), outcome.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
