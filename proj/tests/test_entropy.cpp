#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "ergolab/entropy.hpp"
#include "ergolab/rng.hpp"
#include "oracles.hpp"

using namespace ergolab;

namespace {

using Rows = std::vector<std::vector<double>>;

constexpr double kFlipRate = 0.4689955935892812;

std::shared_ptr<HiddenJointModel> constant_joint() {
  return std::make_shared<HiddenJointModel>(MarkovChain(Rows{{1.0}}), std::vector<Symbol>{0},
                                            std::vector<Symbol>{0});
}

std::shared_ptr<HiddenJointModel> fair_diagonal() {
  return std::make_shared<HiddenJointModel>(MarkovChain(Rows{{0.5, 0.5}, {0.5, 0.5}}),
                                            std::vector<Symbol>{0, 1}, std::vector<Symbol>{0, 1});
}

std::shared_ptr<HiddenJointModel> flip_identity() {
  return std::make_shared<HiddenJointModel>(MarkovChain(Rows{{0.9, 0.1}, {0.1, 0.9}}),
                                            std::vector<Symbol>{0, 1}, std::vector<Symbol>{0, 1});
}

std::shared_ptr<HiddenJointModel> two_fair_bits() {
  return std::make_shared<HiddenJointModel>(MarkovChain(Rows(4, std::vector<double>(4, 0.25))),
                                            std::vector<Symbol>{0, 0, 1, 1},
                                            std::vector<Symbol>{0, 1, 0, 1});
}

Rows random_positive_chain(Rng& rng, std::size_t m) {
  Rows t(m, std::vector<double>(m));
  for (auto& row : t) {
    double total = 0;
    for (auto& x : row) total += (x = 0.05 + rng.uniform());
    for (auto& x : row) x /= total;
  }
  return t;
}

void for_each_word(std::size_t n, std::size_t r, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> w(n, 0);
  while (true) {
    f(w);
    std::size_t i = 0;
    while (i < n && ++w[i] == static_cast<int>(r)) w[i++] = 0;
    if (i == n) return;
  }
}

}  // namespace

TEST_CASE("partition_entropy examples") {
  CHECK(partition_entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25}) == doctest::Approx(2.0));
  CHECK(partition_entropy(std::vector<double>{1.0, 0.0}) == 0.0);
  CHECK(partition_entropy(std::vector<double>{0.9, 0.1}) == doctest::Approx(kFlipRate).epsilon(1e-12));
  CHECK_THROWS_AS(partition_entropy(std::vector<double>{1.2, -0.2}), Error);
  CHECK_THROWS_AS(partition_entropy(std::vector<double>{0.5, 0.4}), Error);
}

TEST_CASE("partition_entropy lies between 0 and log2 of the support") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(1 + rng.below(30));
    double total = 0;
    for (auto& x : p) total += (x = rng.uniform() < 0.2 ? 0.0 : rng.uniform());
    if (total == 0) continue;
    for (auto& x : p) x /= total;
    const double h = partition_entropy(p);
    CHECK(h >= 0.0);
    CHECK(h <= std::log2(static_cast<double>(p.size())) + 1e-12);
    CHECK(h == doctest::Approx(oracle::entropy_bits(p)).epsilon(1e-12));
  }
}

TEST_CASE("block_entropy examples") {
  IidModel coin({0.5, 0.5});
  CHECK(block_entropy(coin, 5) == doctest::Approx(5.0));

  const Fixed128 alpha = parse_fraction(constants::kGoldenConjugate);
  auto rotation = std::make_shared<RotationModel>(alpha, std::vector<Fixed128>{Fixed128{0} - alpha});
  CHECK(rotation->block_distribution(8).support_size() == 9);
  CHECK(block_entropy(*rotation, 8) <= std::log2(9.0) + 1e-12);

  auto flip = make_symmetric_flip(0.1);
  CHECK(std::fabs(block_entropy(*flip, 4) - block_entropy(*flip, 3) - kFlipRate) < 1e-6);

  try {
    block_entropy(coin, 23);
    FAIL("expected capacity error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCapacity);
  }
}

TEST_CASE("block entropies of lumped chains match state-path enumeration") {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Rows t = random_positive_chain(rng, 3);
    const std::vector<Symbol> labels{0, static_cast<Symbol>(rng.below(2)), 1};
    MarkovModel model(MarkovChain(t), labels, 2);
    const auto pi = oracle::stationary_by_power(t);
    for (std::size_t n = 1; n <= 6; ++n) {
      std::vector<double> masses;
      for_each_word(n, 2, [&](const std::vector<int>& w) {
        masses.push_back(oracle::markov_cylinder(t, pi, labels, w));
      });
      CHECK(block_entropy(model, n) == doctest::Approx(oracle::entropy_bits(masses)).epsilon(1e-9));
    }
  }
}

TEST_CASE("entropy reports satisfy monotonicity, subadditivity and the sandwich") {
  std::vector<ModelPtr> models{
      make_symmetric_flip(0.1),
      std::make_shared<IidModel>(std::vector<double>{0.2, 0.3, 0.5}),
      std::make_shared<MarkovModel>(MarkovChain(Rows{{0.5, 0.3, 0.2}, {0.1, 0.6, 0.3}, {0.4, 0.1, 0.5}}),
                                    std::vector<Symbol>{0, 1, 1}),
      make_rotation(constants::kSqrt2Minus1, "0.3"),
  };
  for (const auto& model : models) {
    const auto report = entropy_report(*model, 10);
    const auto& h = report.block_entropies;
    REQUIRE(h.size() == 10);
    for (std::size_t k = 1; k <= h.size(); ++k) {
      CHECK(h[k - 1] == doctest::Approx(block_entropy(*model, k)).epsilon(1e-12));
    }
    for (std::size_t k = 1; k < h.size(); ++k) {
      CHECK(h[k] >= h[k - 1] - 1e-9);
      CHECK(h[k] / (k + 1) <= h[k - 1] / k + 1e-9);
      if (k >= 2) CHECK(h[k] - h[k - 1] <= h[k - 1] - h[k - 2] + 1e-9);
    }
    for (std::size_t a = 1; a <= 5; ++a)
      for (std::size_t b = 1; b <= 5; ++b) CHECK(h[a + b - 1] <= h[a - 1] + h[b - 1] + 1e-9);
    CHECK(report.rate_upper() >= report.rate_conditional() - 1e-9);
    if (auto rate = model->exact_entropy_rate()) {
      CHECK(report.rate_conditional() >= *rate - 1e-6);
    }
  }
}

TEST_CASE("smb_trajectory examples") {
  IidModel coin({0.5, 0.5});
  for (double v : smb_trajectory(coin, coin.sample(500, 3)).values) CHECK(v == doctest::Approx(1.0));

  auto flip = make_symmetric_flip(0.1);
  CHECK(std::fabs(smb_trajectory(*flip, flip->sample(10000, 2)).final_value() - kFlipRate) <= 0.02);

  const Fixed128 alpha = parse_fraction(constants::kGoldenConjugate);
  RotationModel sturmian(alpha, {Fixed128{0} - alpha});
  CHECK(smb_trajectory(sturmian, sturmian.sample(10000, 2)).final_value() <=
        std::log2(10001.0) / 10000.0);
}

TEST_CASE("Sturmian trajectories stay near log2(n)/n") {
  // n + 1 cut points split the circle into gaps no shorter than about
  // 1/(3(n + 1)) for the golden rotation.
  const Fixed128 alpha = parse_fraction(constants::kGoldenConjugate);
  RotationModel sturmian(alpha, {Fixed128{0} - alpha});
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    CHECK(smb_trajectory(sturmian, sturmian.sample(10000, seed)).final_value() <=
          std::log2(3.0 * 10001.0) / 10000.0);
  }
}

TEST_CASE("smb_trajectory is the normalized log cylinder measure") {
  auto model = std::make_shared<MarkovModel>(
      MarkovChain(Rows{{0.5, 0.3, 0.2}, {0.1, 0.6, 0.3}, {0.4, 0.1, 0.5}}), std::vector<Symbol>{0, 1, 1});
  const Word path = model->sample(60, 8);
  const auto traj = smb_trajectory(*model, path);
  REQUIRE(traj.values.size() == path.size());
  for (std::size_t n = 1; n <= path.size(); ++n) {
    const double direct = -std::log2(model->cylinder_measure(WordView(path).first(n))) / n;
    CHECK(traj.values[n - 1] == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("smb_trajectory rejects impossible paths") {
  MarkovModel model(MarkovChain(Rows{{0.0, 1.0}, {0.5, 0.5}}), {0, 1});
  try {
    smb_trajectory(model, word_from_string("0100"));
    FAIL("expected impossible-path error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kImpossiblePath);
  }
}

TEST_CASE("smb trajectories converge in probability") {
  auto flip = make_symmetric_flip(0.1);
  int close = 0;
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    const Word path = flip->sample(10000, derive_seed(77, trial));
    close += std::fabs(smb_trajectory(*flip, path).final_value() - kFlipRate) <= 0.05;
  }
  CHECK(close >= 48);
}

TEST_CASE("relative_smb_set examples") {
  auto constant = constant_joint();
  for (std::size_t n : {1, 5, 17}) {
    const auto set = relative_smb_set(*constant, n, 0.1);
    REQUIRE(set.pair_count() == 1);
    CHECK(set.contains(Word(n, 0), Word(n, 0)));
    CHECK(set.coverage == doctest::Approx(1.0));
  }

  const auto diag = relative_smb_set(*fair_diagonal(), 5, 0.1);
  CHECK(diag.pair_count() == 32);
  CHECK(diag.distinct_u() == 32);
  for (const auto& [u, vs] : diag.fibers) {
    REQUIRE(vs.size() == 1);
    CHECK(vs[0] == u);
  }
  CHECK(std::log2(32.0) < diag.u_bound_log2());

  const auto bits = relative_smb_set(*two_fair_bits(), 4, 0.2);
  CHECK(bits.s == doctest::Approx(1.0));
  CHECK(bits.t == doctest::Approx(2.0));
  CHECK(bits.pair_count() == 256);
  CHECK(bits.distinct_u() == 16);
  CHECK(bits.max_fiber() == 16);
  CHECK(bits.coverage == doctest::Approx(1.0));
  CHECK(bits.satisfies_counting_bounds());
}

TEST_CASE("relative_smb_set errors") {
  try {
    relative_smb_set(*two_fair_bits(), 4, 0.2, 1.5, 1.0);
    FAIL("expected internal-consistency error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInternalConsistency);
  }
  try {
    relative_smb_set(*two_fair_bits(), 13, 0.2);
    FAIL("expected capacity error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCapacity);
  }
}

TEST_CASE("relative_smb_set matches exhaustive enumeration") {
  Rng rng(21);
  for (int trial = 0; trial < 6; ++trial) {
    const Rows t = random_positive_chain(rng, 4);
    const std::vector<Symbol> lp{0, 0, 1, 1};
    const std::vector<Symbol> lq{0, static_cast<Symbol>(rng.below(2)), 1, static_cast<Symbol>(rng.below(2))};
    HiddenJointModel model(MarkovChain(t), lp, lq);
    const auto pi = oracle::stationary_by_power(t);
    const std::size_t n = 4;
    const double eps = 0.1 + 0.1 * trial;

    std::map<std::vector<int>, double> pair_mass;
    std::map<std::vector<int>, double> u_mass;
    std::vector<int> pair_labels(4);
    for (std::size_t s = 0; s < 4; ++s) pair_labels[s] = lp[s] + 2 * lq[s];
    for_each_word(n, 4, [&](const std::vector<int>& w) {
      const double m = oracle::markov_cylinder(t, pi, pair_labels, w);
      if (m > 0) pair_mass[w] = m;
    });
    for_each_word(n, 2, [&](const std::vector<int>& w) { u_mass[w] = oracle::markov_cylinder(t, pi, lp, w); });
    auto entropy_of = [&](std::size_t len, bool joint) {
      std::map<std::vector<int>, double> marg;
      for (const auto& [w, m] : joint ? pair_mass : u_mass) marg[{w.begin(), w.begin() + len}] += m;
      std::vector<double> ps;
      for (const auto& [w, m] : marg) ps.push_back(m);
      return oracle::entropy_bits(ps);
    };
    const double s = entropy_of(n, false) - entropy_of(n - 1, false);
    const double tt = entropy_of(n, true) - entropy_of(n - 1, true);

    const auto set = relative_smb_set(model, n, eps);
    CHECK(set.s == doctest::Approx(s).epsilon(1e-9));
    CHECK(set.t == doctest::Approx(tt).epsilon(1e-9));
    CHECK(set.satisfies_counting_bounds());

    const double ut = std::exp2(-(s + eps) * n);
    const double vt = std::exp2(-(tt - s + eps) * n);
    double coverage = 0;
    std::size_t expected = 0;
    for (const auto& [w, m] : pair_mass) {
      std::vector<int> u(n), v(n);
      for (std::size_t i = 0; i < n; ++i) {
        u[i] = w[i] % 2;
        v[i] = w[i] / 2;
      }
      const double mu = u_mass[u];
      // Skip pairs sitting on a threshold; rounding may decide either way.
      if (std::fabs(mu / ut - 1) < 1e-9 || std::fabs(m / mu / vt - 1) < 1e-9) continue;
      const bool member = mu > ut && m / mu > vt;
      CHECK(set.contains(Word(u.begin(), u.end()), Word(v.begin(), v.end())) == member);
      if (member) {
        coverage += m;
        ++expected;
      }
    }
    CHECK(set.pair_count() == expected);
    CHECK(set.coverage == doctest::Approx(coverage).epsilon(1e-9));
  }
}

TEST_CASE("coverage_growth examples") {
  const std::vector<std::size_t> small{2, 4, 6};
  for (double c : coverage_growth(*fair_diagonal(), 0.1, small)) CHECK(c == doctest::Approx(1.0));

  const std::vector<std::size_t> grid{4, 8, 12};
  const auto growth = coverage_growth(*flip_identity(), 0.3, grid);
  CHECK(growth[0] < growth[2]);
  CHECK(growth[2] > 0.9);

  const std::vector<std::size_t> one{1};
  CHECK(coverage_growth(*flip_identity(), 2.0, one)[0] == doctest::Approx(1.0));
}
