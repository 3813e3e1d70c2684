#include <doctest.h>

#include <cmath>
#include <map>

#include "ergolab/models.hpp"
#include "ergolab/rng.hpp"
#include "oracles.hpp"

using namespace ergolab;

namespace {

using Rows = std::vector<std::vector<double>>;

// Two independent fair bits: state = 2*a + b.
std::shared_ptr<HiddenJointModel> two_fair_bits() {
  std::vector<std::vector<double>> t(4, std::vector<double>(4, 0.25));
  return std::make_shared<HiddenJointModel>(MarkovChain(t), std::vector<Symbol>{0, 0, 1, 1},
                                            std::vector<Symbol>{0, 1, 0, 1});
}

// A 3-state chain lumped to two symbols.
std::shared_ptr<MarkovModel> lumped() {
  return std::make_shared<MarkovModel>(
      MarkovChain({{0.5, 0.3, 0.2}, {0.1, 0.6, 0.3}, {0.4, 0.1, 0.5}}), std::vector<Symbol>{0, 1, 1});
}

std::vector<int> to_ints(const Word& w) { return {w.begin(), w.end()}; }

Word random_word(Rng& rng, std::size_t n, std::size_t r) {
  Word w(n);
  for (auto& x : w) x = static_cast<Symbol>(rng.below(r));
  return w;
}

std::vector<ModelPtr> all_model_kinds() {
  auto rotation = make_rotation(constants::kGoldenConjugate, "0.5");
  return {
      std::make_shared<IidModel>(std::vector<double>{0.3, 0.7}),
      make_symmetric_flip(0.1),
      lumped(),
      rotation,
      std::make_shared<ProductModel>(make_symmetric_flip(0.2), rotation),
  };
}

}  // namespace

TEST_CASE("fixed-point fractions round trip through decimal") {
  const Fixed128 g = parse_fraction(constants::kGoldenConjugate);
  CHECK(format_fraction(g, 30) == "0.618033988749894848204586834365");
  CHECK(parse_fraction("0.5") == (Fixed128{1} << 127));
  CHECK(parse_fraction("0") == 0);
  CHECK(fraction_to_double(g) == doctest::Approx(0.6180339887498949));
  CHECK_THROWS_AS(parse_fraction("1.5"), Error);
  CHECK_THROWS_AS(parse_fraction("0.12x"), Error);
  // Formatting with 40 digits and re-parsing loses at most one grid step.
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const Fixed128 x = (Fixed128{rng.next()} << 64) | rng.next();
    const Fixed128 back = parse_fraction(format_fraction(x, 45));
    CHECK(x - back <= 1);
  }
}

TEST_CASE("sample examples") {
  IidModel constant({1.0});
  CHECK(constant.sample(5, 123) == Word(5, 0));

  auto flip = make_symmetric_flip(0.1);
  CHECK(flip->sample(1000, 9) == flip->sample(1000, 9));
  CHECK(flip->sample(1000, 9) != flip->sample(1000, 10));

  const Word w = flip->sample(1000000, 2024);
  std::size_t ones = 0;
  for (Symbol s : w) ones += s;
  CHECK(std::fabs(static_cast<double>(ones) / 1e6 - 0.5) <= 0.01);

  for (const auto& model : all_model_kinds()) {
    CHECK(model->sample(777, 5) == model->sample(777, 5));
  }
  CHECK_THROWS_AS(flip->sample(0, 1), Error);
}

TEST_CASE("cylinder_measure examples") {
  auto half = make_rotation(constants::kGoldenConjugate, "0.5");
  CHECK(half->cylinder_measure(Word{0}) == doctest::Approx(0.5).epsilon(1e-15));
  // [0,1/2) intersected with [0,1/2) - alpha = [1 - alpha, 1/2).
  const double alpha = 0.6180339887498948482;
  CHECK(half->cylinder_measure(Word{0, 0}) == doctest::Approx(alpha - 0.5).epsilon(1e-14));
  CHECK(half->cylinder_measure(Word{0, 0}) == doctest::Approx(0.118034).epsilon(1e-5));

  auto flip = make_symmetric_flip(0.1);
  CHECK(flip->cylinder_measure(Word{0, 1}) == doctest::Approx(0.05).epsilon(1e-14));

  try {
    flip->cylinder_measure(Word{0, 2});
    FAIL("expected symbol-out-of-alphabet");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSymbolOutOfAlphabet);
  }
}

TEST_CASE("Markov cylinders agree with state-path enumeration") {
  auto model = lumped();
  const auto& t = model->chain().transition();
  const auto pi = oracle::stationary_by_power(t);
  for (std::size_t i = 0; i < pi.size(); ++i) {
    CHECK(model->chain().stationary()[i] == doctest::Approx(pi[i]).epsilon(1e-10));
  }
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const Word u = random_word(rng, 1 + rng.below(8), 2);
    const double expected = oracle::markov_cylinder(t, pi, model->labeling(), to_ints(u));
    CHECK(model->cylinder_measure(u) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("rotation cylinders agree with a grid count") {
  auto model = std::make_shared<RotationModel>(
      parse_fraction(constants::kSqrt2Minus1),
      std::vector<Fixed128>{parse_fraction("0.25"), parse_fraction("0.6")},
      std::vector<Symbol>{0, 1, 0});
  const double alpha = 0.41421356237309504880;
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const Word u = model->sample(1 + rng.below(6), rng.next());
    const double grid = oracle::rotation_cylinder_grid(alpha, {0.0, 0.25, 0.6}, {0, 1, 0}, to_ints(u));
    CHECK(std::fabs(model->cylinder_measure(u) - grid) <= 4.0 * 6 / (1u << 20));
  }
}

TEST_CASE("cylinder consistency for every model kind") {
  Rng rng(99);
  for (const auto& model : all_model_kinds()) {
    const std::size_t r = model->alphabet_size();
    for (int trial = 0; trial < 40; ++trial) {
      // Sample-derived words have positive measure; random ones mostly not.
      Word u = trial % 2 ? model->sample(1 + rng.below(12), rng.next())
                         : random_word(rng, 1 + rng.below(12), r);
      const double mu = model->cylinder_measure(u);
      double right = 0.0, left = 0.0;
      for (std::size_t a = 0; a < r; ++a) {
        Word ua = u;
        ua.push_back(static_cast<Symbol>(a));
        Word au{static_cast<Symbol>(a)};
        au.insert(au.end(), u.begin(), u.end());
        right += model->cylinder_measure(ua);
        left += model->cylinder_measure(au);
      }
      CHECK(std::fabs(right - mu) <= 1e-9);
      CHECK(std::fabs(left - mu) <= 1e-9);
    }
  }
}

TEST_CASE("sampling matches exact block distributions") {
  std::vector<ModelPtr> binary = {
      std::make_shared<IidModel>(std::vector<double>{0.3, 0.7}), make_symmetric_flip(0.1), lumped(),
      make_rotation(constants::kGoldenConjugate, "0.5")};
  for (const auto& model : binary) {
    const Word w = model->sample(1000000, 4242);
    for (std::size_t n : {1u, 4u, 8u}) {
      const double dist =
          l1_distance(empirical_block_distribution(w, n, 2), model->block_distribution(n));
      CHECK_MESSAGE(dist <= 3.0 * std::sqrt(std::pow(2.0, n) / 1e6), model->kind(), " N=", n);
    }
  }
}

TEST_CASE("Sturmian block complexity") {
  const Fixed128 alpha = parse_fraction(constants::kGoldenConjugate);
  // Coding by [0, 1 - alpha), [1 - alpha, 1): n + 1 blocks.
  RotationModel sturmian(alpha, {Fixed128{0} - alpha});
  // Coding by halves: the cut points {0, 1/2} - j alpha are all distinct.
  RotationModel halves(alpha, {parse_fraction("0.5")});
  for (std::size_t n = 1; n <= 64; ++n) {
    CHECK(sturmian.block_distribution(n).support_size() == n + 1);
    CHECK(halves.block_distribution(n).support_size() == 2 * n);
  }
}

TEST_CASE("exact block distributions are consistent with cylinders") {
  for (const auto& model : all_model_kinds()) {
    const auto d = model->block_distribution(5);
    CHECK(std::fabs(d.total() - 1.0) <= 1e-9);
    for (const auto& [block, p] : d.weights()) {
      CHECK(p == doctest::Approx(model->cylinder_measure(block)).epsilon(1e-9));
    }
  }
  CHECK_THROWS_AS(make_symmetric_flip(0.1)->block_distribution(23), Error);
}

TEST_CASE("exact_entropy_rate examples") {
  IidModel fair({0.5, 0.5});
  CHECK(*fair.exact_entropy_rate() == doctest::Approx(1.0));
  CHECK(*make_symmetric_flip(0.1)->exact_entropy_rate() ==
        doctest::Approx(oracle::entropy_bits({0.9, 0.1})).epsilon(1e-14));
  CHECK(*make_symmetric_flip(0.1)->exact_entropy_rate() == doctest::Approx(0.468996).epsilon(1e-6));
  CHECK(*make_rotation(constants::kGoldenConjugate, "0.5")->exact_entropy_rate() == 0.0);
  CHECK_FALSE(lumped()->exact_entropy_rate().has_value());
}

TEST_CASE("model validation") {
  auto code_of = [](auto&& make) {
    try {
      make();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  CHECK(code_of([] { MarkovChain({{0.0, 1.0}, {1.0, 0.0}}); }) == ErrorCode::kInvalidModel);
  CHECK(code_of([] { MarkovChain({{1.0, 0.0}, {0.0, 1.0}}); }) == ErrorCode::kInvalidModel);
  CHECK(code_of([] { MarkovChain({{0.5, 0.4}, {0.5, 0.5}}); }) == ErrorCode::kInvalidModel);
  CHECK(code_of([] { IidModel({0.5, 0.6}); }) == ErrorCode::kInvalidModel);
  CHECK(code_of([] { make_rotation("0.5", "0.25"); }) == ErrorCode::kInvalidModel);
  CHECK(code_of([] {
          make_rotation("0.3333333333333333333333333333333333333333", "0.5");
        }) == ErrorCode::kInvalidModel);
  CHECK(code_of([] {
          RotationModel(parse_fraction(constants::kPiMinus3),
                        {parse_fraction("0.5"), parse_fraction("0.25")});
        }) == ErrorCode::kInvalidModel);
  // The trivial 1-state chain is a valid (constant) process.
  MarkovModel constant(MarkovChain(Rows{{1.0}}), {0});
  CHECK(constant.cylinder_measure(Word(4, 0)) == 1.0);
}

TEST_CASE("joint measures") {
  auto flip = make_symmetric_flip(0.1);
  HiddenJointModel same(flip->chain(), {0, 1}, {0, 1});
  const Word u = word_from_string("0110");
  CHECK(same.conditional_measure(u, u) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(same.conditional_measure(u, word_from_string("0111")) == 0.0);

  auto bits = two_fair_bits();
  for (std::size_t code = 0; code < 64; ++code) {
    Word a(3), b(3);
    for (std::size_t i = 0; i < 3; ++i) {
      a[i] = static_cast<Symbol>((code >> i) & 1);
      b[i] = static_cast<Symbol>((code >> (3 + i)) & 1);
    }
    CHECK(bits->joint_cylinder_measure(a, b) == doctest::Approx(1.0 / 64).epsilon(1e-12));
  }

  try {
    HiddenJointModel stuck(MarkovChain({{1.0, 0.0}, {0.5, 0.5}}), {0, 1}, {0, 0});
    FAIL("reducible chain must be rejected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidModel);
  }
}

TEST_CASE("conditional measures sum to one") {
  HiddenJointModel model(MarkovChain({{0.6, 0.2, 0.1, 0.1},
                                      {0.1, 0.7, 0.1, 0.1},
                                      {0.2, 0.2, 0.5, 0.1},
                                      {0.25, 0.25, 0.25, 0.25}}),
                         {0, 0, 1, 1}, {0, 1, 1, 2});
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 1 + rng.below(5);
    const Word u = model.p_process().sample(n, rng.next());
    double total = 0.0;
    std::size_t combos = 1;
    for (std::size_t i = 0; i < n; ++i) combos *= 3;
    for (std::size_t c = 0; c < combos; ++c) {
      Word v(n);
      std::size_t x = c;
      for (std::size_t i = 0; i < n; ++i, x /= 3) v[i] = static_cast<Symbol>(x % 3);
      total += model.conditional_measure(u, v);
    }
    CHECK(std::fabs(total - 1.0) <= 1e-9);
  }
  try {
    HiddenJointModel absorbing(MarkovChain({{0.5, 0.5}, {1.0, 0.0}}), {0, 1}, {0, 1});
    absorbing.conditional_measure(word_from_string("11"), word_from_string("11"));
    FAIL("expected null conditioning");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNullConditioning);
  }
}

TEST_CASE("conditional sampling follows mu(v|u)") {
  HiddenJointModel model(MarkovChain({{0.6, 0.2, 0.2}, {0.3, 0.4, 0.3}, {0.1, 0.3, 0.6}}),
                         {0, 0, 1}, {0, 1, 1});
  const Word u = word_from_string("001");
  std::map<Word, int> counts;
  const int draws = 40000;
  for (int i = 0; i < draws; ++i) ++counts[model.sample_conditional_q(u, derive_seed(17, i))];
  for (const auto& [v, c] : counts) {
    const double p = model.conditional_measure(u, v);
    CHECK(std::fabs(c / static_cast<double>(draws) - p) <= 4.0 * std::sqrt(p * (1 - p) / draws) + 1e-3);
  }
}

TEST_CASE("product joint model") {
  auto product = std::make_shared<ProductModel>(make_symmetric_flip(0.1),
                                                make_rotation(constants::kGoldenConjugate, "0.5"));
  ProductJointModel joint(product);
  CHECK(joint.alphabet_p() == 2);
  CHECK(joint.alphabet_q() == 4);
  const auto [u, v] = joint.sample(50, 3);
  CHECK(joint.joint_cylinder_measure(u, v) ==
        doctest::Approx(product->cylinder_measure(v)).epsilon(1e-12));
  const double cond = joint.conditional_measure(u, v);
  Word right(50);
  for (std::size_t i = 0; i < 50; ++i) right[i] = product->decode(v[i]).second;
  CHECK(cond == doctest::Approx(product->right().cylinder_measure(right)).epsilon(1e-9));
  Word wrong = v;
  wrong[0] = product->encode(static_cast<Symbol>(1 - u[0]), product->decode(v[0]).second);
  CHECK(joint.joint_cylinder_measure(u, wrong) == 0.0);
  const Word drawn = joint.sample_conditional_q(u, 8);
  for (std::size_t i = 0; i < 50; ++i) CHECK(product->decode(drawn[i]).first == u[i]);
  const auto pair_dist = joint.pair_process().block_distribution(4);
  CHECK(std::fabs(pair_dist.total() - 1.0) <= 1e-9);
}
