#include <doctest.h>

#include <numeric>

#include "ergolab/rng.hpp"
#include "ergolab/towers.hpp"

using namespace ergolab;

TEST_CASE("kakutani_decompose examples") {
  auto d = kakutani_from_candidates(20, {0, 7, 15}, 5);
  CHECK(d.towers == std::vector<Tower>{{0, 7}, {7, 8}, {15, 5}});
  CHECK(d.leftover.empty());
  CHECK(d.is_partition());

  auto none = kakutani_decompose(word_from_string("0000000000"), word_from_string("1"), 3);
  CHECK(none.towers.empty());
  CHECK(none.leftover.size() == 10);

  auto thinned = kakutani_from_candidates(20, {0, 2, 9}, 5);
  CHECK(thinned.towers == std::vector<Tower>{{0, 9}, {9, 11}});

  // "11" occurs at 2, 5, 12; 5 is thinned and the tail at 12 has height 4.
  auto path = word_from_string("0011011000001100");
  auto k = kakutani_decompose(path, word_from_string("11"), 4);
  CHECK(k.towers == std::vector<Tower>{{2, 10}, {12, 4}});
  CHECK(k.leftover == std::vector<std::size_t>{0, 1});
  // With N = 5 the tail is too short.
  auto short_tail = kakutani_decompose(path, word_from_string("11"), 5);
  CHECK(short_tail.towers == std::vector<Tower>{{2, 10}});
  CHECK(short_tail.leftover == std::vector<std::size_t>{0, 1, 12, 13, 14, 15});

  CHECK_THROWS_AS(kakutani_decompose(path, word_from_string("00000"), 4), Error);
  CHECK_THROWS_AS(kakutani_decompose(path, word_from_string("0"), 0), Error);
}

TEST_CASE("rohlin_tower examples") {
  auto a = rohlin_tower(100, 10, 0.2);
  CHECK(a.towers.size() == 10);
  CHECK(a.leftover.empty());

  auto b = rohlin_tower(105, 10, 0.2);
  CHECK(b.towers.size() == 10);
  CHECK(b.leftover_fraction() == doctest::Approx(5.0 / 105.0));

  try {
    rohlin_tower(20, 10, 0.1);
    FAIL("expected infeasible-tower error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInfeasibleTower);
  }
}

TEST_CASE("extract_columns examples") {
  auto d = rohlin_tower(9, 3, 0.5);
  auto same = extract_columns(d, word_from_string("010010010"));
  REQUIRE(same.size() == 1);
  CHECK(same[0].members == std::vector<std::size_t>{0, 1, 2});
  CHECK(!same[0].name_q);

  auto two = extract_columns(rohlin_tower(6, 3, 0.5), word_from_string("010011"));
  REQUIRE(two.size() == 2);
  CHECK(two[0].name_p == word_from_string("010"));
  CHECK(two[1].name_p == word_from_string("011"));

  auto mixed = kakutani_from_candidates(12, {0, 5}, 5);
  auto cols = extract_columns(mixed, Word(12, 0));
  REQUIRE(cols.size() == 2);
  CHECK(cols[0].height == 5);
  CHECK(cols[1].height == 7);

  auto with_q = extract_columns(rohlin_tower(6, 3, 0.5), word_from_string("010010"),
                                WordView(word_from_string("001000")));
  REQUIRE(with_q.size() == 2);
  CHECK(*with_q[0].name_q == word_from_string("000"));

  CHECK_THROWS_AS(extract_columns(d, word_from_string("01")), Error);
}

TEST_CASE("randomized tower invariants") {
  Rng rng(8);
  for (int trial = 0; trial < 5000; ++trial) {
    const std::size_t n = 1 + rng.below(400);
    const std::size_t N = 1 + rng.below(12);
    Word path(n);
    for (auto& x : path) x = static_cast<Symbol>(rng.below(2));
    Word pattern(1 + rng.below(std::min<std::size_t>(N, 3)));
    for (auto& x : pattern) x = static_cast<Symbol>(rng.below(2));
    const auto k = kakutani_decompose(path, pattern, N);
    CHECK(k.is_partition());
    for (const auto& t : k.towers) CHECK(t.height >= N);
    std::size_t members = 0;
    for (const auto& c : extract_columns(k, path)) members += c.members.size();
    CHECK(members == k.towers.size());

    const double eps = 0.01 + 0.98 * rng.uniform();
    if (N <= eps * n) {
      const auto r = rohlin_tower(n, N, eps);
      CHECK(r.is_partition());
      for (const auto& t : r.towers) CHECK(t.height == N);
      CHECK(r.leftover_fraction() <= static_cast<double>(N) / n + 1e-15);
      CHECK(r.leftover_fraction() <= eps);
    } else {
      CHECK_THROWS_AS(rohlin_tower(n, N, eps), Error);
    }
  }
}
