#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/binomial.hpp>

#include "phidim/error.hpp"
#include "phidim/random_model.hpp"
#include "phidim/rng.hpp"
#include "phidim/sequence.hpp"
#include "oracles.hpp"

using namespace phidim;

namespace {

constexpr uint64_t kMaster = 0x5eed;

using oracle::chi_square_p;
using oracle::perm_index;

std::array<uint32_t, 3> relative_order(const RandomOrder& o, uint32_t first) {
  std::array<uint32_t, 3> out{};
  int k = 0;
  for (uint32_t i : o.left_to_right())
    if (i >= first && i < first + 3) out[k++] = i;
  return out;
}

}  // namespace

TEST_CASE("ordering by weights") {
  const std::vector<double> w{0.5, 0.9, 0.1};
  const auto o = RandomOrder::from_weights(w);
  CHECK(std::vector<uint32_t>(o.left_to_right().begin(), o.left_to_right().end()) ==
        std::vector<uint32_t>{3, 1, 2});
}

TEST_CASE("placement by prefix sums") {
  const auto a = GapSequence::explicit_list({0.5, 0.3, 0.2});
  const std::vector<double> w{0.5, 0.9, 0.1};
  const auto s = build_set(a, RandomOrder::from_weights(w), 2);
  REQUIRE(s.gaps().size() == 3);
  CHECK(s.gaps()[0].left == doctest::Approx(0.0));
  CHECK(s.gaps()[0].right() == doctest::Approx(0.2));
  CHECK(s.gaps()[1].left == doctest::Approx(0.2));
  CHECK(s.gaps()[1].right() == doctest::Approx(0.7));
  CHECK(s.gaps()[2].left == doctest::Approx(0.7));
  CHECK(s.gaps()[2].right() == doctest::Approx(1.0));
  CHECK(s.tail_mass() == 0.0);
}

TEST_CASE("middle-third Cantor arrangement") {
  const auto a = GapSequence::middle_third();
  const auto s2 = build_set(a, ArrangementKind::cantor, 2);
  const auto l1 = s2.level_intervals(1);
  REQUIRE(l1.size() == 2);
  CHECK(l1[0].left == 0.0);
  CHECK(l1[0].right == doctest::Approx(1.0 / 3.0));
  CHECK(l1[1].left == doctest::Approx(2.0 / 3.0));
  CHECK(l1[1].right == doctest::Approx(1.0));

  const auto s = build_set(a, ArrangementKind::cantor, 10);
  for (int n = 1; n <= 10; ++n) {
    const auto iv = s.level_intervals(n);
    REQUIRE(iv.size() == (std::size_t{1} << n));
    double lo = 1.0, hi = 0.0;
    for (const auto& v : iv) {
      lo = std::min(lo, v.content_mass);
      hi = std::max(hi, v.content_mass);
    }
    CHECK(hi == doctest::Approx(std::pow(3.0, -n)).epsilon(1e-9));
    CHECK(hi / lo == doctest::Approx(1.0).epsilon(1e-9));
  }
  for (int n = 0; n < 10; ++n) {
    const auto c = level_gap_counts(s, n, n + 1, n + 1);
    CHECK(std::all_of(c.begin(), c.end(), [](uint32_t v) { return v == 1; }));
  }
}

TEST_CASE("Cantor index is the in-order heap traversal") {
  const std::vector<uint32_t> expect{4, 2, 5, 1, 6, 3, 7};
  for (uint64_t p = 0; p < 7; ++p) CHECK(cantor_index_at(p, 3) == expect[p]);
}

TEST_CASE("decreasing arrangement piles deep gaps on the left") {
  const auto s = build_set(GapSequence::middle_third(), ArrangementKind::decreasing, 10);
  for (int n = 1; n < 10; ++n) {
    const auto c = level_gap_counts(s, n, n + 1, 10);
    CHECK(c[0] == (1u << 10) - (1u << n));
    CHECK(std::all_of(c.begin() + 1, c.end(), [](uint32_t v) { return v == 0; }));
  }
  // Gap lengths increase from left to right.
  for (std::size_t i = 1; i < s.gaps().size(); ++i)
    CHECK(s.gaps()[i - 1].length <= s.gaps()[i].length);
}

TEST_CASE("mass and counting identities") {
  const auto a = GapSequence::middle_third();
  for (auto kind : {ArrangementKind::random, ArrangementKind::cantor, ArrangementKind::decreasing}) {
    const auto s = kind == ArrangementKind::random ? build_set(a, RandomOrder::sample(42, 10), 10)
                                                   : build_set(a, kind, 10);
    REQUIRE(s.gaps().size() == 1023);
    double placed = 0.0;
    for (std::size_t i = 0; i < s.gaps().size(); ++i) {
      placed += s.gaps()[i].length;
      if (i > 0) CHECK(s.gaps()[i - 1].right() <= s.gaps()[i].left + 1e-15);
    }
    CHECK(placed == doctest::Approx(1.0 - std::pow(2.0 / 3.0, 10)).epsilon(1e-12));
    CHECK(s.tail_mass() == doctest::Approx(std::pow(2.0 / 3.0, 10)).epsilon(1e-12));
    CHECK(s.extent() == doctest::Approx(1.0).epsilon(1e-12));
    double content = 0.0;
    for (const auto& iv : s.level_intervals(10)) content += iv.content_mass;
    CHECK(content == doctest::Approx(s.tail_mass()).epsilon(1e-10));
  }
}

TEST_CASE("deeper truncations extend shallower ones") {
  const uint64_t key = rng::derive_key(kMaster, 7);
  const auto shallow = RandomOrder::sample(key, 10);
  const auto deep = RandomOrder::sample(key, 12);
  std::vector<uint32_t> restricted;
  for (uint32_t i : deep.left_to_right())
    if (i < 1024) restricted.push_back(i);
  CHECK(restricted == std::vector<uint32_t>(shallow.left_to_right().begin(), shallow.left_to_right().end()));
  const auto again = RandomOrder::sample(key, 10);
  CHECK(std::equal(again.left_to_right().begin(), again.left_to_right().end(),
                   shallow.left_to_right().begin()));
}

TEST_CASE("depth limits") {
  CHECK_THROWS_AS(RandomOrder::sample(1, 0), Error);
  CHECK_THROWS_AS(RandomOrder::sample(1, RandomOrder::kMaxDepth + 1), Error);
  CHECK_THROWS_AS(build_set(GapSequence::explicit_list({0.5, 0.3, 0.2}), ArrangementKind::cantor, 3),
                  Error);
}

TEST_CASE("gap tables must be ordered") {
  std::vector<PlacedGap> gaps{{1, 1, 0.5, 0.4}, {2, 2, 0.2, 0.0}, {3, 2, 0.2, 0.95}};
  CHECK_THROWS_AS(ApproxSet::from_gap_table(2, 0.1, ArrangementKind::random, 1, gaps, 1.0), Error);
}

TEST_CASE("relative order of {1, 2, 3} is uniform") {
  const int trials = 60000;
  std::vector<double> obs(6, 0.0);
  for (int t = 0; t < trials; ++t) {
    const auto o = RandomOrder::sample(rng::derive_key(kMaster, t), 2);
    ++obs[perm_index({o.left_to_right()[0], o.left_to_right()[1], o.left_to_right()[2]})];
  }
  const double p = chi_square_p(obs, std::vector<double>(6, trials / 6.0));
  CHECK(p > 0.001);
}

TEST_CASE("disjoint blocks are independent") {
  const int trials = 60000;
  std::vector<std::array<int, 2>> pairs;
  std::vector<double> joint(36, 0.0), row(6, 0.0), col(6, 0.0);
  for (int t = 0; t < trials; ++t) {
    const auto o = RandomOrder::sample(rng::derive_key(kMaster + 1, t), 3);
    const int a = perm_index(relative_order(o, 1));
    const int b = perm_index(relative_order(o, 4));
    ++joint[a * 6 + b];
    ++row[a];
    ++col[b];
  }
  std::vector<double> expected(36);
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) expected[a * 6 + b] = row[a] * col[b] / trials;
  // (6 - 1)(6 - 1) degrees of freedom.
  CHECK(chi_square_p(joint, expected, 36 - 25) > 0.001);
  CHECK(chi_square_p(row, std::vector<double>(6, trials / 6.0)) > 0.001);
  CHECK(chi_square_p(col, std::vector<double>(6, trials / 6.0)) > 0.001);
}

TEST_CASE("count of level n+1 gaps in a level-n interval is beta-binomial") {
  // An interval between consecutive level <= n gaps is a uniform spacing of
  // K = 2^n - 1 points, Beta(1, K); each of the M = 2^n level n+1 gaps falls
  // in it independently given the spacing.
  const int n = 3;
  const int K = (1 << n) - 1, M = 1 << n;
  std::vector<double> pmf(M + 1);
  for (int c = 0; c <= M; ++c)
    pmf[c] = boost::math::binomial_coefficient<double>(M, c) * boost::math::beta(c + 1.0, M - c + K) /
             boost::math::beta(1.0, K);
  const auto a = GapSequence::middle_third();
  const int trials = 20000;
  for (std::size_t which : {std::size_t{0}, std::size_t{3}, std::size_t{7}}) {
    std::vector<double> obs(M + 1, 0.0);
    for (int t = 0; t < trials; ++t) {
      const auto s = build_set(a, RandomOrder::sample(rng::derive_key(kMaster + 2, t), n + 1), n + 1);
      ++obs[level_gap_counts(s, n, n + 1, n + 1)[which]];
    }
    std::vector<double> expected(M + 1);
    for (int c = 0; c <= M; ++c) expected[c] = pmf[c] * trials;
    CHECK_MESSAGE(chi_square_p(obs, expected) > 0.001, "interval " << which);
  }
}
