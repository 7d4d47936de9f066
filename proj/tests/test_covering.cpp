#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <vector>

#include "phidim/covering.hpp"
#include "phidim/error.hpp"
#include "phidim/random_model.hpp"
#include "phidim/rng.hpp"
#include "oracles.hpp"

using namespace phidim;

namespace {

using oracle::CoverInstance;
using oracle::min_cover;
constexpr double g = oracle::kGrid;

std::vector<Segment> to_segments(const CoverInstance& in) {
  std::vector<Segment> out;
  for (auto [a, b] : in.segs) out.push_back({a * g, b * g});
  return out;
}

// The same instance as a truncated set: segments become level-W intervals.
ApproxSet to_set(const CoverInstance& in, int W) {
  std::vector<PlacedGap> gaps;
  for (std::size_t i = 0; i + 1 < in.segs.size(); ++i) {
    const double left = in.segs[i].second * g, right = in.segs[i + 1].first * g;
    const auto index = static_cast<uint32_t>(i + 1);
    gaps.push_back({index, static_cast<int>(std::bit_width(index)), right - left, left});
  }
  return ApproxSet::from_gap_table(W, 0.0, ArrangementKind::random, std::nullopt, gaps,
                                   in.segs.back().second * g);
}

}  // namespace

TEST_CASE("greedy count equals the exhaustive minimum on 1000 instances") {
  rng::Stream st(rng::derive_key(2024, 0));
  int mismatches = 0, nonempty = 0, naive_off = 0;
  for (int t = 0; t < 1000; ++t) {
    const CoverInstance in = oracle::random_cover_instance(st, 1 + static_cast<int>(st.next_below(10)), false);
    const auto want = min_cover(in);
    const auto got = cover_segments(to_segments(in), in.lo * g, in.hi * g, in.L * g / 2.0);
    if (want != got) ++mismatches;
    if (want > 0) ++nonempty;
    // Covering each piece separately overcounts when balls can bridge gaps.
    uint64_t naive = 0;
    for (auto [a, b] : in.segs) {
      const int lo = std::max(a, in.lo), hi = std::min(b, in.hi);
      if (lo <= hi) naive += std::max(1, (hi - lo + in.L - 1) / in.L);
    }
    if (naive != want) ++naive_off;
  }
  CHECK(mismatches == 0);
  CHECK(nonempty > 500);
  CHECK(naive_off > 100);
}

TEST_CASE("cover_count on a truncated set agrees with the oracle") {
  rng::Stream st(rng::derive_key(2024, 1));
  int mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    const int W = 1 + static_cast<int>(st.next_below(3));
    const CoverInstance in = oracle::random_cover_instance(st, 1 << W, true);
    const auto s = to_set(in, W);
    const double x = (in.lo + in.hi) / 2.0 * g, R = (in.hi - in.lo) / 2.0 * g;
    const auto want = std::max<uint64_t>(min_cover(in), 1);
    if (cover_count(s, x, R, in.L * g / 2.0) != want) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("simple counts") {
  const std::vector<Segment> unit{{0.0, 1.0}};
  CHECK(cover_segments(unit, 0.0, 1.0, 0.05) == 10);
  const auto s = build_set(GapSequence::middle_third(), ArrangementKind::cantor, 6);
  CHECK(cover_count(s, 1.0 / 6.0, 1.0 / 6.0, std::pow(3.0, -4) / 2.0) == 8);
  for (double x : {0.0, 0.3, 1.0 / 3.0, 0.9}) CHECK(cover_count(s, x, 0.01, 0.02) == 1);
}

TEST_CASE("radii below the truncation floor are refused") {
  const auto s = build_set(GapSequence::middle_third(), ArrangementKind::cantor, 6);
  try {
    cover_count(s, 0.5, 0.1, s.truncation_floor() / 2.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::truncation_violation);
  }
}

TEST_CASE("window enumeration") {
  const auto a = GapSequence::middle_third();
  const auto s = build_set(a, ArrangementKind::cantor, 20);
  const auto p = level_sums(a, 64);

  SUBCASE("constant(1): the r ladder starts at s_2n") {
    const auto f = DimensionFunction::constant(1.0);
    const auto d = depth_function(f, p);
    WindowPolicy w;
    w.n_lo = w.n_hi = 5;
    w.ladder_length = 64;
    const auto win = enumerate_windows(s, f, p, d, w);
    double rmax = 0.0, rmin = 1.0;
    for (const auto& q : win) {
      CHECK(q.R == doctest::Approx(std::pow(3.0, -5)));
      rmax = std::max(rmax, q.r);
      rmin = std::min(rmin, q.r);
    }
    CHECK(rmax == doctest::Approx(std::pow(3.0, -10)));
    CHECK(rmin >= s.truncation_floor());
    CHECK(rmin / 3.0 < s.truncation_floor());
  }

  SUBCASE("zero: the r ladder starts at R") {
    const auto f = DimensionFunction::zero();
    const auto d = depth_function(f, p);
    WindowPolicy w;
    w.n_lo = w.n_hi = 5;
    w.ladder_length = 64;
    const auto win = enumerate_windows(s, f, p, d, w);
    double rmax = 0.0;
    for (const auto& q : win) rmax = std::max(rmax, q.r);
    CHECK(rmax == doctest::Approx(std::pow(3.0, -5)));
    // Length one and no separation leaves only r = R, which the estimator rejects.
    w.ladder_length = 1;
    try {
      estimate_dimension(s, Direction::upper, f, p, d, w);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::invalid_policy);
    }
  }

  SUBCASE("subsample cap") {
    const auto f = DimensionFunction::constant(0.5);
    const auto d = depth_function(f, p);
    WindowPolicy w;
    w.n_lo = w.n_hi = 12;
    w.subsample_cap = 256;
    w.seed = 99;
    const auto one = enumerate_windows(s, f, p, d, w);
    const auto two = enumerate_windows(s, f, p, d, w);
    std::set<double> centers;
    for (const auto& q : one) centers.insert(q.x);
    CHECK(centers.size() <= 512);
    REQUIRE(one.size() == two.size());
    for (std::size_t i = 0; i < one.size(); ++i) CHECK(one[i].x == two[i].x);
  }

  SUBCASE("admissibility r <= R^(1 + Phi(R))") {
    const auto f = DimensionFunction::constant(0.5);
    const auto d = depth_function(f, p);
    WindowPolicy w;
    w.n_lo = 6;
    w.n_hi = 12;
    w.radius_span = 3;
    w.ladder_length = 64;
    w.contracted = true;
    for (const auto& q : enumerate_windows(s, f, p, d, w))
      CHECK(std::log(q.r) <= 1.5 * std::log(q.R) * (1.0 - 1e-12));
  }
}

TEST_CASE("estimates on deterministic arrangements") {
  const auto a = GapSequence::middle_third();
  const auto p = level_sums(a, 64);
  WindowPolicy w;
  w.n_lo = 6;
  w.n_hi = 12;
  w.ladder_length = 64;

  const auto half = DimensionFunction::constant(0.5);
  const auto cantor = build_set(a, ArrangementKind::cantor, 20);
  const auto e = estimate_dimensions(cantor, half, p, depth_function(half, p), w);
  CHECK(std::abs(e.upper.beta_hat - std::log(2.0) / std::log(3.0)) < 0.02);
  CHECK(std::abs(e.lower.beta_hat - std::log(2.0) / std::log(3.0)) < 0.02);

  const auto zero = DimensionFunction::zero();
  const auto dec = build_set(a, ArrangementKind::decreasing, 20);
  const auto z = estimate_dimension(dec, Direction::upper, zero, p, depth_function(zero, p), w);
  CHECK(z.beta_hat >= 0.9);
}

TEST_CASE("estimates are monotone in Phi on a fixed set") {
  // A larger Phi admits a subset of the windows.
  const auto a = GapSequence::middle_third();
  const auto p = level_sums(a, 64);
  const auto s = build_set(a, RandomOrder::sample(rng::derive_key(5, 5), 16), 16);
  WindowPolicy w;
  w.n_lo = 6;
  w.n_hi = 10;
  w.radius_span = 2;
  w.min_separation = 2;
  w.ladder_length = 64;
  const auto lo = DimensionFunction::constant(0.25), hi = DimensionFunction::constant(0.75);
  const auto el = estimate_dimensions(s, lo, p, depth_function(lo, p), w);
  const auto eh = estimate_dimensions(s, hi, p, depth_function(hi, p), w);
  CHECK(el.upper.beta_hat >= eh.upper.beta_hat);
  CHECK(el.lower.beta_hat <= eh.lower.beta_hat);
}
