#include "phidim/covering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

#include "phidim/error.hpp"
#include "phidim/rng.hpp"

namespace phidim {

namespace {

// Balls of length 2r needed for (start, b] once start itself is covered, or
// for [start, b] when it is not; both come to the same count.
uint64_t balls_for(double start, double b, double r) {
  const double k = std::ceil((b - start - kCoverTolerance) / (2.0 * r));
  return k < 1.0 ? 1 : static_cast<uint64_t>(k);
}

}  // namespace

uint64_t cover_segments(std::span<const Segment> segments, double lo, double hi, double r) {
  if (!(r > 0.0)) throw Error(ErrorKind::invalid_range, "cover radius must be positive");
  uint64_t count = 0;
  double covered = 0.0;
  for (const auto& seg : segments) {
    const double a = std::max(seg.left, lo), b = std::min(seg.right, hi);
    if (a > b) continue;
    if (count > 0 && b <= covered + kCoverTolerance) continue;
    const double start = (count > 0 && a <= covered + kCoverTolerance) ? covered : a;
    const uint64_t k = balls_for(start, b, r);
    count += k;
    covered = start + static_cast<double>(k) * 2.0 * r;
  }
  return count;
}

uint64_t cover_count(const ApproxSet& s, double x, double R, double r) {
  if (!(R > 0.0) || !(r > 0.0))
    throw Error(ErrorKind::invalid_range, "R and r must be positive");
  if (r < s.truncation_floor() * (1.0 - 1e-12))
    throw Error(ErrorKind::truncation_violation,
                "r = " + std::to_string(r) + " is below the depth-" + std::to_string(s.depth()) +
                    " truncation floor " + std::to_string(s.truncation_floor()) +
                    "; raise W or coarsen r");
  // A point at distance exactly R is dropped so that windows anchored at
  // construction endpoints do not pick up a stray point across a gap.
  const double lo = x - R + kCoverTolerance, hi = x + R - kCoverTolerance;
  if (lo > hi) return 1;

  const auto gaps = s.gaps();
  const std::size_t m = gaps.size();
  auto seg_right = [&](std::size_t k) { return k == m ? s.extent() : gaps[k].left; };
  auto seg_left = [&](std::size_t k) { return k == 0 ? 0.0 : gaps[k - 1].right(); };
  // First segment whose right end reaches past `t`.
  auto first_reaching = [&](double t, std::size_t from) {
    auto it = std::partition_point(gaps.begin() + static_cast<std::ptrdiff_t>(from), gaps.end(),
                                   [&](const PlacedGap& g) { return g.left <= t; });
    return static_cast<std::size_t>(it - gaps.begin());
  };

  uint64_t count = 0;
  double covered = 0.0;
  std::size_t k = first_reaching(std::nextafter(lo, -1.0), 0);
  while (k <= m) {
    const double a = std::max(seg_left(k), lo), b = std::min(seg_right(k), hi);
    if (a > hi) break;
    if (a <= b && !(count > 0 && b <= covered + kCoverTolerance)) {
      const double start = (count > 0 && a <= covered + kCoverTolerance) ? covered : a;
      const uint64_t balls = balls_for(start, b, r);
      count += balls;
      covered = start + static_cast<double>(balls) * 2.0 * r;
      if (k < m && seg_right(k + 1) <= covered + kCoverTolerance) {
        k = first_reaching(covered + kCoverTolerance, k + 1);
        continue;
      }
    }
    ++k;
  }
  return std::max<uint64_t>(count, 1);
}

std::vector<CoverQuery> enumerate_windows(const ApproxSet& s, const DimensionFunction& f,
                                          const LevelProfile& p, const DepthTable& d,
                                          const WindowPolicy& policy) {
  if (policy.n_lo < 0 || policy.n_hi < policy.n_lo || policy.ladder_length < 1 ||
      policy.min_separation < 0 || policy.radius_span < 1)
    throw Error(ErrorKind::invalid_policy,
                "need 0 <= n_lo <= n_hi, radius_span >= 1, min_separation >= 0, ladder_length >= 1");
  const double floor = s.truncation_floor();
  std::vector<CoverQuery> out;

  for (int n = policy.n_lo; n <= policy.n_hi; ++n) {
    if (n > s.depth()) continue;
    std::vector<std::tuple<double, double>> rungs;  // (R, r)
    for (int m = std::max(n - policy.radius_span + 1, 0); m <= n; ++m) {
      if (!d.contains(m)) continue;
      std::vector<double> radii{p.s[m]};
      if (policy.contracted) radii.push_back((1.0 - 2.0 * p.lambda_hat) * p.s[m]);
      for (double R : radii) {
        const double log_bound = (1.0 + f.at_log(std::log(R))) * std::log(R);
        const int first = m + std::max(d.at(m), policy.min_separation);
        for (int k = 0; k < policy.ladder_length; ++k) {
          const int level = first + k;
          if (level > p.depth()) break;
          const double r = p.s[level];
          if (r < floor * (1.0 - 1e-12)) break;
          if (std::log(r) > log_bound + 1e-12 * std::abs(log_bound)) continue;
          rungs.emplace_back(R, r);
        }
      }
    }
    if (rungs.empty()) continue;

    const auto intervals = s.level_intervals(n);
    std::vector<std::size_t> chosen(intervals.size());
    std::iota(chosen.begin(), chosen.end(), std::size_t{0});
    if (policy.subsample_cap > 0 && chosen.size() > policy.subsample_cap) {
      // Partial Fisher-Yates on a stream keyed by (seed, n).
      rng::Stream stream(rng::derive_key(policy.seed, static_cast<uint64_t>(n)));
      for (std::size_t i = 0; i < policy.subsample_cap; ++i)
        std::swap(chosen[i], chosen[i + stream.next_below(chosen.size() - i)]);
      chosen.resize(policy.subsample_cap);
      std::sort(chosen.begin(), chosen.end());
    }
    for (std::size_t i : chosen)
      for (double x : {intervals[i].left, intervals[i].right})
        for (const auto& [R, r] : rungs) out.push_back({n, x, R, r, 0, 0.0});
  }
  if (out.empty())
    throw Error(ErrorKind::no_admissible_window,
                "no admissible (x, R, r) for n in [" + std::to_string(policy.n_lo) + ", " +
                    std::to_string(policy.n_hi) + "] at depth " + std::to_string(s.depth()));
  return out;
}

namespace {

bool window_less(const CoverQuery& a, const CoverQuery& b) {
  return std::tie(a.n, a.x, a.R, a.r) < std::tie(b.n, b.x, b.R, b.r);
}

DimensionEstimate pick(Direction dir, const std::vector<CoverQuery>& records, const ApproxSet& s,
                       const WindowPolicy& policy) {
  DimensionEstimate est;
  est.direction = dir;
  est.depth_used = s.depth();
  est.policy = policy;
  est.records = records;
  bool first = true;
  for (const auto& q : records) {
    const bool better = dir == Direction::upper ? q.exponent > est.beta_hat
                                                : q.exponent < est.beta_hat;
    if (first || better || (q.exponent == est.beta_hat && window_less(q, est.extremal))) {
      est.beta_hat = q.exponent;
      est.extremal = q;
      first = false;
    }
  }
  return est;
}

std::vector<CoverQuery> counted_windows(const ApproxSet& s, const DimensionFunction& f,
                                        const LevelProfile& p, const DepthTable& d,
                                        const WindowPolicy& policy) {
  auto windows = enumerate_windows(s, f, p, d, policy);
  std::vector<CoverQuery> kept;
  kept.reserve(windows.size());
  for (auto& q : windows) {
    if (q.R / q.r <= 1.0 + 1e-12) continue;
    q.count = cover_count(s, q.x, q.R, q.r);
    q.exponent = std::log(static_cast<double>(q.count)) / std::log(q.R / q.r);
    kept.push_back(q);
  }
  if (kept.empty())
    throw Error(ErrorKind::invalid_policy,
                "every admissible window has r >= R; lengthen the r ladder");
  return kept;
}

}  // namespace

DimensionEstimate estimate_dimension(const ApproxSet& s, Direction direction,
                                     const DimensionFunction& f, const LevelProfile& p,
                                     const DepthTable& d, const WindowPolicy& policy) {
  return pick(direction, counted_windows(s, f, p, d, policy), s, policy);
}

EstimatePair estimate_dimensions(const ApproxSet& s, const DimensionFunction& f,
                                 const LevelProfile& p, const DepthTable& d,
                                 const WindowPolicy& policy) {
  const auto records = counted_windows(s, f, p, d, policy);
  return {pick(Direction::upper, records, s, policy), pick(Direction::lower, records, s, policy)};
}

}  // namespace phidim
