#include "phidim/random_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <utility>

#include "phidim/error.hpp"
#include "phidim/rng.hpp"

namespace phidim {

double order_weight(uint64_t seed, uint64_t index) { return rng::uniform(seed, index); }

RandomOrder RandomOrder::sample(uint64_t seed, int depth) {
  if (depth < 1 || depth > kMaxDepth)
    throw Error(ErrorKind::depth_unsupported,
                "W = " + std::to_string(depth) + " outside [1, " + std::to_string(kMaxDepth) + "]");
  const uint32_t m = (uint32_t{1} << depth) - 1;
  // Sorting the 53-bit numerators of omega_i is the same as sorting omega_i.
  std::vector<std::pair<uint64_t, uint32_t>> keyed(m);
  for (uint32_t i = 1; i <= m; ++i) keyed[i - 1] = {rng::bits(seed, i) >> 11, i};
  std::sort(keyed.begin(), keyed.end());

  RandomOrder out;
  out.seed_ = seed;
  out.order_.resize(m);
  for (uint32_t p = 0; p < m; ++p) out.order_[p] = keyed[p].second;
  return out;
}

RandomOrder RandomOrder::from_weights(std::span<const double> omega) {
  if (omega.empty() || omega.size() >= (std::size_t{1} << kMaxDepth))
    throw Error(ErrorKind::depth_unsupported, "weight vector size out of range");
  RandomOrder out;
  out.order_.resize(omega.size());
  for (uint32_t i = 0; i < omega.size(); ++i) out.order_[i] = i + 1;
  std::sort(out.order_.begin(), out.order_.end(), [&](uint32_t x, uint32_t y) {
    const double wx = omega[x - 1], wy = omega[y - 1];
    return wx < wy || (wx == wy && x < y);
  });
  return out;
}

const char* to_string(ArrangementKind kind) {
  switch (kind) {
    case ArrangementKind::random: return "random";
    case ArrangementKind::cantor: return "cantor";
    case ArrangementKind::decreasing: return "decreasing";
  }
  return "random";
}

uint32_t cantor_index_at(uint64_t position, int W) {
  // In-order traversal of the heap tree: gap g splits the interval whose
  // halves are split by 2g and 2g + 1.
  const uint64_t q = position + 1;
  const int t = std::countr_zero(q);
  const int depth_from_root = W - 1 - t;
  return static_cast<uint32_t>((uint64_t{1} << depth_from_root) + (q >> (t + 1)));
}

double ApproxSet::residual_share() const { return std::ldexp(tail_mass_, -depth_); }

namespace {

void check_depth(const GapSequence& a, int W) {
  if (W < 1 || W > RandomOrder::kMaxDepth)
    throw Error(ErrorKind::depth_unsupported, "W = " + std::to_string(W));
  if (a.max_index() < (uint64_t{1} << W) - 1)
    throw Error(ErrorKind::insufficient_depth,
                "sequence materializes " + std::to_string(a.max_index()) + " terms, depth " +
                    std::to_string(W) + " needs " + std::to_string((uint64_t{1} << W) - 1));
}

}  // namespace

ApproxSet ApproxSet::place(const GapSequence& a, std::span<const uint32_t> order,
                           std::span<const double> shares, int W, ArrangementKind arrangement,
                           std::optional<uint64_t> seed) {
  // Rule-based terms only depend on the level.
  std::vector<double> level_length(static_cast<std::size_t>(W) + 1, 0.0);
  if (a.rule_based())
    for (int L = 1; L <= W; ++L) level_length[L] = a.term(uint64_t{1} << (L - 1));
  const auto terms = a.terms();

  ApproxSet s;
  s.arrangement_ = arrangement;
  s.seed_ = seed;
  s.depth_ = W;
  s.tail_mass_ = a.tail_mass(W);
  s.gaps_.resize(order.size());

  const bool uniform_share = shares.size() == 1;
  CompensatedSum position;
  for (std::size_t p = 0; p < order.size(); ++p) {
    position.add(uniform_share ? shares[0] : shares[p]);
    const uint32_t j = order[p];
    const int L = static_cast<int>(std::bit_width(j));
    const double len = a.rule_based() ? level_length[L] : terms[j - 1];
    s.gaps_[p] = {j, L, len, position.value()};
    position.add(len);
  }
  position.add(uniform_share ? shares[0] : shares[order.size()]);
  s.extent_ = position.value();
  return s;
}

ApproxSet build_set(const GapSequence& a, const RandomOrder& order, int W) {
  check_depth(a, W);
  if (order.size() != (std::size_t{1} << W) - 1)
    throw Error(ErrorKind::invalid_range,
                "order covers " + std::to_string(order.size()) + " indices, depth " +
                    std::to_string(W) + " needs " + std::to_string((std::size_t{1} << W) - 1));
  const double share = std::ldexp(a.tail_mass(W), -W);
  return ApproxSet::place(a, order.left_to_right(), std::span<const double>(&share, 1), W,
                          ArrangementKind::random, order.seed());
}

ApproxSet build_set(const GapSequence& a, ArrangementKind arrangement, int W) {
  if (arrangement == ArrangementKind::random)
    throw Error(ErrorKind::invalid_range, "random arrangements need a RandomOrder");
  check_depth(a, W);
  const std::size_t m = (std::size_t{1} << W) - 1;
  std::vector<uint32_t> order(m);
  std::vector<double> shares;

  if (arrangement == ArrangementKind::decreasing) {
    for (std::size_t p = 0; p < m; ++p) order[p] = static_cast<uint32_t>(m - p);
    shares.assign(m + 1, 0.0);
    shares[0] = a.tail_mass(W);
    return ApproxSet::place(a, order, shares, W, arrangement, std::nullopt);
  }

  for (std::size_t p = 0; p < m; ++p) order[p] = cantor_index_at(p, W);
  if (a.rule_based()) {
    // Central sequences: every level-W interval has length s_W.
    const double share = std::ldexp(a.tail_mass(W), -W);
    return ApproxSet::place(a, order, std::span<const double>(&share, 1), W, arrangement,
                            std::nullopt);
  }
  // Explicit lists: level-W interval j holds the whole heap subtree rooted at
  // gap 2^W + j.
  const auto terms = a.terms();
  const uint64_t L = terms.size();
  std::vector<double> prefix(L + 1, 0.0);
  CompensatedSum acc;
  for (uint64_t i = 1; i <= L; ++i) {
    acc.add(terms[i - 1]);
    prefix[i] = acc.value();
  }
  shares.assign(m + 1, 0.0);
  for (std::size_t j = 0; j <= m; ++j) {
    CompensatedSum subtree;
    uint64_t lo = (uint64_t{1} << W) + j, hi = lo + 1;
    while (lo <= L) {
      subtree.add(prefix[std::min(hi - 1, L)] - prefix[lo - 1]);
      lo *= 2;
      hi *= 2;
    }
    shares[j] = subtree.value();
  }
  return ApproxSet::place(a, order, shares, W, arrangement, std::nullopt);
}

ApproxSet ApproxSet::from_gap_table(int depth, double tail_mass, ArrangementKind arrangement,
                                    std::optional<uint64_t> seed, std::vector<PlacedGap> gaps,
                                    double extent) {
  if (depth < 1 || depth > RandomOrder::kMaxDepth)
    throw Error(ErrorKind::depth_unsupported, "W = " + std::to_string(depth));
  if (gaps.size() != (std::size_t{1} << depth) - 1)
    throw Error(ErrorKind::invalid_range, "gap table size does not match depth");
  double prev_right = 0.0;
  for (const auto& g : gaps) {
    if (g.index < 1 || g.index >= (uint32_t{1} << depth) || !(g.length > 0.0) ||
        g.left < prev_right - 1e-12)
      throw Error(ErrorKind::invalid_range, "gap table rows must be ordered and disjoint");
    prev_right = g.right();
  }
  ApproxSet s;
  s.arrangement_ = arrangement;
  s.seed_ = seed;
  s.depth_ = depth;
  s.tail_mass_ = tail_mass;
  s.extent_ = extent;
  s.gaps_ = std::move(gaps);
  for (auto& g : s.gaps_) g.level = static_cast<int>(std::bit_width(g.index));
  return s;
}

std::vector<LevelInterval> ApproxSet::level_intervals(int n) const {
  if (n < 0 || n > depth_)
    throw Error(ErrorKind::invalid_range,
                "level " + std::to_string(n) + " outside [0, " + std::to_string(depth_) + "]");
  std::vector<LevelInterval> out;
  out.reserve(std::size_t{1} << n);
  double left = 0.0;
  std::size_t begin = 0;
  for (std::size_t p = 0; p < gaps_.size(); ++p) {
    if (gaps_[p].level > n) continue;
    out.push_back({left, gaps_[p].left, gaps_[p].left - left, begin, p});
    left = gaps_[p].right();
    begin = p + 1;
  }
  out.push_back({left, extent_, extent_ - left, begin, gaps_.size()});
  return out;
}

std::vector<uint32_t> level_gap_counts(const ApproxSet& s, int n, int lo, int hi) {
  if (n < 0 || n > s.depth() || lo <= n || hi < lo || hi > s.depth())
    throw Error(ErrorKind::invalid_range,
                "need 0 <= n < lo <= hi <= W, got n = " + std::to_string(n) + ", [" +
                    std::to_string(lo) + ", " + std::to_string(hi) + "], W = " +
                    std::to_string(s.depth()));
  std::vector<uint32_t> counts(std::size_t{1} << n, 0);
  std::size_t interval = 0;
  for (const auto& g : s.gaps()) {
    if (g.level <= n)
      ++interval;
    else if (g.level >= lo && g.level <= hi)
      ++counts[interval];
  }
  return counts;
}

}  // namespace phidim
