#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "phidim/sequence.hpp"

namespace phidim {

// The weight omega_i ~ U[0,1) of gap index i under master seed `seed`.
// Gap i is to the left of gap j iff (omega_i, i) < (omega_j, j).
double order_weight(uint64_t seed, uint64_t index);

// Random total order on the gap indices 1 .. m, listed left to right.
class RandomOrder {
 public:
  static constexpr int kMaxDepth = 26;

  // Orders 1 .. 2^depth - 1 by their counter-based weights.
  static RandomOrder sample(uint64_t seed, int depth);
  // Orders 1 .. omega.size() by the given weights (ties by index).
  static RandomOrder from_weights(std::span<const double> omega);

  std::optional<uint64_t> seed() const { return seed_; }
  std::size_t size() const { return order_.size(); }
  std::span<const uint32_t> left_to_right() const { return order_; }

 private:
  std::optional<uint64_t> seed_;
  std::vector<uint32_t> order_;
};

inline RandomOrder sample_order(uint64_t seed, int depth) {
  return RandomOrder::sample(seed, depth);
}

enum class ArrangementKind { random, cantor, decreasing };

const char* to_string(ArrangementKind kind);

struct PlacedGap {
  uint32_t index = 0;
  int level = 0;  // ceil(log2(index + 1))
  double length = 0.0;
  double left = 0.0;

  double right() const { return left + length; }
};

// A closed component of [0, 1] minus the gaps of level <= n. Degenerate
// (zero-length) components are kept so that level n always has 2^n entries.
struct LevelInterval {
  double left = 0.0;
  double right = 0.0;
  // Length of the interval: everything not removed by gaps of level <= n.
  double content_mass = 0.0;
  // Gaps of deeper levels lying inside, as a range of ApproxSet::gaps().
  std::size_t gap_begin = 0;
  std::size_t gap_end = 0;
};

struct Segment {
  double left = 0.0;
  double right = 0.0;
};

// Depth-W truncation of a complementary set: the 2^W - 1 gaps of level <= W
// placed left to right, with the mass of all deeper gaps carried by the 2^W
// level-W intervals. Those intervals are treated as solid segments.
//
// Residual mass per level-W interval: exact for the Cantor arrangement,
// the whole tail in the leftmost interval for the decreasing arrangement
// (the deeper gaps of D_a accumulate at 0), and the equal share
// tail / 2^W for random arrangements.
class ApproxSet;
ApproxSet build_set(const GapSequence& a, const RandomOrder& order, int W);
ApproxSet build_set(const GapSequence& a, ArrangementKind arrangement, int W);

class ApproxSet {
 public:
  static ApproxSet from_gap_table(int depth, double tail_mass, ArrangementKind arrangement,
                                  std::optional<uint64_t> seed, std::vector<PlacedGap> gaps,
                                  double extent);

  ArrangementKind arrangement() const { return arrangement_; }
  std::optional<uint64_t> seed() const { return seed_; }
  int depth() const { return depth_; }
  double tail_mass() const { return tail_mass_; }
  // tail_mass / 2^W: the truncation error attributed to one level-W interval.
  double residual_share() const;
  // Smallest admissible covering radius, 2 * residual_share().
  double truncation_floor() const { return 2.0 * residual_share(); }
  // Right end of the rightmost interval (1 up to rounding).
  double extent() const { return extent_; }

  std::span<const PlacedGap> gaps() const { return gaps_; }
  std::size_t segment_count() const { return gaps_.size() + 1; }
  Segment segment(std::size_t k) const {
    return {k == 0 ? 0.0 : gaps_[k - 1].right(), k == gaps_.size() ? extent_ : gaps_[k].left};
  }

  std::vector<LevelInterval> level_intervals(int n) const;

 private:
  ApproxSet() = default;
  static ApproxSet place(const GapSequence& a, std::span<const uint32_t> order,
                         std::span<const double> shares, int W, ArrangementKind arrangement,
                         std::optional<uint64_t> seed);
  friend ApproxSet build_set(const GapSequence&, const RandomOrder&, int);
  friend ApproxSet build_set(const GapSequence&, ArrangementKind, int);

  ArrangementKind arrangement_ = ArrangementKind::random;
  std::optional<uint64_t> seed_;
  int depth_ = 0;
  double tail_mass_ = 0.0;
  double extent_ = 1.0;
  std::vector<PlacedGap> gaps_;
};

ApproxSet build_set(const GapSequence& a, const RandomOrder& order, int W);
ApproxSet build_set(const GapSequence& a, ArrangementKind arrangement, int W);

// In-order position p (0-based) of the heap-indexed Cantor construction of
// depth W maps to this gap index.
uint32_t cantor_index_at(uint64_t position, int W);

// For every level-n interval, the number of gaps with level in [lo, hi]
// inside it.
std::vector<uint32_t> level_gap_counts(const ApproxSet& s, int n, int lo, int hi);

}  // namespace phidim
