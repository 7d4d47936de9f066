#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "phidim/cantor_formula.hpp"
#include "phidim/dimension_function.hpp"
#include "phidim/random_model.hpp"
#include "phidim/sequence.hpp"

namespace phidim {

// Coordinates closer than this are treated as equal by the sweep: a point is
// covered when it lies at most this far beyond the current ball.
inline constexpr double kCoverTolerance = 1e-13;

// Least number of closed intervals of length 2r covering the union of the
// given (sorted, disjoint) segments clipped to [lo, hi]. Greedy left to
// right, which is optimal on the line.
uint64_t cover_segments(std::span<const Segment> segments, double lo, double hi, double r);

// N_r(B(x, R) cap E) for the depth-W truncation s, whose level-W intervals
// count as solid. Throws truncation-violation when r < s.truncation_floor().
uint64_t cover_count(const ApproxSet& s, double x, double R, double r);

struct CoverQuery {
  int n = 0;  // level the window was built from
  double x = 0.0;
  double R = 0.0;
  double r = 0.0;
  uint64_t count = 0;
  double exponent = 0.0;  // ln N / ln(R / r)
};

struct WindowPolicy {
  // Centers come from level-n intervals, n in [n_lo, n_hi].
  int n_lo = 1;
  int n_hi = 1;
  // Radii R = s_m for m in [n - radius_span + 1, n].
  int radius_span = 1;
  // r runs over s_{m + j + k}, j = max(phi(m), min_separation),
  // k = 0 .. ladder_length - 1, stopping at the truncation floor.
  int min_separation = 0;
  int ladder_length = 1;
  // Level-n intervals used as centers per level; 0 keeps all 2^n. When capped,
  // a uniform subset is drawn with `seed` and both endpoints are kept.
  std::size_t subsample_cap = 0;
  uint64_t seed = 0;
  // Also use the contracted radius (1 - 2 lambda_hat) s_n.
  bool contracted = false;
};

// Admissible windows (x, R, r): x an endpoint of a level-n interval,
// R in {s_m, (1 - 2 lambda) s_m}, r <= R^{1 + Phi(R)} and r >= the
// truncation floor. Windows with r >= R are kept here and dropped by the
// estimator.
std::vector<CoverQuery> enumerate_windows(const ApproxSet& s, const DimensionFunction& f,
                                          const LevelProfile& p, const DepthTable& d,
                                          const WindowPolicy& policy);

struct DimensionEstimate {
  Direction direction = Direction::upper;
  double beta_hat = 0.0;
  CoverQuery extremal;
  std::vector<CoverQuery> records;
  int depth_used = 0;
  WindowPolicy policy;
};

DimensionEstimate estimate_dimension(const ApproxSet& s, Direction direction,
                                     const DimensionFunction& f, const LevelProfile& p,
                                     const DepthTable& d, const WindowPolicy& policy);

struct EstimatePair {
  DimensionEstimate upper;
  DimensionEstimate lower;
};

// Both directions from one pass of cover counts.
EstimatePair estimate_dimensions(const ApproxSet& s, const DimensionFunction& f,
                                 const LevelProfile& p, const DepthTable& d,
                                 const WindowPolicy& policy);

}  // namespace phidim
