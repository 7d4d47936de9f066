#pragma once

#include <vector>

#include "phidim/dimension_function.hpp"
#include "phidim/sequence.hpp"

namespace phidim {

enum class Direction { upper, lower };

const char* to_string(Direction d);

// A (k, n) pair: the ratio s_k / s_{k+n} compared with 2^n.
struct LevelWindow {
  int k = 0;
  int n = 0;
};

struct LadderEntry {
  int k0 = 0;
  double beta = 0.0;
  LevelWindow extremal;
};

// Upper (lower) Phi-dimension of the Cantor set C_a, realized as the
// extremum of n ln 2 / ln(s_k / s_{k+n}) over k >= k0, n >= phi(k), k + n <= N
// along the ladder k0 = 4, 8, 16, ...
struct FormulaEstimate {
  Direction direction = Direction::upper;
  int levels = 0;
  std::vector<LadderEntry> ladder;
  double beta_limit = 0.0;
  LevelWindow window_argmax;
  // |beta(k0_max) - beta(k0_max / 2)|; 0 for a one-rung ladder.
  double stability = 0.0;
  // Levels k >= 4 skipped because phi(k) > N - k or phi(k) unresolved.
  int skipped_levels = 0;

  // Extremum at an arbitrary k0 (need not be a ladder rung).
  double beta_at(int k0) const;

  std::vector<double> per_level_extremum;  // indexed by k, NaN when no window
  std::vector<LevelWindow> per_level_window;
};

FormulaEstimate upper_phi_dim_formula(const LevelProfile& p, const DepthTable& d, int N);
FormulaEstimate lower_phi_dim_formula(const LevelProfile& p, const DepthTable& d, int N);

struct BoxEstimate {
  double value = 0.0;
  std::vector<double> trend;  // n ln 2 / |ln s_n| for n = 1..N
};

// n ln 2 / |ln s_n| at the deepest level. Needs >= 16 levels.
BoxEstimate box_dim_estimate(const LevelProfile& p);

}  // namespace phidim
