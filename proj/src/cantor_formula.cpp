#include "phidim/cantor_formula.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "phidim/error.hpp"

namespace phidim {

const char* to_string(Direction d) { return d == Direction::upper ? "upper" : "lower"; }

namespace {

constexpr int kFirstRung = 4;

bool better(Direction dir, double candidate, double current) {
  return dir == Direction::upper ? candidate > current : candidate < current;
}

FormulaEstimate formula_estimate(Direction dir, const LevelProfile& p, const DepthTable& d,
                                 int N) {
  if (N < 1 || N > p.depth())
    throw Error(ErrorKind::insufficient_depth,
                "N = " + std::to_string(N) + " exceeds the profile depth " +
                    std::to_string(p.depth()));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double ln2 = std::log(2.0);

  FormulaEstimate est;
  est.direction = dir;
  est.levels = N;
  est.per_level_extremum.assign(static_cast<std::size_t>(N) + 1, nan);
  est.per_level_window.assign(static_cast<std::size_t>(N) + 1, LevelWindow{});

  for (int k = 1; k < N; ++k) {
    if (!d.contains(k) || d.at(k) > N - k) {
      if (k >= kFirstRung) ++est.skipped_levels;
      continue;
    }
    const int n_min = std::max(d.at(k), 1);
    double best = nan;
    LevelWindow where;
    for (int n = n_min; k + n <= N; ++n) {
      const double value = n * ln2 / (p.log_s[k] - p.log_s[k + n]);
      if (std::isnan(best) || better(dir, value, best)) {
        best = value;
        where = {k, n};
      }
    }
    est.per_level_extremum[k] = best;
    est.per_level_window[k] = where;
  }

  for (int k0 = kFirstRung; k0 < N; k0 *= 2) {
    double best = nan;
    LevelWindow where;
    for (int k = k0; k < N; ++k) {
      const double v = est.per_level_extremum[k];
      if (std::isnan(v)) continue;
      if (std::isnan(best) || better(dir, v, best)) {
        best = v;
        where = est.per_level_window[k];
      }
    }
    if (std::isnan(best)) break;
    est.ladder.push_back({k0, best, where});
  }
  if (est.ladder.empty())
    throw Error(ErrorKind::no_admissible_window,
                "no (k, n) with k >= " + std::to_string(kFirstRung) +
                    ", n >= phi(k), k + n <= " + std::to_string(N));

  est.beta_limit = est.ladder.back().beta;
  est.window_argmax = est.ladder.back().extremal;
  if (est.ladder.size() >= 2)
    est.stability = std::abs(est.ladder.back().beta - est.ladder[est.ladder.size() - 2].beta);
  return est;
}

}  // namespace

double FormulaEstimate::beta_at(int k0) const {
  double best = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = static_cast<std::size_t>(std::max(k0, 1)); k < per_level_extremum.size(); ++k) {
    const double v = per_level_extremum[k];
    if (std::isnan(v)) continue;
    if (std::isnan(best) || better(direction, v, best)) best = v;
  }
  if (std::isnan(best))
    throw Error(ErrorKind::no_admissible_window, "no admissible window at k0 = " + std::to_string(k0));
  return best;
}

FormulaEstimate upper_phi_dim_formula(const LevelProfile& p, const DepthTable& d, int N) {
  return formula_estimate(Direction::upper, p, d, N);
}

FormulaEstimate lower_phi_dim_formula(const LevelProfile& p, const DepthTable& d, int N) {
  return formula_estimate(Direction::lower, p, d, N);
}

BoxEstimate box_dim_estimate(const LevelProfile& p) {
  if (p.depth() < 16)
    throw Error(ErrorKind::insufficient_depth, "box estimate needs at least 16 levels");
  BoxEstimate box;
  const double ln2 = std::log(2.0);
  for (int n = 1; n <= p.depth(); ++n) box.trend.push_back(n * ln2 / -p.log_s[n]);
  box.value = box.trend.back();
  return box;
}

}  // namespace phidim
