#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phidim/sequence.hpp"

namespace phidim {

enum class PhiFamily {
  zero,          // 0 (Assouad case)
  constant,      // delta
  inverse_log,   // c / |ln x|
  psi,           // ln|ln x| / |ln x|
  scaled_psi,    // gamma ln|ln x| / |ln x|
  power_of_log,  // |ln x|^{-p}, p in (0, 1)
  tabulated,     // knots (x, Phi(x)), linear in ln x, clamped outside
};

// A dimension function Phi : (0, 1) -> R+ for which x^{1 + Phi(x)} is
// non-increasing as x decreases. All logarithms are natural.
//
// Evaluation happens in log space (at_log) so that level sums far below the
// smallest double can still be fed in; the accepted domain is
// ln x in [log_domain_floor(), ln domain_ceiling()).
class DimensionFunction {
 public:
  static constexpr double kDefaultLogFloor = -1e4;
  static constexpr std::size_t kValidationGrid = 4096;

  static DimensionFunction zero();
  static DimensionFunction constant(double delta);
  static DimensionFunction inverse_log(double c);
  static DimensionFunction psi();
  static DimensionFunction scaled_psi(double gamma);
  static DimensionFunction power_of_log(double p);
  static DimensionFunction tabulated(std::vector<std::pair<double, double>> knots);

  PhiFamily family() const { return family_; }
  // delta, c, gamma or p; 0 for zero / psi / tabulated.
  double parameter() const { return param_; }
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }

  double log_domain_floor() const { return log_floor_; }
  double domain_ceiling() const { return ceiling_; }

  double operator()(double x) const;
  double at_log(double log_x) const;

  // Short human-readable tag, e.g. "const:0.5".
  std::string describe() const;

 private:
  DimensionFunction(PhiFamily family, double param);
  double formula(double log_x) const;
  void validate() const;

  PhiFamily family_;
  double param_;
  double ceiling_ = 1.0;
  double log_floor_ = kDefaultLogFloor;
  std::vector<std::pair<double, double>> knots_;  // (ln x, Phi)
};

double eval_phi(const DimensionFunction& f, double x);

enum class Regime { large, small, indeterminate };

const char* to_string(Regime regime);

// Integer depth function phi(n): the least j >= 0 with
// s_{n+j} <= s_n^{1 + Phi(s_n)}.
struct DepthTable {
  // Smallest level kept: levels with s_n >= 1/2 or s_n outside Phi's domain
  // are dropped.
  int first_level = 0;
  std::vector<int> phi;
  // phi(n) / (n Phi(s_n)) when phi(n) >= 2, otherwise nullopt.
  std::vector<std::optional<double>> asymptotic_ratio;
  Regime regime = Regime::indeterminate;

  int last_level() const { return first_level + static_cast<int>(phi.size()) - 1; }
  bool contains(int n) const { return n >= first_level && n <= last_level(); }
  int at(int n) const;
  std::size_t size() const { return phi.size(); }
};

// Strict variant: every level first_level..n_max must resolve inside the
// profile, otherwise insufficient-depth.
DepthTable depth_function(const DimensionFunction& f, const LevelProfile& p, int n_max);

// Resolves as many levels as the profile allows. n + phi(n) is
// non-decreasing, so the resolved levels form a prefix.
DepthTable depth_function(const DimensionFunction& f, const LevelProfile& p);

// Heuristic classification from the trend of phi(n) / ln n over the top half
// of the table. Needs at least 64 levels; fewer yields indeterminate.
Regime classify_regime(const DepthTable& d);

}  // namespace phidim
