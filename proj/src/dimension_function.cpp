#include "phidim/dimension_function.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "phidim/error.hpp"

namespace phidim {

namespace {

// Relative slack in the depth threshold comparison, so that exact algebraic
// ties (e.g. s_n = lambda^n with delta * n integral) resolve the same way
// regardless of rounding in ln s_n.
constexpr double kThresholdSlack = 1e-12;

const double kPsiCeiling = std::exp(-(1.0 + 1e-9));

}  // namespace

DimensionFunction::DimensionFunction(PhiFamily family, double param)
    : family_(family), param_(param) {}

DimensionFunction DimensionFunction::zero() {
  DimensionFunction f{PhiFamily::zero, 0.0};
  f.validate();
  return f;
}

DimensionFunction DimensionFunction::constant(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw Error(ErrorKind::invalid_function, "constant family needs delta > 0 (use zero for 0)");
  DimensionFunction f{PhiFamily::constant, delta};
  f.validate();
  return f;
}

DimensionFunction DimensionFunction::inverse_log(double c) {
  if (!(c > 0.0) || !std::isfinite(c))
    throw Error(ErrorKind::invalid_function, "inverse-log family needs c > 0");
  DimensionFunction f{PhiFamily::inverse_log, c};
  f.validate();
  return f;
}

DimensionFunction DimensionFunction::psi() {
  DimensionFunction f{PhiFamily::psi, 0.0};
  f.ceiling_ = kPsiCeiling;
  f.validate();
  return f;
}

DimensionFunction DimensionFunction::scaled_psi(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw Error(ErrorKind::invalid_function, "scaled psi needs gamma > 0");
  DimensionFunction f{PhiFamily::scaled_psi, gamma};
  f.ceiling_ = kPsiCeiling;
  f.validate();
  return f;
}

DimensionFunction DimensionFunction::power_of_log(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw Error(ErrorKind::invalid_function, "power-of-log needs p in (0, 1)");
  DimensionFunction f{PhiFamily::power_of_log, p};
  f.validate();
  return f;
}

DimensionFunction DimensionFunction::tabulated(std::vector<std::pair<double, double>> knots) {
  if (knots.empty()) throw Error(ErrorKind::invalid_function, "empty table");
  DimensionFunction f{PhiFamily::tabulated, 0.0};
  double prev = 0.0;
  for (const auto& [x, phi] : knots) {
    if (!(x > prev && x < 1.0))
      throw Error(ErrorKind::invalid_function, "table abscissae must increase inside (0, 1)");
    if (!(phi >= 0.0) || !std::isfinite(phi))
      throw Error(ErrorKind::invalid_function, "table values must be finite and >= 0");
    prev = x;
    f.knots_.emplace_back(std::log(x), phi);
  }
  f.validate();
  return f;
}

double DimensionFunction::formula(double log_x) const {
  const double L = -log_x;
  switch (family_) {
    case PhiFamily::zero: return 0.0;
    case PhiFamily::constant: return param_;
    case PhiFamily::inverse_log: return param_ / L;
    case PhiFamily::psi: return std::log(L) / L;
    case PhiFamily::scaled_psi: return param_ * std::log(L) / L;
    case PhiFamily::power_of_log: return std::pow(L, -param_);
    case PhiFamily::tabulated: {
      if (log_x <= knots_.front().first) return knots_.front().second;
      if (log_x >= knots_.back().first) return knots_.back().second;
      auto hi = std::upper_bound(knots_.begin(), knots_.end(), log_x,
                                 [](double v, const auto& k) { return v < k.first; });
      auto lo = std::prev(hi);
      const double t = (log_x - lo->first) / (hi->first - lo->first);
      return lo->second + t * (hi->second - lo->second);
    }
  }
  return 0.0;
}

double DimensionFunction::at_log(double log_x) const {
  if (!(log_x >= log_floor_) || !(log_x < std::log(ceiling_)))
    throw Error(ErrorKind::out_of_domain,
                "ln x = " + std::to_string(log_x) + " outside the domain of " + describe());
  return formula(log_x);
}

double DimensionFunction::operator()(double x) const {
  if (!(x > 0.0 && x < ceiling_))
    throw Error(ErrorKind::out_of_domain,
                "x = " + std::to_string(x) + " outside the domain of " + describe());
  return at_log(std::log(x));
}

double eval_phi(const DimensionFunction& f, double x) { return f(x); }

void DimensionFunction::validate() const {
  // x^{1+Phi(x)} non-increasing as x decreases <=> L (1 + Phi) non-decreasing
  // in L = |ln x|.
  const double top = std::log(std::min(0.5, ceiling_)) - 1e-12;
  const double bottom = log_floor_;
  double prev_g = -1.0;
  for (std::size_t i = 0; i < kValidationGrid; ++i) {
    const double t = static_cast<double>(i) / (kValidationGrid - 1);
    const double log_x = top + t * (bottom - top);
    const double phi = formula(log_x);
    if (!(phi >= 0.0) || (family_ != PhiFamily::zero && family_ != PhiFamily::tabulated && !(phi > 0.0)))
      throw Error(ErrorKind::invalid_function, describe() + " is not positive on its domain");
    const double g = -log_x * (1.0 + phi);
    if (g < prev_g * (1.0 - 1e-12))
      throw Error(ErrorKind::invalid_function,
                  describe() + ": x^(1+Phi(x)) increases as x decreases near ln x = " +
                      std::to_string(log_x));
    prev_g = g;
  }
}

std::string DimensionFunction::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (family_) {
    case PhiFamily::zero: os << "zero"; break;
    case PhiFamily::constant: os << "const:" << param_; break;
    case PhiFamily::inverse_log: os << "invlog:" << param_; break;
    case PhiFamily::psi: os << "psi"; break;
    case PhiFamily::scaled_psi: os << "scaledpsi:" << param_; break;
    case PhiFamily::power_of_log: os << "powlog:" << param_; break;
    case PhiFamily::tabulated: os << "table[" << knots_.size() << "]"; break;
  }
  return os.str();
}

const char* to_string(Regime regime) {
  switch (regime) {
    case Regime::large: return "large";
    case Regime::small: return "small";
    case Regime::indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

int DepthTable::at(int n) const {
  if (!contains(n))
    throw Error(ErrorKind::insufficient_depth,
                "depth table has no entry for level " + std::to_string(n));
  return phi[static_cast<std::size_t>(n - first_level)];
}

namespace {

DepthTable build_depth_table(const DimensionFunction& f, const LevelProfile& p,
                             std::optional<int> n_max) {
  const int N = p.depth();
  const double log_half = std::log(0.5);
  const double log_ceiling = std::log(f.domain_ceiling());

  int first = 0;
  while (first <= N && (p.log_s[first] >= log_half || p.log_s[first] >= log_ceiling)) ++first;
  if (first > N) throw Error(ErrorKind::insufficient_depth, "no level below 1/2 inside Phi's domain");

  DepthTable d;
  d.first_level = first;
  const int last = n_max ? *n_max : N;
  if (n_max && *n_max < first)
    throw Error(ErrorKind::insufficient_depth,
                "n_max = " + std::to_string(*n_max) + " precedes the first usable level " +
                    std::to_string(first));

  for (int n = first; n <= last; ++n) {
    if (n > N || p.log_s[n] < f.log_domain_floor()) {
      if (n_max) throw Error(ErrorKind::insufficient_depth, "level " + std::to_string(n) + " not in profile");
      break;
    }
    const double phi_at = f.at_log(p.log_s[n]);
    const double threshold = (1.0 + phi_at) * p.log_s[n];
    const double cut = threshold + kThresholdSlack * std::abs(threshold);
    if (p.log_s[N] > cut) {
      if (n_max)
        throw Error(ErrorKind::insufficient_depth,
                    "s_{n+j} never reaches s_n^(1+Phi(s_n)) for n = " + std::to_string(n) +
                        " within " + std::to_string(N) + " levels");
      break;
    }
    // log_s is strictly decreasing: first index in [n, N] at or below cut.
    auto it = std::partition_point(p.log_s.begin() + n, p.log_s.end(),
                                   [cut](double v) { return v > cut; });
    const int j = static_cast<int>(it - (p.log_s.begin() + n));
    d.phi.push_back(j);
    if (j >= 2 && phi_at > 0.0)
      d.asymptotic_ratio.emplace_back(j / (n * phi_at));
    else
      d.asymptotic_ratio.emplace_back(std::nullopt);
  }
  if (d.phi.empty())
    throw Error(ErrorKind::insufficient_depth, "profile too shallow to resolve any depth");
  d.regime = classify_regime(d);
  return d;
}

}  // namespace

DepthTable depth_function(const DimensionFunction& f, const LevelProfile& p, int n_max) {
  return build_depth_table(f, p, n_max);
}

DepthTable depth_function(const DimensionFunction& f, const LevelProfile& p) {
  return build_depth_table(f, p, std::nullopt);
}

Regime classify_regime(const DepthTable& d) {
  if (d.size() < 64) return Regime::indeterminate;
  const int lo = d.first_level + static_cast<int>(d.size() / 2);
  const int hi = d.last_level();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (int n = std::max(lo, 2); n <= hi; ++n) {
    const double x = n;
    const double y = d.at(n) / std::log(static_cast<double>(n));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  const double end_ratio = d.at(hi) / std::log(static_cast<double>(hi));
  if (slope > 0.0 && end_ratio > 4.0) return Regime::large;
  if (slope <= 0.0 && end_ratio < 0.25) return Regime::small;
  return Regime::indeterminate;
}

}  // namespace phidim
