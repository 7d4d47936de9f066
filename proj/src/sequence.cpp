#include "phidim/sequence.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "phidim/error.hpp"

namespace phidim {

namespace {

constexpr double kNormalizationTolerance = 1e-12;

int level_of(uint64_t j) { return static_cast<int>(std::bit_width(j)); }

}  // namespace

GapSequence GapSequence::explicit_list(std::vector<double> terms) {
  if (terms.empty()) throw Error(ErrorKind::not_normalized, "empty gap list");
  if (terms.size() > kMaxExplicitTerms)
    throw Error(ErrorKind::insufficient_depth,
                "explicit lists are capped at 2^24 terms");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (!(terms[i] > 0.0) || !std::isfinite(terms[i]))
      throw Error(ErrorKind::not_decreasing,
                  "term " + std::to_string(i + 1) + " is not positive");
    if (i > 0 && terms[i] > terms[i - 1])
      throw Error(ErrorKind::not_decreasing,
                  "a_" + std::to_string(i + 1) + " > a_" + std::to_string(i));
  }

  GapSequence a;
  a.kind_ = SequenceKind::explicit_list;
  const std::size_t L = terms.size();
  a.suffix_.assign(L + 2, 0.0);
  CompensatedSum acc;
  for (std::size_t j = L; j >= 1; --j) {
    acc.add(terms[j - 1]);
    a.suffix_[j] = acc.value();
  }
  if (std::abs(a.suffix_[1] - 1.0) > kNormalizationTolerance)
    throw Error(ErrorKind::not_normalized,
                "terms sum to " + std::to_string(a.suffix_[1]));

  // Level n is usable while the first gap of level n + 2 (index 2^{n+1})
  // exists, so that s_n > 0 and level-n intervals are split again.
  int N = 0;
  while ((uint64_t{1} << (N + 2)) <= L) ++N;
  a.max_level_ = N;
  a.terms_ = std::move(terms);
  return a;
}

GapSequence GapSequence::central(std::vector<double> ratios, int max_depth) {
  if (ratios.empty()) throw Error(ErrorKind::invalid_ratio, "empty ratio schedule");
  for (double r : ratios)
    if (!(r > 0.0 && r < 0.5))
      throw Error(ErrorKind::invalid_ratio,
                  "ratio " + std::to_string(r) + " outside (0, 1/2)");
  if (max_depth < 1) throw Error(ErrorKind::insufficient_depth, "max_depth < 1");

  GapSequence a;
  a.kind_ = SequenceKind::central;
  a.ratios_ = std::move(ratios);
  a.max_level_ = max_depth;
  a.log_s_.resize(static_cast<std::size_t>(max_depth) + 1);
  CompensatedSum acc;
  a.log_s_[0] = 0.0;
  for (int n = 1; n <= max_depth; ++n) {
    acc.add(std::log(a.ratio(n)));
    a.log_s_[n] = acc.value();
  }
  return a;
}

GapSequence GapSequence::middle_third(int max_depth) {
  GapSequence a = central({1.0 / 3.0}, max_depth);
  a.kind_ = SequenceKind::middle_third;
  // n * ln 3 is more accurate than a running sum.
  const double log3 = std::log(3.0);
  for (int n = 0; n <= max_depth; ++n) a.log_s_[n] = -n * log3;
  return a;
}

uint64_t GapSequence::max_index() const {
  if (!rule_based()) return terms_.size();
  const int bits = std::min(max_level_, 63);
  return (uint64_t{1} << bits) - 1;
}

double GapSequence::ratio(int level) const {
  if (!rule_based() || level < 1)
    throw Error(ErrorKind::invalid_ratio, "ratio schedule needs a rule-based sequence and level >= 1");
  return ratios_[static_cast<std::size_t>(level - 1) % ratios_.size()];
}

double GapSequence::term(uint64_t j) const {
  if (j < 1 || j > max_index())
    throw Error(ErrorKind::insufficient_depth,
                "a_" + std::to_string(j) + " is not materialized");
  if (!rule_based()) return terms_[j - 1];
  const int L = level_of(j);
  return (1.0 - 2.0 * ratio(L)) * std::exp(log_s_[L - 1]);
}

double GapSequence::tail_mass(int depth) const {
  if (depth < 0) throw Error(ErrorKind::invalid_range, "negative depth");
  if (!rule_based()) {
    if (depth >= 63) return 0.0;
    const uint64_t first = uint64_t{1} << depth;
    return first <= terms_.size() ? suffix_[first] : 0.0;
  }
  if (depth > max_level_)
    throw Error(ErrorKind::insufficient_depth,
                "tail below level " + std::to_string(max_level_));
  return std::exp(depth * std::log(2.0) + log_s_[depth]);
}

double GapSequence::log_level_sum(int n) const {
  if (n < 0 || n > max_level_)
    throw Error(ErrorKind::insufficient_depth,
                "s_" + std::to_string(n) + " beyond level " + std::to_string(max_level_));
  if (rule_based()) return log_s_[n];
  return std::log(suffix_[uint64_t{1} << n]) - n * std::log(2.0);
}

double GapSequence::level_sum(int n) const {
  if (rule_based()) return std::exp(log_level_sum(n));
  (void)log_level_sum(n);  // range check
  return std::ldexp(suffix_[uint64_t{1} << n], -n);
}

LevelProfile level_sums(const GapSequence& a, int N) {
  if (N < 0 || N > a.max_level())
    throw Error(ErrorKind::insufficient_depth,
                "requested " + std::to_string(N) + " levels, sequence supports " +
                    std::to_string(a.max_level()));
  LevelProfile p;
  p.s.resize(static_cast<std::size_t>(N) + 1);
  p.log_s.resize(static_cast<std::size_t>(N) + 1);
  for (int n = 0; n <= N; ++n) {
    p.log_s[n] = a.log_level_sum(n);
    p.s[n] = a.level_sum(n);
  }

  if (N >= 1) {
    p.tau_hat = std::numeric_limits<double>::infinity();
    p.lambda_hat = 0.0;
    for (int n = 0; n < N; ++n) {
      const double ratio = a.rule_based() ? std::exp(p.log_s[n + 1] - p.log_s[n])
                                          : p.s[n + 1] / p.s[n];
      p.tau_hat = std::min(p.tau_hat, ratio);
      p.lambda_hat = std::max(p.lambda_hat, ratio);
    }
  }

  // kappa: a_j / a_{2j}. Rule-based terms only depend on the level.
  double kappa = 0.0;
  if (a.rule_based()) {
    const int top = std::min(N, a.max_level() - 1);
    for (int L = 1; L <= top; ++L) {
      const double num = (1.0 - 2.0 * a.ratio(L));
      const double den = (1.0 - 2.0 * a.ratio(L + 1)) * a.ratio(L);
      kappa = std::max(kappa, num / den);
    }
  } else {
    const auto terms = a.terms();
    const uint64_t limit = std::min<uint64_t>(terms.size(), (uint64_t{2} << N) - 1);
    for (uint64_t j = 1; 2 * j <= limit; ++j)
      kappa = std::max(kappa, terms[j - 1] / terms[2 * j - 1]);
  }
  p.kappa_hat = kappa;
  p.doubling = kappa > 0.0 && std::isfinite(kappa);
  p.level_comparable = check_level_comparable(p).verdict;
  return p;
}

LevelComparability check_level_comparable(const LevelProfile& p) {
  LevelComparability out;
  if (p.depth() < 1) return out;
  out.tau = p.tau_hat;
  out.lambda = p.lambda_hat;
  out.verdict = out.tau > 0.0 && out.lambda <= 0.5 - kHalfMargin;
  return out;
}

}  // namespace phidim
