#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace phidim {

// Neumaier's compensated summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

enum class SequenceKind { explicit_list, central, middle_third };

// A non-increasing gap sequence a_1 >= a_2 >= ... with total sum 1.
//
// Rule-based kinds (central, middle_third) are evaluated lazily in closed
// form. A central sequence takes a per-level ratio schedule r_1, r_2, ...
// that is repeated cyclically when shorter than the requested depth; the
// level-n gaps a_i, 2^{n-1} <= i < 2^n, all equal (1 - 2 r_n) prod_{k<n} r_k.
class GapSequence {
 public:
  static constexpr int kDefaultMaxDepth = 2048;
  static constexpr std::size_t kMaxExplicitTerms = std::size_t{1} << 24;

  static GapSequence explicit_list(std::vector<double> terms);
  static GapSequence central(std::vector<double> ratios,
                             int max_depth = kDefaultMaxDepth);
  static GapSequence middle_third(int max_depth = kDefaultMaxDepth);

  SequenceKind kind() const { return kind_; }
  bool rule_based() const { return kind_ != SequenceKind::explicit_list; }

  // Deepest level n for which s_n is available.
  int max_level() const { return max_level_; }
  // Largest materializable index.
  uint64_t max_index() const;

  std::span<const double> ratio_schedule() const { return ratios_; }
  std::span<const double> terms() const { return terms_; }

  // r_n for a rule-based sequence, n >= 1.
  double ratio(int level) const;

  // a_j, 1-based.
  double term(uint64_t j) const;

  // Sum of a_j over j >= 2^depth.
  double tail_mass(int depth) const;

  // ln s_n and s_n = 2^{-n} sum_{j >= 2^n} a_j.
  double log_level_sum(int n) const;
  double level_sum(int n) const;

 private:
  GapSequence() = default;

  SequenceKind kind_ = SequenceKind::central;
  int max_level_ = 0;
  std::vector<double> ratios_;
  std::vector<double> terms_;
  // log s_n for rule-based kinds (n = 0..max_level_), compensated partial
  // sums of ln r_k.
  std::vector<double> log_s_;
  // suffix_[j] = sum_{i >= j} a_i for explicit lists (1-based, size L + 2).
  std::vector<double> suffix_;
};

// Level sums s_0..s_N together with the empirical hypothesis constants.
struct LevelProfile {
  std::vector<double> s;
  std::vector<double> log_s;
  double tau_hat = 0.0;     // min s_{n+1}/s_n over n = 0..N-1
  double lambda_hat = 0.0;  // max s_{n+1}/s_n over n = 0..N-1
  double kappa_hat = 0.0;   // max a_j / a_{2j} over the computed range
  bool level_comparable = false;
  bool doubling = false;

  int depth() const { return static_cast<int>(s.size()) - 1; }
};

LevelProfile level_sums(const GapSequence& a, int N);

struct LevelComparability {
  double tau = 0.0;
  double lambda = 0.0;
  bool verdict = false;
};

// Strict "< 1/2" is enforced with a margin of this size.
inline constexpr double kHalfMargin = 1e-9;

LevelComparability check_level_comparable(const LevelProfile& p);

}  // namespace phidim
