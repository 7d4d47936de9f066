#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "phidim/cantor_formula.hpp"
#include "phidim/covering.hpp"
#include "phidim/dimension_function.hpp"
#include "phidim/random_model.hpp"
#include "phidim/sequence.hpp"

namespace phidim {

// Runs body(i) for i in [0, count) on `threads` workers. Each index is
// handled exactly once and results are expected to be written to slot i, so
// the outcome does not depend on scheduling.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

// PHIDIM_THREADS if set, otherwise the hardware concurrency (at least 1).
int default_threads();

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

// Linear interpolation between order statistics (type 7).
Quartiles quartiles(std::vector<double> values);

// Window policy of the dichotomy experiment, stated relative to the depth W
// so that one description serves the whole W ladder.
struct DichotomyPolicy {
  int center_back = 6;     // centers from level n = W - center_back
  int radius_span = 3;     // R = s_m, m in [n - radius_span + 1, n]
  int min_separation = 3;  // r = s_{m + max(phi(m), min_separation) + k}
  int ladder_length = 64;  // clipped by the truncation floor
  std::size_t subsample_cap = 0;
  bool contracted = false;

  WindowPolicy at_depth(int W, uint64_t seed) const;
};

struct TrialStats {
  uint64_t trial_id = 0;
  uint64_t seed = 0;
  double beta_up = 0.0;
  double beta_low = 0.0;
  CoverQuery up_window;
  CoverQuery low_window;
  // Balls-into-bins quantities at the center level n.
  int n = 0;
  int phi_n = 0;
  uint32_t M_n = 0;
  std::optional<double> K_n;
  bool empty_bin = false;
  double max_len_n = 0.0;
  double len_bound_n = 0.0;
  double epsilon_n = 0.0;
};

struct DepthSummary {
  int W = 0;
  Quartiles beta_up;
  Quartiles beta_low;
  // Same estimator on the Cantor arrangement (no randomness).
  double cantor_up = 0.0;
  double cantor_low = 0.0;
  std::vector<TrialStats> trials;
};

struct DichotomyConfig {
  std::vector<int> depths{14, 17, 20};
  int trials = 100;
  uint64_t master_seed = 0;
  DichotomyPolicy policy;
  int formula_levels = 64;
  double empty_bin_A = 0.5;
  int threads = 1;
};

struct ExperimentReport {
  Regime regime = Regime::indeterminate;
  FormulaEstimate cantor_upper;
  FormulaEstimate cantor_lower;
  double box = 0.0;
  std::vector<DepthSummary> ladder;
};

// Random arrangements of a at every depth in cfg.depths. Trial t uses the
// key derive_key(master_seed, t) at every depth, so the sets along the ladder
// are truncations of one and the same random set.
ExperimentReport run_dichotomy_experiment(const GapSequence& a, const DimensionFunction& f,
                                          const DichotomyConfig& cfg);

// K_n = 2 ln 2^n / ln(2^n ln 2^n / 2^{n + phi}); nullopt when the log is <= 0.
std::optional<double> max_load_threshold(int n, int phi);

struct MaxLoadReport {
  int n = 0;
  int phi = 0;
  double K_n = 0.0;
  std::vector<uint32_t> M;          // per trial
  std::vector<uint64_t> histogram;  // histogram[c] = trials with M_n == c
  double frequency = 0.0;           // of M_n > K_n
  uint32_t cantor_M = 0;            // M_n of the Cantor arrangement
};

// M_n of one random order: the largest number of gaps of levels
// n+1 .. n+phi falling in a single level-n interval. Only the weights of
// indices below 2^{n+phi} are drawn.
uint32_t max_load(uint64_t seed, int n, int phi);

// Throws out-of-regime unless 2^phi < (1 - margin) ln 2^n.
MaxLoadReport max_load_statistic(int n, int phi, int trials, uint64_t master_seed,
                                 int threads = 1, double margin = 0.05);

struct EmptyBinReport {
  int bins_log2 = 0;
  uint64_t balls = 0;
  std::vector<uint64_t> empty_counts;  // per trial
  double frequency = 0.0;              // of at least one empty bin
  double poisson_expected_empty = 0.0;  // bins e^{-balls/bins}
};

EmptyBinReport empty_bin_probability(int bins_log2, uint64_t balls, int trials,
                                     uint64_t master_seed, int threads = 1);

struct LengthLemmaReport {
  int n = 0;
  double C = 0.0;
  double epsilon_n = 0.0;
  double bound = 0.0;                 // 3 C s_n^{1 - eps_n}
  std::vector<double> max_length;     // per trial
  double frequency = 0.0;             // of max length <= bound
  double cantor_max_length = 0.0;
};

// Smallest C with C s_j >= a_{2^{j-1}} for j = 1 .. p.depth().
double length_constant(const GapSequence& a, const LevelProfile& p);

LengthLemmaReport interval_length_lemma_check(const GapSequence& a, int W, int n, int trials,
                                              uint64_t master_seed, int threads = 1);

struct TailCheck {
  uint64_t M = 0;
  int N = 0;
  double eta = 0.0;
  double mean = 0.0;  // M 2^{-N}
  bool hypothesis_met = false;
  bool corollary_applies = false;  // mean >= 200
  double exact_two_sided = 0.0;
  double dml_bound = 0.0;
  double exact_upper = 0.0;  // P(Y >= (13/12) M p)
  double exact_lower = 0.0;  // P(Y <= (11/12) M p)
  double corollary_bound = 0.0;
  bool pass = false;
};

inline constexpr double kCorollaryConstant = 1.0 / 432.0;

// ln P(Y = k) for Y ~ Binomial(M, p).
double binomial_log_pmf(uint64_t M, double p, uint64_t k);
// ln of the sum of P(Y = k) over k in [lo, hi].
double binomial_log_range(uint64_t M, double p, uint64_t lo, uint64_t hi);

TailCheck binomial_tail_row(uint64_t M, int N, double eta);
// Default grid: mean in {256, 512, 1024} times N in {2, 5, 8}.
std::vector<std::pair<uint64_t, int>> default_tail_grid();
std::vector<TailCheck> binomial_tail_check(const std::vector<std::pair<uint64_t, int>>& grid,
                                           double eta);

}  // namespace phidim
