#include "phidim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "phidim/error.hpp"
#include "phidim/rng.hpp"

namespace phidim {

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

int default_threads() {
  if (const char* env = std::getenv("PHIDIM_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

Quartiles quartiles(std::vector<double> values) {
  if (values.empty()) return {};
  std::sort(values.begin(), values.end());
  auto at = [&](double q) {
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

WindowPolicy DichotomyPolicy::at_depth(int W, uint64_t seed) const {
  WindowPolicy w;
  w.n_lo = w.n_hi = W - center_back;
  w.radius_span = radius_span;
  w.min_separation = min_separation;
  w.ladder_length = ladder_length;
  w.subsample_cap = subsample_cap;
  w.seed = seed;
  w.contracted = contracted;
  return w;
}

std::optional<double> max_load_threshold(int n, int phi) {
  const double log_bins = n * std::log(2.0);
  // ln(2^n ln 2^n / 2^{n + phi}) = ln ln 2^n - phi ln 2
  const double denom = std::log(log_bins) - phi * std::log(2.0);
  if (!(denom > 0.0)) return std::nullopt;
  return 2.0 * log_bins / denom;
}

double length_constant(const GapSequence& a, const LevelProfile& p) {
  double C = 0.0;
  for (int j = 1; j <= p.depth(); ++j) {
    const uint64_t idx = uint64_t{1} << (j - 1);
    if (idx > a.max_index()) break;
    C = std::max(C, a.term(idx) / p.s[j]);
  }
  return C;
}

namespace {

constexpr int kRegimeLevels = 256;

double epsilon_of(int n) { return 4.0 * std::log(static_cast<double>(n)) / n; }

TrialStats run_trial(const GapSequence& a, const DimensionFunction& f, const LevelProfile& p,
                     const DepthTable& d, const DichotomyConfig& cfg, int W, uint64_t t,
                     double C) {
  TrialStats st;
  st.trial_id = t;
  st.seed = rng::derive_key(cfg.master_seed, t);
  const ApproxSet s = build_set(a, RandomOrder::sample(st.seed, W), W);
  const auto est = estimate_dimensions(s, f, p, d, cfg.policy.at_depth(W, st.seed));
  st.beta_up = est.upper.beta_hat;
  st.beta_low = est.lower.beta_hat;
  st.up_window = est.upper.extremal;
  st.low_window = est.lower.extremal;

  const int n = W - cfg.policy.center_back;
  st.n = n;
  st.phi_n = d.contains(n) ? d.at(n) : 0;
  if (st.phi_n >= 1) {
    const auto counts = level_gap_counts(s, n, n + 1, std::min(n + st.phi_n, W));
    st.M_n = *std::max_element(counts.begin(), counts.end());
  }
  st.K_n = max_load_threshold(n, st.phi_n);
  const int extra = st.phi_n + static_cast<int>(std::floor(cfg.empty_bin_A * std::log(n)));
  if (extra >= 1) {
    const auto counts = level_gap_counts(s, n, n + 1, std::min(n + extra, W));
    st.empty_bin = std::find(counts.begin(), counts.end(), 0u) != counts.end();
  } else {
    st.empty_bin = true;
  }
  const auto intervals = s.level_intervals(n);
  for (const auto& I : intervals) st.max_len_n = std::max(st.max_len_n, I.content_mass);
  st.epsilon_n = epsilon_of(n);
  st.len_bound_n = 3.0 * C * std::exp((1.0 - st.epsilon_n) * p.log_s[n]);
  return st;
}

}  // namespace

ExperimentReport run_dichotomy_experiment(const GapSequence& a, const DimensionFunction& f,
                                          const DichotomyConfig& cfg) {
  if (cfg.depths.empty() || cfg.trials < 1)
    throw Error(ErrorKind::config, "need at least one depth and one trial");
  const int max_W = *std::max_element(cfg.depths.begin(), cfg.depths.end());
  // Extra levels only serve the regime classifier and are skipped for short
  // explicit sequences.
  const int needed = std::max(cfg.formula_levels, max_W + 8);
  if (a.max_level() < needed)
    throw Error(ErrorKind::insufficient_depth,
                "sequence provides " + std::to_string(a.max_level()) + " levels, need " +
                    std::to_string(needed));
  const int levels = std::min(a.max_level(), std::max(needed, kRegimeLevels));
  const LevelProfile p = level_sums(a, levels);
  if (!check_level_comparable(p).verdict)
    throw Error(ErrorKind::not_level_comparable,
                "the dichotomy needs 0 < tau <= s_{j+1}/s_j <= lambda < 1/2");
  const DepthTable d = depth_function(f, p);

  ExperimentReport report;
  report.regime = d.regime;
  report.cantor_upper = upper_phi_dim_formula(p, d, cfg.formula_levels);
  report.cantor_lower = lower_phi_dim_formula(p, d, cfg.formula_levels);
  report.box = box_dim_estimate(p).value;
  const double C = length_constant(a, p);

  for (int W : cfg.depths) {
    DepthSummary ds;
    ds.W = W;
    const ApproxSet cantor = build_set(a, ArrangementKind::cantor, W);
    const auto control = estimate_dimensions(cantor, f, p, d, cfg.policy.at_depth(W, 0));
    ds.cantor_up = control.upper.beta_hat;
    ds.cantor_low = control.lower.beta_hat;

    ds.trials.resize(static_cast<std::size_t>(cfg.trials));
    parallel_for(ds.trials.size(), cfg.threads, [&](std::size_t t) {
      ds.trials[t] = run_trial(a, f, p, d, cfg, W, t, C);
    });
    std::vector<double> up, low;
    for (const auto& st : ds.trials) {
      up.push_back(st.beta_up);
      low.push_back(st.beta_low);
    }
    ds.beta_up = quartiles(up);
    ds.beta_low = quartiles(low);
    report.ladder.push_back(std::move(ds));
  }
  return report;
}

uint32_t max_load(uint64_t seed, int n, int phi) {
  if (n < 1 || phi < 1 || n + phi > 40)
    throw Error(ErrorKind::invalid_range, "max_load needs n, phi >= 1 and n + phi <= 40");
  // Keys are the 53-bit numerators of omega; bucket the 2^n - 1 boundary
  // gaps by their top n bits so that every lookup is local.
  const uint64_t bins = uint64_t{1} << n;
  const int shift = 53 - n;
  std::vector<uint32_t> start(bins + 1, 0);
  for (uint64_t i = 1; i < bins; ++i) ++start[(rng::bits(seed, i) >> 11 >> shift) + 1];
  for (uint64_t b = 0; b < bins; ++b) start[b + 1] += start[b];
  std::vector<uint64_t> keys(bins - 1);
  {
    std::vector<uint32_t> fill(start.begin(), start.end() - 1);
    for (uint64_t i = 1; i < bins; ++i) {
      const uint64_t k = rng::bits(seed, i) >> 11;
      keys[fill[k >> shift]++] = k;
    }
  }
  for (uint64_t b = 0; b < bins; ++b) std::sort(keys.begin() + start[b], keys.begin() + start[b + 1]);

  std::vector<uint32_t> load(bins, 0);
  const uint64_t end = uint64_t{1} << (n + phi);
  for (uint64_t j = bins; j < end; ++j) {
    const uint64_t k = rng::bits(seed, j) >> 11;
    const uint64_t b = k >> shift;
    // Boundary gaps have smaller indices, so they precede j on ties.
    const auto first = keys.begin() + start[b], last = keys.begin() + start[b + 1];
    const auto rank = static_cast<uint64_t>(std::upper_bound(first, last, k) - keys.begin());
    ++load[rank];
  }
  return *std::max_element(load.begin(), load.end());
}

MaxLoadReport max_load_statistic(int n, int phi, int trials, uint64_t master_seed, int threads,
                                 double margin) {
  const double log_bins = n * std::log(2.0);
  if (!(std::ldexp(1.0, phi) < (1.0 - margin) * log_bins))
    throw Error(ErrorKind::out_of_regime,
                "2^phi = " + std::to_string(1 << phi) + " is not below (1 - " +
                    std::to_string(margin) + ") ln 2^n = " +
                    std::to_string((1.0 - margin) * log_bins) + "; lower phi or raise n");
  MaxLoadReport r;
  r.n = n;
  r.phi = phi;
  r.K_n = *max_load_threshold(n, phi);
  r.cantor_M = (uint32_t{1} << phi) - 1;
  r.M.resize(static_cast<std::size_t>(trials));
  parallel_for(r.M.size(), threads, [&](std::size_t t) {
    r.M[t] = max_load(rng::derive_key(master_seed, t), n, phi);
  });
  const uint32_t top = r.M.empty() ? 0 : *std::max_element(r.M.begin(), r.M.end());
  r.histogram.assign(top + 1, 0);
  std::size_t above = 0;
  for (uint32_t m : r.M) {
    ++r.histogram[m];
    if (m > r.K_n) ++above;
  }
  r.frequency = trials > 0 ? static_cast<double>(above) / trials : 0.0;
  return r;
}

EmptyBinReport empty_bin_probability(int bins_log2, uint64_t balls, int trials,
                                     uint64_t master_seed, int threads) {
  if (bins_log2 < 0 || bins_log2 > 32 || balls < 1 || trials < 1)
    throw Error(ErrorKind::invalid_range, "need 0 <= bins_log2 <= 32, balls >= 1, trials >= 1");
  const uint64_t bins = uint64_t{1} << bins_log2;
  EmptyBinReport r;
  r.bins_log2 = bins_log2;
  r.balls = balls;
  r.poisson_expected_empty =
      static_cast<double>(bins) * std::exp(-static_cast<double>(balls) / static_cast<double>(bins));
  r.empty_counts.resize(static_cast<std::size_t>(trials));
  parallel_for(r.empty_counts.size(), threads, [&](std::size_t t) {
    std::vector<bool> hit(bins, false);
    const uint64_t key = rng::derive_key(master_seed, t);
    for (uint64_t b = 0; b < balls; ++b) hit[rng::bounded(rng::bits(key, b), bins)] = true;
    r.empty_counts[t] = static_cast<uint64_t>(std::count(hit.begin(), hit.end(), false));
  });
  const auto with_empty =
      std::count_if(r.empty_counts.begin(), r.empty_counts.end(), [](uint64_t c) { return c > 0; });
  r.frequency = static_cast<double>(with_empty) / trials;
  return r;
}

LengthLemmaReport interval_length_lemma_check(const GapSequence& a, int W, int n, int trials,
                                              uint64_t master_seed, int threads) {
  if (n < 2 || n >= W)
    throw Error(ErrorKind::invalid_range, "need 2 <= n < W");
  const int levels = std::min(a.max_level(), std::max(W + 8, 64));
  const LevelProfile p = level_sums(a, levels);
  if (!check_level_comparable(p).verdict)
    throw Error(ErrorKind::not_level_comparable, "the length lemma needs a level comparable a");
  LengthLemmaReport r;
  r.n = n;
  r.C = length_constant(a, p);
  r.epsilon_n = epsilon_of(n);
  r.bound = 3.0 * r.C * std::exp((1.0 - r.epsilon_n) * p.log_s[n]);
  auto longest = [n](const ApproxSet& s) {
    double best = 0.0;
    for (const auto& I : s.level_intervals(n)) best = std::max(best, I.content_mass);
    return best;
  };
  r.cantor_max_length = longest(build_set(a, ArrangementKind::cantor, W));
  r.max_length.resize(static_cast<std::size_t>(trials));
  parallel_for(r.max_length.size(), threads, [&](std::size_t t) {
    r.max_length[t] = longest(build_set(a, RandomOrder::sample(rng::derive_key(master_seed, t), W), W));
  });
  const auto within = std::count_if(r.max_length.begin(), r.max_length.end(),
                                    [&](double v) { return v <= r.bound; });
  r.frequency = trials > 0 ? static_cast<double>(within) / trials : 0.0;
  return r;
}

double binomial_log_pmf(uint64_t M, double p, uint64_t k) {
  if (k > M) return -INFINITY;
  if (p <= 0.0) return k == 0 ? 0.0 : -INFINITY;
  if (p >= 1.0) return k == M ? 0.0 : -INFINITY;
  const double m = static_cast<double>(M), x = static_cast<double>(k);
  return std::lgamma(m + 1.0) - std::lgamma(x + 1.0) - std::lgamma(m - x + 1.0) +
         x * std::log(p) + (m - x) * std::log1p(-p);
}

double binomial_log_range(uint64_t M, double p, uint64_t lo, uint64_t hi) {
  hi = std::min(hi, M);
  if (lo > hi) return -INFINITY;
  // The pmf is unimodal, so the largest term sits at the mode clamped into
  // the range.
  const auto mode = static_cast<uint64_t>(std::floor((static_cast<double>(M) + 1.0) * p));
  const uint64_t peak = std::clamp(std::min(mode, M), lo, hi);
  const double top = binomial_log_pmf(M, p, peak);
  if (!std::isfinite(top)) return -INFINITY;
  CompensatedSum sum;
  for (uint64_t k = lo; k <= hi; ++k) {
    const double t = binomial_log_pmf(M, p, k) - top;
    if (t > -745.0) sum.add(std::exp(t));
  }
  return top + std::log(sum.value());
}

TailCheck binomial_tail_row(uint64_t M, int N, double eta) {
  TailCheck row;
  row.M = M;
  row.N = N;
  row.eta = eta;
  const double p = std::ldexp(1.0, -N);
  row.mean = static_cast<double>(M) * p;
  row.hypothesis_met = N >= 1 && eta > 0.0 && eta <= 1.0 / 12.0 &&
                       eta * p * (1.0 - p) * static_cast<double>(M) >= 12.0;
  row.corollary_applies = N >= 1 && row.mean >= 200.0;
  if (!row.hypothesis_met && !row.corollary_applies) return row;

  const double slack = 1e-9 * row.mean;
  const double dev = eta * row.mean;
  const auto lo_two = static_cast<uint64_t>(std::max(0.0, std::floor(row.mean - dev + slack)));
  const auto hi_two = static_cast<uint64_t>(std::ceil(row.mean + dev - slack));
  row.exact_two_sided = std::exp(binomial_log_range(M, p, 0, lo_two)) +
                        std::exp(binomial_log_range(M, p, hi_two, M));
  row.dml_bound = std::exp(-eta * eta * row.mean / 3.0) / (eta * std::sqrt(row.mean));

  const auto hi_one = static_cast<uint64_t>(std::ceil(13.0 / 12.0 * row.mean - slack));
  const auto lo_one = static_cast<uint64_t>(std::floor(11.0 / 12.0 * row.mean + slack));
  row.exact_upper = std::exp(binomial_log_range(M, p, hi_one, M));
  row.exact_lower = std::exp(binomial_log_range(M, p, 0, lo_one));
  row.corollary_bound = std::exp(-kCorollaryConstant * row.mean);

  row.pass = (!row.hypothesis_met || row.exact_two_sided <= row.dml_bound) &&
             (!row.corollary_applies ||
              (row.exact_upper <= row.corollary_bound && row.exact_lower <= row.corollary_bound));
  return row;
}

std::vector<std::pair<uint64_t, int>> default_tail_grid() {
  std::vector<std::pair<uint64_t, int>> grid;
  for (uint64_t mean : {256u, 512u, 1024u})
    for (int N : {2, 5, 8}) grid.emplace_back(mean << N, N);
  return grid;
}

std::vector<TailCheck> binomial_tail_check(const std::vector<std::pair<uint64_t, int>>& grid,
                                           double eta) {
  std::vector<TailCheck> rows;
  rows.reserve(grid.size());
  for (const auto& [M, N] : grid) rows.push_back(binomial_tail_row(M, N, eta));
  return rows;
}

}  // namespace phidim
