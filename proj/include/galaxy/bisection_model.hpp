#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <thread>
#include <utility>
#include <vector>

#include "galaxy/engine.hpp"
#include "galaxy/graph_builder.hpp"
#include "galaxy/random.hpp"
#include "galaxy/strategies.hpp"
#include "galaxy/types.hpp"

namespace galaxy {

// A sorted region of uncertainty. Rank 0 is the least out-of-distribution
// example; `layout[r]` is true for in-distribution ranks. Corruption flips the
// observed label of a rank and leaves the ground truth alone.
struct RegionTrace {
  std::size_t n_id = 0;
  std::size_t n_od = 0;
  std::vector<bool> layout;
  std::vector<bool> corrupted;

  static RegionTrace separable(std::size_t n_id, std::size_t n_od) {
    RegionTrace r{n_id, n_od, std::vector<bool>(n_id + n_od, false), std::vector<bool>(n_id + n_od, false)};
    std::fill(r.layout.begin(), r.layout.begin() + static_cast<std::ptrdiff_t>(n_id), true);
    return r;
  }

  std::size_t size() const { return layout.size(); }
  bool observed_id(std::size_t rank) const { return layout[rank] != corrupted[rank]; }
};

struct BalanceTally {
  std::size_t m_id = 0;
  std::size_t m_od = 0;
  std::optional<std::size_t> cut_found;  // ranks [0, cut) judged in-distribution
  std::vector<std::size_t> queried_ranks;
  std::size_t corrupted_queries = 0;

  std::size_t total() const { return m_id + m_od; }
};

// Bisection over the region: with m ranks left, query the central rank (the
// lower or upper one by a fair coin when m is even); an in-distribution
// answer discards it and everything below, an out-of-distribution answer
// discards it and everything above. Stops when the region is empty.
// Counts are by ground truth; the recursion follows observed labels.
template <class CoinFn>
BalanceTally simulate_bisection(const RegionTrace& r, CoinFn&& coin_flip) {
  BalanceTally t;
  std::size_t lo = 0, hi = r.size();
  while (lo < hi) {
    const std::size_t m = hi - lo;
    const std::size_t offset = (m % 2 == 1) ? m / 2 : (coin_flip() ? m / 2 : m / 2 - 1);
    const std::size_t rank = lo + offset;
    t.queried_ranks.push_back(rank);
    (r.layout[rank] ? t.m_id : t.m_od)++;
    if (r.corrupted[rank]) ++t.corrupted_queries;
    if (r.observed_id(rank))
      lo = rank + 1;
    else
      hi = rank;
  }
  t.cut_found = lo;
  return t;
}

inline BalanceTally simulate_bisection(const RegionTrace& r, Rng& rng) {
  return simulate_bisection(r, [&] { return coin(rng); });
}

// Lower bound on E[m_ID]/E[m_OOD] for bisection after z out-of-distribution
// steps with n' examples left.
inline double bisection_balance_bound(std::size_t z, std::size_t n_prime) {
  if (z < 1) throw input_error("z must be at least 1");
  if (n_prime < 3) throw input_error("n' must be at least 3");
  const double h = 0.5 * std::log2(static_cast<double>(n_prime));
  return h / (static_cast<double>(z) + h);
}

struct GalaxyBound {
  double bound = 0.0;
  double y = 0.0;
};

// Lower bound for a batch that continues B' queries past the bisection.
inline GalaxyBound galaxy_balance_bound(std::size_t b_prime, std::size_t z, std::size_t n_prime) {
  if (b_prime >= n_prime) throw input_error("B' must be smaller than n'");
  if (z < 1) throw input_error("z must be at least 1");
  if (n_prime < 3) throw input_error("n' must be at least 3");
  const double y = std::max(static_cast<double>(b_prime / 4), 0.5 * std::log2(static_cast<double>(n_prime)));
  return {y / (static_cast<double>(z) + 5.0 * y + 3.0), y};
}

struct RatioEstimate {
  double ratio = 0.0;
  std::optional<double> se;  // undefined for a single trial
  double mean_id = 0.0;
  double mean_od = 0.0;
  std::uint64_t trials = 0;
};

namespace detail {

using TallyHistogram = std::map<std::pair<std::size_t, std::size_t>, std::uint64_t>;

// Runs `trial(index)` -> (m_id, m_od) over all indices, fanned out across
// hardware threads. Each trial draws from its own substream, so the result is
// independent of the thread count.
template <class TrialFn>
TallyHistogram run_trials(std::uint64_t trials, TrialFn&& trial) {
  const std::uint64_t workers =
      std::max<std::uint64_t>(1, std::min<std::uint64_t>(std::thread::hardware_concurrency(), trials / 256));
  std::vector<TallyHistogram> parts(workers);
  std::vector<std::thread> pool;
  for (std::uint64_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::uint64_t i = w; i < trials; i += workers) ++parts[w][trial(i)];
    });
  }
  for (auto& th : pool) th.join();
  TallyHistogram all;
  for (const auto& p : parts)
    for (const auto& [k, v] : p) all[k] += v;
  return all;
}

// Ratio of means with a bootstrap standard error. Resampling the trials with
// replacement is a multinomial draw over the distinct tallies.
inline RatioEstimate ratio_of_means(const TallyHistogram& h, std::uint64_t seed, std::size_t resamples = 1000) {
  RatioEstimate e;
  double sum_id = 0.0, sum_od = 0.0;
  std::vector<std::pair<std::pair<double, double>, double>> cats;
  for (const auto& [k, c] : h) {
    e.trials += c;
    sum_id += static_cast<double>(k.first) * static_cast<double>(c);
    sum_od += static_cast<double>(k.second) * static_cast<double>(c);
    cats.push_back({{static_cast<double>(k.first), static_cast<double>(k.second)}, static_cast<double>(c)});
  }
  if (e.trials == 0) throw input_error("no trials");
  e.mean_id = sum_id / static_cast<double>(e.trials);
  e.mean_od = sum_od / static_cast<double>(e.trials);
  e.ratio = sum_id / sum_od;
  if (e.trials < 2) return e;

  Rng rng = substream(seed, 0xb007);
  double acc = 0.0, acc2 = 0.0;
  for (std::size_t b = 0; b < resamples; ++b) {
    std::uint64_t remaining = e.trials;
    double left = static_cast<double>(e.trials);
    double rid = 0.0, rod = 0.0;
    for (const auto& [val, c] : cats) {
      if (remaining == 0) break;
      const double p = std::min(1.0, c / left);
      const auto draw = static_cast<std::uint64_t>(std::binomial_distribution<std::uint64_t>(remaining, p)(rng));
      rid += val.first * static_cast<double>(draw);
      rod += val.second * static_cast<double>(draw);
      remaining -= draw;
      left -= c;
    }
    const double r = rod > 0.0 ? rid / rod : 0.0;
    acc += r;
    acc2 += r * r;
  }
  const double mean = acc / static_cast<double>(resamples);
  e.se = std::sqrt(std::max(0.0, acc2 / static_cast<double>(resamples) - mean * mean) *
                   static_cast<double>(resamples) / static_cast<double>(resamples - 1));
  return e;
}

}  // namespace detail

// Tallies (m_id, m_od) of bisection on a separable region of n' examples with
// n_ID ~ Unif{1..n'-1}, one substream per trial.
inline detail::TallyHistogram bisection_tallies(std::size_t n_prime, std::uint64_t trials, std::uint64_t seed) {
  if (trials < 1) throw input_error("need at least one trial");
  if (n_prime < 2) throw input_error("n' must be at least 2");
  return detail::run_trials(trials, [&](std::uint64_t i) {
    Rng rng = substream(seed, i);
    const std::size_t n_id = 1 + uniform_below(rng, n_prime - 1);
    const auto t = simulate_bisection(RegionTrace::separable(n_id, n_prime - n_id), rng);
    return std::pair{t.m_id, t.m_od};
  });
}

// Ratio of means after prepending z forced out-of-distribution steps.
inline RatioEstimate ratio_with_forced_od(const detail::TallyHistogram& h, std::size_t z, std::uint64_t seed) {
  detail::TallyHistogram shifted;
  for (const auto& [k, c] : h) shifted[{k.first, k.second + z}] += c;
  return detail::ratio_of_means(shifted, seed);
}

// Monte-Carlo estimate of E[m_ID]/E[m_OOD] for bisection under the uniform
// model: n_ID ~ Unif{1..n'-1} in a separable region of n' examples, preceded
// by z forced out-of-distribution steps.
inline RatioEstimate estimate_balance_ratio_mc(std::size_t z, std::size_t n_prime, std::uint64_t trials,
                                               std::uint64_t seed) {
  return ratio_with_forced_od(bisection_tallies(n_prime, trials, seed), z, seed);
}

struct BatchedGalaxyTally {
  BalanceTally tally;
  std::size_t bisection_queries = 0;
  std::size_t extra_queries = 0;
};

// GALAXY on a separable linear region, run through the real selection
// engine: the region of n_id + n_od examples sits between a labeled
// in-distribution endpoint and a labeled out-of-distribution endpoint. The
// batch continues for `extra` queries after the cut is exposed (or until the
// region runs out).
inline BatchedGalaxyTally simulate_batched_galaxy(std::size_t n_id, std::size_t n_od, std::size_t extra, Rng& rng) {
  const std::size_t n_region = n_id + n_od;
  const std::size_t n = n_region + 2;
  std::vector<float> v(2 * n);
  for (std::size_t e = 0; e < n; ++e) {
    const float p_ood = static_cast<float>(static_cast<double>(e + 1) / static_cast<double>(n + 1));
    v[2 * e + 1] = p_ood;
    v[2 * e] = 1.0f - p_ood;
  }
  const ScoreMatrix scores(n, 2, std::move(v));
  // Example e is in-distribution iff e <= n_id; the cut joins n_id and n_id + 1.
  auto truth = [&](ExampleId x) { return x.value <= n_id ? ClassId{0} : ClassId{1}; };
  LabeledSet labeled(n);
  labeled.add(example(0), ClassId{0});
  labeled.add(example(n - 1), ClassId{1});

  GalaxySession session(scores, std::move(labeled), n_region, Rng(rng()));
  BatchedGalaxyTally out;
  while (const auto& q = session.pending()) {
    const bool found = session.labeled().contains(example(n_id)) && session.labeled().contains(example(n_id + 1));
    if (found && out.extra_queries >= extra) break;
    const ClassId c = truth(q->id);
    const std::size_t rank = q->id.value - 1;
    session.submit(q->id, c);
    out.tally.queried_ranks.push_back(rank);
    (c.value == 0 ? out.tally.m_id : out.tally.m_od)++;
    (found ? out.extra_queries : out.bisection_queries)++;
  }
  out.tally.cut_found = n_id;
  return out;
}

// Tallies of a batched GALAXY run on a region of n' examples with
// n_ID ~ Unif{1..n'-1}: bisection, then B' further queries.
inline detail::TallyHistogram galaxy_tallies(std::size_t n_prime, std::size_t b_prime, std::uint64_t trials,
                                             std::uint64_t seed) {
  if (trials < 1) throw input_error("need at least one trial");
  if (b_prime >= n_prime) throw input_error("B' must be smaller than n'");
  return detail::run_trials(trials, [&](std::uint64_t i) {
    Rng rng = substream(seed, i);
    const std::size_t n_id = 1 + uniform_below(rng, n_prime - 1);
    const auto t = simulate_batched_galaxy(n_id, n_prime - n_id, b_prime, rng).tally;
    return std::pair{t.m_id, t.m_od};
  });
}

// Monte-Carlo estimate of E[m_ID]/E[m_OOD] for a batched GALAXY run with z
// forced out-of-distribution steps in front.
inline RatioEstimate estimate_galaxy_balance_mc(std::size_t z, std::size_t n_prime, std::size_t b_prime,
                                                std::uint64_t trials, std::uint64_t seed) {
  return ratio_with_forced_od(galaxy_tallies(n_prime, b_prime, trials, seed), z, seed);
}

// Per-label corruption rate delta / ceil(log2 n).
inline double corruption_rate(std::size_t n, double delta) {
  const double steps = std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(n, 2))));
  return delta / steps;
}

struct NoisyOutcome {
  bool success = false;
  BalanceTally tally;
};

// Bisection on a separable region whose observed labels are each flipped
// independently at rate delta / ceil(log2 n). Success means the recovered
// boundary is exactly the true cut.
inline NoisyOutcome simulate_noisy_bisection(std::size_t n_id, std::size_t n_od, double delta, Rng& rng) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw input_error("delta must lie in [0, 1]");
  auto r = RegionTrace::separable(n_id, n_od);
  const double rate = corruption_rate(r.size(), delta);
  for (std::size_t i = 0; i < r.size(); ++i) r.corrupted[i] = rate > 0.0 && bernoulli(rng, rate);
  NoisyOutcome out;
  out.tally = simulate_bisection(r, rng);
  out.success = out.tally.cut_found == n_id;
  return out;
}

struct NoisyEstimate {
  double success_rate = 0.0;
  double se = 0.0;
  double corrupted_fraction = 0.0;  // trials with at least one corrupted query
  double corrupted_se = 0.0;
  std::uint64_t trials = 0;
};

// n_ID ~ Unif{1..n-1} per trial.
inline NoisyEstimate estimate_noisy_success(std::size_t n, double delta, std::uint64_t trials, std::uint64_t seed) {
  if (trials < 1) throw input_error("need at least one trial");
  if (n < 2) throw input_error("region needs at least two examples");
  auto h = detail::run_trials(trials, [&](std::uint64_t i) {
    Rng rng = substream(seed, i);
    const std::size_t n_id = 1 + uniform_below(rng, n - 1);
    const auto o = simulate_noisy_bisection(n_id, n - n_id, delta, rng);
    return std::pair<std::size_t, std::size_t>{o.success ? 1 : 0, o.tally.corrupted_queries > 0 ? 1 : 0};
  });
  NoisyEstimate e;
  double ok = 0.0, bad = 0.0;
  for (const auto& [k, c] : h) {
    e.trials += c;
    ok += static_cast<double>(k.first * c);
    bad += static_cast<double>(k.second * c);
  }
  const double t = static_cast<double>(e.trials);
  e.success_rate = ok / t;
  e.se = std::sqrt(e.success_rate * (1.0 - e.success_rate) / t);
  e.corrupted_fraction = bad / t;
  e.corrupted_se = std::sqrt(e.corrupted_fraction * (1.0 - e.corrupted_fraction) / t);
  return e;
}

struct WorstCase {
  RegionTrace trace;
  ScoreMatrix scores;  // binary rows (p_id, p_ood) in rank order
  Batch batch;         // least-confidence selection
  BalanceTally tally;
};

// A region whose true threshold sits far below 0.5: the in-distribution ranks
// score under 0.05 while max(B, n'/2) out-of-distribution ranks crowd around
// 0.5, so the B least confident examples are all out-of-distribution.
inline WorstCase uncertainty_worst_case(std::size_t n_prime, std::size_t b) {
  if (b < 1 || b >= n_prime) throw input_error("need 1 <= B < n'");
  const std::size_t n_od = std::max(b, (n_prime + 1) / 2);
  const std::size_t n_id = n_prime - n_od;
  WorstCase w;
  w.trace = RegionTrace::separable(n_id, n_od);
  std::vector<float> v(2 * n_prime);
  for (std::size_t r = 0; r < n_prime; ++r) {
    const double p = r < n_id ? 0.05 * static_cast<double>(r + 1) / static_cast<double>(n_id + 1)
                              : 0.5 + 0.45 * static_cast<double>(r - n_id + 1) / static_cast<double>(n_od + 1);
    v[2 * r + 1] = static_cast<float>(p);
    v[2 * r] = 1.0f - v[2 * r + 1];
  }
  w.scores = ScoreMatrix(n_prime, 2, std::move(v));
  w.batch = confidence_sampling_batch(w.scores, LabeledSet(n_prime), b);
  for (auto x : w.batch.ids) {
    w.tally.queried_ranks.push_back(x.value);
    (w.trace.layout[x.value] ? w.tally.m_id : w.tally.m_od)++;
  }
  return w;
}

}  // namespace galaxy
