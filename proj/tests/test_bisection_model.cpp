#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include "galaxy/bisection_model.hpp"
#include "galaxy/verify.hpp"

using namespace galaxy;

namespace {

using Dist = std::map<std::pair<std::size_t, std::size_t>, double>;

// Exact distribution of (m_id, m_od) over every coin sequence, by direct
// recursion on the 1-based ranks: query i = floor(m/2)+1 or ceil(m/2), each
// with probability 1/2 (a single choice when they coincide).
void enumerate(const std::vector<bool>& layout, std::size_t lo, std::size_t hi, std::size_t mid, std::size_t mod,
               double p, Dist& out) {
  const std::size_t m = hi - lo + 1;
  if (hi < lo || lo > layout.size()) {
    out[{mid, mod}] += p;
    return;
  }
  std::vector<std::size_t> choices{m / 2 + 1};
  if ((m + 1) / 2 != m / 2 + 1) choices.push_back((m + 1) / 2);
  for (auto i : choices) {
    const std::size_t rank = lo + i - 1;  // 1-based
    const bool id = layout[rank - 1];
    const double q = p / static_cast<double>(choices.size());
    if (id)
      enumerate(layout, rank + 1, hi, mid + 1, mod, q, out);
    else
      enumerate(layout, lo, rank - 1, mid, mod + 1, q, out);
  }
}

Dist exact(std::size_t n_id, std::size_t n_od) {
  Dist d;
  const auto r = RegionTrace::separable(n_id, n_od);
  if (n_id + n_od > 0) enumerate(r.layout, 1, n_id + n_od, 0, 0, 1.0, d);
  return d;
}

// Same distribution, from the implementation, by enumerating coin sequences.
Dist implemented(std::size_t n_id, std::size_t n_od) {
  Dist d;
  const auto r = RegionTrace::separable(n_id, n_od);
  for (std::uint32_t bits = 0; bits < (1u << 12); ++bits) {
    std::size_t used = 0;
    const auto t = simulate_bisection(r, [&] { return ((bits >> used++) & 1u) != 0; });
    if (used > 12) ADD_FAILURE() << "more coins than expected";
    d[{t.m_id, t.m_od}] += 1.0 / 4096.0;
  }
  return d;
}

}  // namespace

TEST(Bisection, WorkedTraces) {
  Rng rng(1);
  for (int s = 0; s < 20; ++s) {
    const auto t = simulate_bisection(RegionTrace::separable(1, 1), rng);
    EXPECT_EQ(t.m_id, 1u);
    EXPECT_EQ(t.m_od, 1u);
  }
  const auto t7 = simulate_bisection(RegionTrace::separable(0, 7), rng);
  EXPECT_EQ(t7.m_id, 0u);
  EXPECT_EQ(t7.m_od, 3u);
  EXPECT_EQ(t7.queried_ranks, (std::vector<std::size_t>{3, 1, 0}));  // 1-based 4, 2, 1
  const auto t34 = simulate_bisection(RegionTrace::separable(3, 4), rng);
  EXPECT_EQ(t34.m_id, 2u);
  EXPECT_EQ(t34.m_od, 1u);
  EXPECT_EQ(t34.cut_found, 3u);
}

TEST(Bisection, MatchesOneBasedDefinitionExhaustively) {
  for (std::size_t n = 1; n <= 6; ++n)
    for (std::size_t n_id = 0; n_id <= n; ++n_id) {
      const auto want = exact(n_id, n - n_id);
      const auto got = implemented(n_id, n - n_id);
      ASSERT_EQ(want.size(), got.size()) << n_id << "/" << n;
      for (const auto& [k, p] : want) EXPECT_NEAR(got.at(k), p, 1e-12) << n_id << "/" << n;
    }
}

TEST(Bisection, RecoversCutWithinLogQueries) {
  Rng rng(5);
  for (std::size_t n = 1; n <= 300; ++n)
    for (std::size_t n_id = 0; n_id <= n; n_id += 1 + n / 10) {
      const auto t = simulate_bisection(RegionTrace::separable(n_id, n - n_id), rng);
      EXPECT_EQ(t.cut_found, n_id);
      EXPECT_EQ(t.m_id + t.m_od, t.queried_ranks.size());
      EXPECT_LE(t.total(), static_cast<std::size_t>(std::ceil(std::log2(n + 1.0))) + 1);
    }
}

TEST(Bisection, MirroredLayoutMirrorsTallies) {
  for (std::size_t n = 1; n <= 40; ++n)
    for (std::size_t n_id = 0; n_id <= n; ++n_id) {
      const auto a = RegionTrace::separable(n_id, n - n_id);
      const auto b = RegionTrace::separable(n - n_id, n_id);
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng r1(seed), r2(seed);
        const auto ta = simulate_bisection(a, [&] { return coin(r1); });
        const auto tb = simulate_bisection(b, [&] { return !coin(r2); });
        EXPECT_EQ(ta.m_id, tb.m_od);
        EXPECT_EQ(ta.m_od, tb.m_id);
      }
    }
}

TEST(Bounds, ClosedForms) {
  EXPECT_DOUBLE_EQ(bisection_balance_bound(1, 8), 0.6);
  EXPECT_DOUBLE_EQ(bisection_balance_bound(2, 4), 1.0 / 3.0);
  EXPECT_THROW(bisection_balance_bound(0, 8), input_error);
  EXPECT_THROW(bisection_balance_bound(1, 2), input_error);
  // n' = 2^t, z large: bound ~ t / (2z).
  EXPECT_NEAR(bisection_balance_bound(10000, 1 << 10) * 2 * 10000 / 10, 1.0, 1e-3);

  const auto g = galaxy_balance_bound(8, 1, 4 + 8);
  EXPECT_DOUBLE_EQ(g.y, 2.0);
  EXPECT_DOUBLE_EQ(galaxy_balance_bound(0, 1, 16).bound, 1.0 / 7.0);
  EXPECT_DOUBLE_EQ(galaxy_balance_bound(0, 1, 16).y, 2.0);
  EXPECT_THROW(galaxy_balance_bound(8, 1, 4), input_error);
  EXPECT_NEAR(galaxy_balance_bound(400000, 1, 1000000).bound, 0.2, 1e-4);
}

TEST(Bounds, GalaxyBoundArithmetic) {
  // y = max(floor(8/4), 0.5 log2 4) = 2 -> 2 / (1 + 10 + 3).
  const double y = std::max(2.0, 0.5 * std::log2(4.0));
  EXPECT_DOUBLE_EQ(y / (1 + 5 * y + 3), 1.0 / 7.0);
}

TEST(MonteCarlo, RespectsBisectionBound) {
  const auto e = estimate_balance_ratio_mc(4, 64, 20000, 11);
  ASSERT_TRUE(e.se);
  EXPECT_GE(e.ratio, bisection_balance_bound(4, 64) - 3 * *e.se);
  const auto f = estimate_balance_ratio_mc(1, 4, 10000, 12);
  EXPECT_GE(f.ratio, 1.0 / 3.0 - 3 * *f.se);
}

TEST(MonteCarlo, RatioMatchesExactExpectation) {
  // Independent oracle: average the exact tally distribution over n_id.
  const std::size_t n = 16, z = 2;
  double eid = 0, eod = 0;
  for (std::size_t n_id = 1; n_id < n; ++n_id)
    for (const auto& [k, p] : exact(n_id, n - n_id)) {
      eid += p * static_cast<double>(k.first) / (n - 1);
      eod += p * static_cast<double>(k.second + z) / (n - 1);
    }
  const auto e = estimate_balance_ratio_mc(z, n, 50000, 3);
  EXPECT_NEAR(e.ratio, eid / eod, 4 * *e.se);
  EXPECT_NEAR(e.mean_id, eid, 0.03);
}

TEST(MonteCarlo, SingleTrialHasNoStandardError) {
  const auto e = estimate_balance_ratio_mc(1, 8, 1, 5);
  EXPECT_FALSE(e.se);
  EXPECT_GT(e.ratio, 0.0);
}

TEST(MonteCarlo, DeterministicPerSeed) {
  const auto a = estimate_balance_ratio_mc(2, 32, 3000, 9);
  const auto b = estimate_balance_ratio_mc(2, 32, 3000, 9);
  EXPECT_EQ(a.ratio, b.ratio);
  EXPECT_EQ(a.se, b.se);
}

TEST(BatchedGalaxy, BisectionPhaseMatchesDefinition) {
  // Without extra queries, GALAXY on a separable region is the bisection.
  for (std::size_t n = 2; n <= 6; ++n)
    for (std::size_t n_id = 1; n_id < n; ++n_id) {
      Dist got;
      const int reps = 4000;
      for (int s = 0; s < reps; ++s) {
        Rng rng(static_cast<std::uint64_t>(s));
        const auto t = simulate_batched_galaxy(n_id, n - n_id, 0, rng).tally;
        got[{t.m_id, t.m_od}] += 1.0 / reps;
      }
      for (const auto& [k, p] : exact(n_id, n - n_id)) EXPECT_NEAR(got[k], p, 0.04) << n_id << "/" << n;
    }
}

TEST(BatchedGalaxy, ExtraQueriesRespected) {
  Rng rng(4);
  const auto r = simulate_batched_galaxy(10, 50, 8, rng);
  EXPECT_EQ(r.extra_queries, 8u);
  EXPECT_EQ(r.tally.total(), r.bisection_queries + 8);
  const auto e = estimate_galaxy_balance_mc(1, 64, 8, 2000, 4);
  EXPECT_GE(e.ratio, galaxy_balance_bound(8, 1, 64).bound - 3 * *e.se);
}

TEST(Noise, ZeroDeltaAlwaysSucceeds) {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const auto o = simulate_noisy_bisection(1 + i % 50, 60, 0.0, rng);
    EXPECT_TRUE(o.success);
    EXPECT_EQ(o.tally.corrupted_queries, 0u);
  }
  EXPECT_THROW(simulate_noisy_bisection(1, 1, 1.5, rng), input_error);
}

TEST(Noise, FullCorruptionOnTwoExamplesFails) {
  Rng rng(2);
  int ok = 0;
  for (int i = 0; i < 1000; ++i) ok += simulate_noisy_bisection(1, 1, 1.0, rng).success;
  EXPECT_LT(ok, 1000);
}

TEST(Noise, UnionBoundOnCorruptedQueries) {
  // n = 1000 keeps every bisection within ceil(log2 n) queries.
  for (double d : {0.05, 0.1, 0.3}) {
    const auto e = estimate_noisy_success(1000, d, 10000, 17);
    EXPECT_LE(e.corrupted_fraction, d + 3 * e.corrupted_se) << d;
    EXPECT_GE(e.success_rate, 1 - d - 3 * e.se) << d;
  }
}

TEST(WorstCase, ConfidenceSamplingMissesInDistribution) {
  const auto w = uncertainty_worst_case(200, 50);
  EXPECT_EQ(w.tally.m_id, 0u);
  EXPECT_EQ(w.tally.m_od, 50u);
  EXPECT_EQ(w.trace.n_od, 100u);
  const auto one = uncertainty_worst_case(200, 1);
  EXPECT_EQ(one.tally.m_od, 1u);
  Rng rng(1);
  EXPECT_GE(simulate_bisection(w.trace, rng).m_id, 1u);
  EXPECT_THROW(uncertainty_worst_case(10, 10), input_error);
}

TEST(Verify, Prop53Passes) { EXPECT_TRUE(verify_prop53(1).pass()); }

TEST(Verify, GuardsTrialCount) {
  EXPECT_THROW(verify_thm51(10, 1), input_error);
  EXPECT_THROW(run_verify_suite("thm99", 1000, 1), input_error);
}
