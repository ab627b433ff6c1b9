#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "galaxy/bisection_model.hpp"

namespace galaxy {

// One cell of a theory-verification grid. Parameters that do not apply to a
// suite are left unset. A cell passes when estimate >= bound - 3 * se.
struct VerifyCell {
  std::optional<std::size_t> z;
  std::optional<std::size_t> n_prime;
  std::optional<std::size_t> b_prime;
  std::optional<double> delta;
  double estimate = 0.0;
  std::optional<double> se;
  double bound = 0.0;
  bool pass = false;

  std::string describe() const {
    std::string s;
    auto add = [&](std::string_view k, const std::string& v) {
      if (!s.empty()) s += ' ';
      s += std::string(k) + '=' + v;
    };
    if (z) add("z", std::to_string(*z));
    if (n_prime) add("n'", std::to_string(*n_prime));
    if (b_prime) add("B'", std::to_string(*b_prime));
    if (delta) add("delta", std::to_string(*delta));
    return s;
  }
};

struct VerifyReport {
  std::string suite;
  std::vector<VerifyCell> cells;

  bool pass() const {
    for (const auto& c : cells)
      if (!c.pass) return false;
    return !cells.empty();
  }
};

inline constexpr std::size_t kMinVerifyTrials = 1000;
inline constexpr double kSigmas = 3.0;

inline const std::vector<std::size_t>& verify_z_grid() {
  static const std::vector<std::size_t> g{1, 2, 3, 4, 5};
  return g;
}
inline const std::vector<std::size_t>& verify_n_grid() {
  static const std::vector<std::size_t> g{4, 8, 16, 64, 256};
  return g;
}

namespace detail {
inline void require_trials(std::uint64_t trials) {
  if (trials < kMinVerifyTrials)
    throw input_error("statistical suites need at least " + std::to_string(kMinVerifyTrials) + " trials, got " +
                      std::to_string(trials));
}
inline bool one_sided(double estimate, std::optional<double> se, double bound) {
  return estimate >= bound - kSigmas * se.value_or(0.0);
}
}  // namespace detail

inline VerifyReport verify_thm51(std::uint64_t trials, std::uint64_t seed) {
  detail::require_trials(trials);
  VerifyReport r{"thm51", {}};
  // The simulated region does not depend on z, so one set of trials per n'
  // serves the whole z column.
  std::uint64_t cell = 0;
  for (auto n : verify_n_grid()) {
    const std::uint64_t s = substream(seed, cell++)();
    const auto h = bisection_tallies(n, trials, s);
    for (auto z : verify_z_grid()) {
      const auto e = ratio_with_forced_od(h, z, s);
      VerifyCell c{z, n, std::nullopt, std::nullopt, e.ratio, e.se, bisection_balance_bound(z, n), false};
      c.pass = detail::one_sided(c.estimate, c.se, c.bound);
      r.cells.push_back(c);
    }
  }
  return r;
}

inline const std::vector<std::size_t>& verify_b_grid() {
  static const std::vector<std::size_t> g{8, 32, 128};
  return g;
}

inline VerifyReport verify_cor52(std::uint64_t trials, std::uint64_t seed) {
  detail::require_trials(trials);
  VerifyReport r{"cor52", {}};
  std::uint64_t cell = 0;
  for (auto b : verify_b_grid()) {
    for (auto n : verify_n_grid()) {
      if (b >= n) continue;
      const std::uint64_t s = substream(seed, cell++)();
      const auto h = galaxy_tallies(n, b, trials, s);
      for (auto z : verify_z_grid()) {
        const auto e = ratio_with_forced_od(h, z, s);
        VerifyCell c{z, n, b, std::nullopt, e.ratio, e.se, galaxy_balance_bound(b, z, n).bound, false};
        c.pass = detail::one_sided(c.estimate, c.se, c.bound);
        r.cells.push_back(c);
      }
    }
  }
  return r;
}

// Deterministic construction; `seed` only drives the contrasting bisection.
// The cell's estimate is the confidence-sampling ratio m_id / m_od, which must
// be exactly 0, and it passes only if bisection on the same region still finds
// an in-distribution example.
inline VerifyReport verify_prop53(std::uint64_t seed, std::size_t n_prime = 200, std::size_t b = 50) {
  VerifyReport r{"prop53", {}};
  const auto w = uncertainty_worst_case(n_prime, b);
  Rng rng = substream(seed, 0);
  const auto contrast = simulate_bisection(w.trace, rng);
  VerifyCell c{std::nullopt, n_prime, b, std::nullopt, 0.0, std::nullopt, 0.0, false};
  c.estimate = w.tally.m_od > 0 ? static_cast<double>(w.tally.m_id) / static_cast<double>(w.tally.m_od) : 0.0;
  c.pass = w.tally.m_id == 0 && w.tally.m_od == b && contrast.m_id >= 1;
  r.cells.push_back(c);
  return r;
}

inline const std::vector<double>& verify_delta_grid() {
  static const std::vector<double> g{0.05, 0.1, 0.3};
  return g;
}

inline VerifyReport verify_thm54(std::uint64_t trials, std::uint64_t seed, std::size_t n = 1024) {
  detail::require_trials(trials);
  VerifyReport r{"thm54", {}};
  std::uint64_t cell = 0;
  for (auto d : verify_delta_grid()) {
    const auto e = estimate_noisy_success(n, d, trials, substream(seed, cell++)());
    VerifyCell c{std::nullopt, n, std::nullopt, d, e.success_rate, e.se, 1.0 - d, false};
    c.pass = detail::one_sided(c.estimate, c.se, c.bound);
    r.cells.push_back(c);
  }
  return r;
}

inline VerifyReport run_verify_suite(std::string_view suite, std::uint64_t trials, std::uint64_t seed) {
  if (suite == "thm51") return verify_thm51(trials, seed);
  if (suite == "cor52") return verify_cor52(trials, seed);
  if (suite == "prop53") return verify_prop53(seed);
  if (suite == "thm54") return verify_thm54(trials, seed);
  throw input_error("unknown suite '" + std::string(suite) + "'");
}

}  // namespace galaxy
