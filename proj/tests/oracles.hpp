#pragma once

// Independent reference implementations shared by the unit tests and the
// acceptance binary.

#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <vector>

#include "galaxy/engine.hpp"
#include "galaxy/graph_builder.hpp"
#include "galaxy/linear_graph.hpp"
#include "galaxy/random.hpp"

namespace galaxy::oracle {

inline ScoreMatrix random_scores(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<float> v(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    std::vector<double> w(k);
    for (auto& x : w) sum += (x = uniform01(rng) + 1e-3);
    for (std::size_t c = 0; c < k; ++c) v[i * k + c] = static_cast<float>(w[c] / sum);
  }
  return ScoreMatrix(n, k, std::move(v));
}

inline constexpr int kInf = std::numeric_limits<int>::max() / 4;

// Exhaustive reference: explicit adjacency matrix, Floyd-Warshall over paths
// whose interior nodes are unlabeled, then the canonical choice (smallest
// terminal, then smallest source, then lexicographically smallest route).
inline std::optional<std::vector<std::uint32_t>> brute_force_path(const GraphSet& g, ClassId k, const LabeledSet& l) {
  const std::size_t n = g.pool_size();
  const auto& r = g.ranking(k);
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p + 1; q < n && q - p <= g.order(); ++q) {
      const auto a = r.order[p], b = r.order[q];
      if (!g.is_removed(a, b)) adj[a.value][b.value] = adj[b.value][a.value] = true;
    }
  auto interior = [&](std::size_t v) { return l.raw(v) == LabeledSet::kUnlabeled; };
  // dist[a][b]: shortest a..b path with every intermediate node unlabeled.
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, kInf));
  for (std::size_t a = 0; a < n; ++a) {
    dist[a][a] = 0;
    for (std::size_t b = 0; b < n; ++b)
      if (adj[a][b]) dist[a][b] = 1;
  }
  for (std::size_t m = 0; m < n; ++m) {
    if (!interior(m)) continue;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (dist[a][m] + dist[m][b] < dist[a][b]) dist[a][b] = dist[a][m] + dist[m][b];
  }
  int best = kInf;
  std::uint32_t s = 0, t = 0;
  for (std::uint32_t tt = 0; tt < n; ++tt) {
    if (interior(tt) || l.raw(tt) == k.value) continue;
    for (std::uint32_t ss = 0; ss < n; ++ss) {
      if (interior(ss) || l.raw(ss) != k.value) continue;
      if (dist[ss][tt] < best) {
        best = dist[ss][tt];
        s = ss;
        t = tt;
      }
    }
  }
  if (best == kInf) return std::nullopt;
  std::vector<std::uint32_t> path{s};
  std::uint32_t cur = s;
  for (int left = best; left > 0; --left) {
    for (std::uint32_t y = 0; y < n; ++y) {
      if (!adj[cur][y]) continue;
      if (y == t && left == 1) {
        cur = y;
        break;
      }
      if (interior(y) && dist[y][t] == left - 1) {
        cur = y;
        break;
      }
    }
    path.push_back(cur);
  }
  return path;
}

// Path comparison over random pools: N <= 50, K <= 4, ord <= 3,
// random labels and random edge removals. Returns the number of (pool, class)
// pairs that disagree with the brute force; `with_path` counts comparisons
// where a path existed.
inline std::size_t compare_paths_on_random_pools(std::size_t pools, std::uint64_t seed, std::size_t& with_path) {
  Rng rng(seed);
  std::size_t mismatches = 0;
  with_path = 0;
  for (std::size_t pool = 0; pool < pools; ++pool) {
    const std::size_t n = 2 + uniform_below(rng, 49);
    const std::size_t k = 2 + uniform_below(rng, 3);
    const auto s = random_scores(n, k, rng);
    auto g = build_graphs(s);
    LabeledSet l(n);
    const std::size_t labels = 1 + uniform_below(rng, std::max<std::size_t>(1, n / 3));
    for (std::size_t i = 0; i < labels; ++i) {
      const auto x = example(uniform_below(rng, n));
      if (!l.contains(x)) l.add(x, class_id(uniform_below(rng, k)));
    }
    const auto ord = static_cast<std::uint32_t>(1 + uniform_below(rng, 3));
    for (std::uint32_t o = 2; o <= ord && o <= n - 1; ++o) connect(g, o, l);
    const std::size_t removals = uniform_below(rng, n);
    for (std::size_t i = 0; i < removals; ++i) g.remove_cut(example(uniform_below(rng, n)), example(uniform_below(rng, n)));
    for (std::size_t c = 0; c < k; ++c) {
      const auto got = shortest_straddling_path(g, class_id(c), l);
      const auto want = brute_force_path(g, class_id(c), l);
      if (got.has_value() != want.has_value()) {
        ++mismatches;
        continue;
      }
      if (!got) continue;
      ++with_path;
      std::vector<std::uint32_t> nodes;
      for (auto x : got->nodes) nodes.push_back(x.value);
      mismatches += nodes != *want;
    }
  }
  return mismatches;
}

// Queries until both endpoints of a chain's single cut (between `cut - 1`
// and `cut`) are labeled, counted from the first straddling pair.
inline std::size_t queries_to_localize(const S2Result& r, std::size_t cut) {
  const auto a = static_cast<std::uint32_t>(cut - 1), b = static_cast<std::uint32_t>(cut);
  // Labels present before any query was issued (the initial set).
  std::set<std::uint32_t> known;
  const std::size_t initial = r.labeled.size() - r.queries.size();
  for (std::size_t i = 0; i < initial; ++i) known.insert(r.labeled.entries()[i].first.value);
  std::size_t q = 0;
  for (std::size_t i = 0; i < r.queries.size(); ++i) {
    if (known.contains(a) && known.contains(b)) return q;
    if (r.queries.provenance[i] == Provenance::bisection) ++q;
    known.insert(r.queries.ids[i].value);
  }
  return known.contains(a) && known.contains(b) ? q : SIZE_MAX;
}

// Number of edges in the class-k ranking joining differently labeled
// neighbours at ord = 1.
inline std::size_t cut_edges(const GraphSet& g, ClassId k, const std::vector<ClassId>& truth) {
  const auto& r = g.ranking(k);
  std::size_t cuts = 0;
  for (std::size_t p = 1; p < r.order.size(); ++p) cuts += truth[r.order[p - 1].value] != truth[r.order[p].value];
  return cuts;
}

}  // namespace galaxy::oracle
