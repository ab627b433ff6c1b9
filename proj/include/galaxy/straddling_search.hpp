#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace galaxy {

// Role of a node in a straddling-path search. Sources and terminals are the
// two sides of the labeled set; interior nodes are the unlabeled ones. A path
// never passes through a labeled node.
enum class NodeRole : std::uint8_t { interior, source, terminal };

// Reusable per-search buffers. Distances are epoch-stamped so a scratch can be
// reused across searches without clearing O(n) memory.
class SearchScratch {
 public:
  void prepare(std::size_t n) {
    if (fwd_stamp_.size() < n) {
      fwd_stamp_.assign(n, 0);
      bwd_stamp_.assign(n, 0);
      fwd_dist_.resize(n);
      bwd_dist_.resize(n);
      epoch_ = 0;
    }
    if (++epoch_ == 0) {
      std::fill(fwd_stamp_.begin(), fwd_stamp_.end(), 0);
      std::fill(bwd_stamp_.begin(), bwd_stamp_.end(), 0);
      epoch_ = 1;
    }
  }

  bool fwd_seen(std::uint32_t v) const { return fwd_stamp_[v] == epoch_; }
  bool bwd_seen(std::uint32_t v) const { return bwd_stamp_[v] == epoch_; }
  std::uint32_t fwd(std::uint32_t v) const { return fwd_dist_[v]; }
  std::uint32_t bwd(std::uint32_t v) const { return bwd_dist_[v]; }
  void set_fwd(std::uint32_t v, std::uint32_t d) {
    fwd_stamp_[v] = epoch_;
    fwd_dist_[v] = d;
  }
  void set_bwd(std::uint32_t v, std::uint32_t d) {
    bwd_stamp_[v] = epoch_;
    bwd_dist_[v] = d;
  }

 private:
  std::vector<std::uint32_t> fwd_stamp_, bwd_stamp_, fwd_dist_, bwd_dist_;
  std::uint32_t epoch_ = 0;
};

// Shortest path from any source to any terminal whose interior nodes are all
// interior-role. Among shortest paths the terminal with the smallest id wins,
// then the source with the smallest id; the route between them is the
// lexicographically smallest (by node id, walking from the source).
//
// The search is a level-synchronous bidirectional BFS that always expands the
// smaller frontier, so a disconnected side is detected after exploring only
// the smaller component. `neighbors(u, visit)` must call `visit(v)` for every
// neighbor v of u; `role(v)` classifies nodes.
//
// Returns the node sequence source..terminal, or nullopt when no source is
// connected to any terminal by a path of at most `max_edges` edges.
template <class NeighborFn, class RoleFn>
std::optional<std::vector<std::uint32_t>> find_straddling_path(
    std::size_t node_count, std::span<const std::uint32_t> sources, std::span<const std::uint32_t> terminals,
    NeighborFn&& neighbors, RoleFn&& role, SearchScratch& scratch,
    std::uint32_t max_edges = std::numeric_limits<std::uint32_t>::max()) {
  if (sources.empty() || terminals.empty()) return std::nullopt;
  scratch.prepare(node_count);

  std::vector<std::uint32_t> fwd_frontier, bwd_frontier, next;
  for (auto s : sources) {
    if (!scratch.fwd_seen(s)) {
      scratch.set_fwd(s, 0);
      fwd_frontier.push_back(s);
    }
  }
  for (auto t : terminals) {
    if (!scratch.bwd_seen(t)) {
      scratch.set_bwd(t, 0);
      bwd_frontier.push_back(t);
    }
  }

  constexpr auto kInf = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t best = kInf;
  // Crossing edges (forward-side node, backward-side node) realizing `best`.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> crossings;
  auto record = [&](std::uint32_t u, std::uint32_t w, std::uint32_t total) {
    if (total < best) {
      best = total;
      crossings.clear();
    }
    if (total == best) crossings.emplace_back(u, w);
  };

  // Paths of up to fwd_depth + bwd_depth edges have been ruled out so far.
  std::uint32_t fwd_depth = 0, bwd_depth = 0;
  while (best == kInf) {
    if (fwd_depth + bwd_depth >= max_edges) return std::nullopt;
    const bool forward = fwd_frontier.size() <= bwd_frontier.size();
    auto& frontier = forward ? fwd_frontier : bwd_frontier;
    if (frontier.empty()) return std::nullopt;
    ++(forward ? fwd_depth : bwd_depth);
    next.clear();
    for (std::uint32_t u : frontier) {
      if (forward) {
        const std::uint32_t du = scratch.fwd(u);
        neighbors(u, [&](std::uint32_t v) {
          const NodeRole r = role(v);
          if (r == NodeRole::source) return;
          if (r == NodeRole::terminal) {
            record(u, v, du + 1);
            return;
          }
          if (scratch.bwd_seen(v)) record(u, v, du + 1 + scratch.bwd(v));
          if (!scratch.fwd_seen(v)) {
            scratch.set_fwd(v, du + 1);
            next.push_back(v);
          }
        });
      } else {
        const std::uint32_t du = scratch.bwd(u);
        neighbors(u, [&](std::uint32_t v) {
          const NodeRole r = role(v);
          if (r == NodeRole::terminal) return;
          if (r == NodeRole::source) {
            record(v, u, du + 1);
            return;
          }
          if (scratch.fwd_seen(v)) record(v, u, du + 1 + scratch.fwd(v));
          if (!scratch.bwd_seen(v)) {
            scratch.set_bwd(v, du + 1);
            next.push_back(v);
          }
        });
      }
    }
    frontier.swap(next);
  }
  if (best > max_edges) return std::nullopt;

  // Every shortest path crosses through one of the recorded edges. Walk the
  // backward distances downhill from the crossings to find the reachable
  // terminals, and pick the smallest.
  auto walk = [&](std::vector<std::uint32_t> start, auto&& step_ok) {
    std::unordered_set<std::uint32_t> seen(start.begin(), start.end());
    std::vector<std::uint32_t> stack = std::move(start);
    while (!stack.empty()) {
      const std::uint32_t x = stack.back();
      stack.pop_back();
      neighbors(x, [&](std::uint32_t y) {
        if (!seen.contains(y) && step_ok(x, y)) {
          seen.insert(y);
          stack.push_back(y);
        }
      });
    }
    return seen;
  };
  auto bwd_down = [&](std::uint32_t x, std::uint32_t y) {
    return role(y) != NodeRole::source && scratch.bwd_seen(y) && scratch.bwd(x) > 0 &&
           scratch.bwd(y) + 1 == scratch.bwd(x);
  };
  auto fwd_down = [&](std::uint32_t x, std::uint32_t y) {
    return role(y) != NodeRole::terminal && scratch.fwd_seen(y) && scratch.fwd(x) > 0 &&
           scratch.fwd(y) + 1 == scratch.fwd(x);
  };

  std::vector<std::uint32_t> cross_w;
  for (const auto& [u, w] : crossings) cross_w.push_back(w);
  const auto bwd_region = walk(cross_w, bwd_down);
  std::uint32_t terminal = kInf;
  for (auto x : bwd_region)
    if (role(x) == NodeRole::terminal) terminal = std::min(terminal, x);

  // Nodes from which `terminal` is reachable downhill.
  const auto to_terminal = walk({terminal}, [&](std::uint32_t x, std::uint32_t y) {
    return bwd_region.contains(y) && role(y) == NodeRole::interior && scratch.bwd(y) == scratch.bwd(x) + 1;
  });

  std::vector<std::uint32_t> cross_u;
  for (const auto& [u, w] : crossings)
    if (to_terminal.contains(w)) cross_u.push_back(u);
  const auto fwd_region = walk(cross_u, fwd_down);
  std::uint32_t source = kInf;
  for (auto x : fwd_region)
    if (role(x) == NodeRole::source) source = std::min(source, x);

  // Exact distances to `terminal` over interior nodes, up to the path length,
  // then a greedy walk from `source` taking the smallest-id neighbor one step
  // closer each time.
  std::unordered_map<std::uint32_t, std::uint32_t> to_t{{terminal, 0}};
  std::vector<std::uint32_t> level{terminal};
  for (std::uint32_t d = 1; d < best && !level.empty(); ++d) {
    next.clear();
    for (auto x : level) {
      neighbors(x, [&](std::uint32_t y) {
        if (role(y) == NodeRole::interior && to_t.emplace(y, d).second) next.push_back(y);
      });
    }
    level.swap(next);
  }
  std::vector<std::uint32_t> path{source};
  std::uint32_t cur = source;
  for (std::uint32_t remaining = best; remaining > 0; --remaining) {
    std::uint32_t pick = kInf;
    neighbors(cur, [&](std::uint32_t y) {
      const auto it = to_t.find(y);
      if (it != to_t.end() && it->second + 1 == remaining) pick = std::min(pick, y);
    });
    cur = pick;
    path.push_back(cur);
  }
  return path;
}

}  // namespace galaxy
