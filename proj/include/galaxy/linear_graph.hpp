#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "galaxy/random.hpp"
#include "galaxy/straddling_search.hpp"
#include "galaxy/types.hpp"

namespace galaxy {

// One-vs-all ranking of the pool for a single class. `order[p]` is the example
// at rank p; `position[x]` is the inverse permutation.
struct Ranking {
  ClassId cls;
  std::vector<ExampleId> order;
  std::vector<std::uint32_t> position;

  Ranking() = default;
  Ranking(ClassId k, std::vector<ExampleId> ord) : cls(k), order(std::move(ord)), position(order.size()) {
    std::vector<bool> seen(order.size(), false);
    for (std::size_t p = 0; p < order.size(); ++p) {
      const auto x = order[p].value;
      if (x >= order.size() || seen[x]) throw input_error("ranking is not a permutation of [0, N)");
      seen[x] = true;
      position[x] = static_cast<std::uint32_t>(p);
    }
  }
};

// Unordered example pair, packed for hashing.
inline std::uint64_t pair_key(ExampleId a, ExampleId b) {
  const auto lo = std::min(a.value, b.value), hi = std::max(a.value, b.value);
  return (static_cast<std::uint64_t>(lo) << 32) | hi;
}

// The K implicit linear graphs. The class-k graph at order `ord` joins ranks
// within distance `ord` of each other, minus any pair in the shared removed-cut
// set.
class GraphSet {
 public:
  GraphSet() = default;
  explicit GraphSet(std::vector<Ranking> rankings, std::uint32_t ord = 1) : rankings_(std::move(rankings)) {
    if (rankings_.empty()) throw input_error("graph set needs at least one ranking");
    n_ = rankings_.front().order.size();
    for (const auto& r : rankings_)
      if (r.order.size() != n_) throw input_error("rankings disagree on pool size");
    cut_degree_.assign(n_, 0);
    set_order(ord);
  }

  std::size_t pool_size() const { return n_; }
  std::size_t class_count() const { return rankings_.size(); }
  std::uint32_t order() const { return ord_; }
  const Ranking& ranking(ClassId k) const { return rankings_.at(k.value); }
  const std::vector<Ranking>& rankings() const { return rankings_; }

  void set_order(std::uint32_t ord) {
    if (ord < 1 || (n_ > 1 && ord > n_ - 1) || (n_ <= 1 && ord > 1))
      throw order_exhausted("graph order " + std::to_string(ord) + " outside [1, N-1]");
    ord_ = ord;
  }

  void remove_cut(ExampleId a, ExampleId b) {
    if (removed_.insert(pair_key(a, b)).second) {
      ++cut_degree_[a.value];
      ++cut_degree_[b.value];
    }
  }
  bool is_removed(ExampleId a, ExampleId b) const {
    if (removed_.empty() || cut_degree_[a.value] == 0 || cut_degree_[b.value] == 0) return false;
    return removed_.contains(pair_key(a, b));
  }
  const std::unordered_set<std::uint64_t>& removed_cuts() const { return removed_; }

  void check_example(ExampleId x) const {
    if (x.value >= n_) throw input_error("unknown example id " + std::to_string(x.value));
  }
  void check_class(ClassId k) const {
    if (k.value >= rankings_.size()) throw input_error("unknown class id " + std::to_string(k.value));
  }

  // Calls visit(neighbor) for each neighbor of x in graph k, nearest ranks first.
  template <class Visit>
  void for_each_neighbor(ClassId k, std::uint32_t x, Visit&& visit) const {
    const auto& r = rankings_[k.value];
    const std::int64_t p = r.position[x];
    const std::int64_t n = static_cast<std::int64_t>(n_);
    for (std::int64_t d = 1; d <= ord_; ++d) {
      if (p - d >= 0) {
        const auto y = r.order[p - d].value;
        if (!is_removed(ExampleId{x}, ExampleId{y})) visit(y);
      }
      if (p + d < n) {
        const auto y = r.order[p + d].value;
        if (!is_removed(ExampleId{x}, ExampleId{y})) visit(y);
      }
    }
  }

 private:
  std::vector<Ranking> rankings_;
  std::size_t n_ = 0;
  std::uint32_t ord_ = 1;
  std::unordered_set<std::uint64_t> removed_;
  std::vector<std::uint32_t> cut_degree_;
};

inline std::vector<ExampleId> neighbors(const GraphSet& g, ClassId k, ExampleId x) {
  g.check_class(k);
  g.check_example(x);
  std::vector<ExampleId> out;
  g.for_each_neighbor(k, x.value, [&](std::uint32_t y) { out.push_back(ExampleId{y}); });
  std::sort(out.begin(), out.end());
  return out;
}

struct Path {
  ClassId cls;
  std::vector<ExampleId> nodes;  // source (labeled k) .. terminal (labeled != k)

  std::size_t edges() const { return nodes.empty() ? 0 : nodes.size() - 1; }
  friend bool operator==(const Path&, const Path&) = default;
};

// Shortest path in graph k from a class-k labeled example to an example
// labeled with any other class. nullopt when either side is missing or no
// pair is connected within `max_edges` edges.
inline std::optional<Path> shortest_straddling_path(const GraphSet& g, ClassId k, const LabeledSet& labeled,
                                                    SearchScratch& scratch,
                                                    std::uint32_t max_edges = std::numeric_limits<std::uint32_t>::max()) {
  g.check_class(k);
  if (labeled.pool_size() != g.pool_size()) throw input_error("labeled set and graph disagree on pool size");
  std::vector<std::uint32_t> sources, terminals;
  for (const auto& [x, c] : labeled.entries()) (c == k ? sources : terminals).push_back(x.value);
  if (sources.empty() || terminals.empty()) return std::nullopt;

  auto role = [&](std::uint32_t v) {
    const auto c = labeled.raw(v);
    if (c == LabeledSet::kUnlabeled) return NodeRole::interior;
    return c == k.value ? NodeRole::source : NodeRole::terminal;
  };
  auto nbrs = [&](std::uint32_t u, auto&& visit) { g.for_each_neighbor(k, u, visit); };
  auto found = find_straddling_path(g.pool_size(), sources, terminals, nbrs, role, scratch, max_edges);
  if (!found) return std::nullopt;
  Path p{k, {}};
  p.nodes.reserve(found->size());
  for (auto v : *found) p.nodes.push_back(ExampleId{v});
  return p;
}

inline std::optional<Path> shortest_straddling_path(const GraphSet& g, ClassId k, const LabeledSet& labeled) {
  SearchScratch scratch;
  return shortest_straddling_path(g, k, labeled, scratch);
}

// Middle node of a path with m >= 2 edges: v[m/2] for even m, otherwise
// v[(m-1)/2] or v[(m+1)/2] by a fair coin.
inline ExampleId path_midpoint(const Path& p, Rng& rng) {
  const std::size_t m = p.edges();
  if (m < 2)
    throw contract_violation("straddling path with " + std::to_string(m) +
                             " edge(s); cut edges must be removed before searching");
  if (m % 2 == 0) return p.nodes[m / 2];
  return p.nodes[coin(rng) ? (m + 1) / 2 : (m - 1) / 2];
}

// Removes every edge (in any class graph at the current order) joining x to a
// labeled example with a different label.
inline void remove_cut_edges(GraphSet& g, ExampleId x, const LabeledSet& labeled) {
  g.check_example(x);
  const ClassId cx = labeled.at(x);
  const std::int64_t n = static_cast<std::int64_t>(g.pool_size());
  for (const auto& r : g.rankings()) {
    const std::int64_t p = r.position[x.value];
    for (std::int64_t d = 1; d <= g.order(); ++d) {
      for (const std::int64_t q : {p - d, p + d}) {
        if (q < 0 || q >= n) continue;
        const ExampleId y = r.order[q];
        const auto cy = labeled.raw(y.value);
        if (cy != LabeledSet::kUnlabeled && cy != cx.value) g.remove_cut(x, y);
      }
    }
  }
}

}  // namespace galaxy
