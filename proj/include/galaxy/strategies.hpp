#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <set>
#include <utility>
#include <vector>

#include "galaxy/batch.hpp"
#include "galaxy/graph_builder.hpp"
#include "galaxy/random.hpp"
#include "galaxy/types.hpp"

namespace galaxy {

namespace detail {

// The `b` unlabeled examples with the smallest key, ties by ascending id,
// returned in that order. Bounded max-heap, O(N log b).
template <class KeyFn>
Batch smallest_unlabeled(std::size_t n, const LabeledSet& labeled, std::size_t b, KeyFn&& key) {
  Batch batch;
  const std::size_t available = labeled.unlabeled_count();
  if (b > available) {
    batch.clipped = true;
    b = available;
  }
  if (b == 0) return batch;
  using Entry = std::pair<double, std::uint32_t>;
  std::priority_queue<Entry> heap;  // max-heap on (key, id): top is the worst kept entry
  for (std::size_t i = 0; i < n; ++i) {
    if (labeled.raw(i) != LabeledSet::kUnlabeled) continue;
    Entry e{key(i), static_cast<std::uint32_t>(i)};
    if (heap.size() < b) {
      heap.push(e);
    } else if (e < heap.top()) {
      heap.pop();
      heap.push(e);
    }
  }
  std::vector<Entry> kept;
  kept.reserve(heap.size());
  while (!heap.empty()) {
    kept.push_back(heap.top());
    heap.pop();
  }
  std::reverse(kept.begin(), kept.end());
  for (const auto& [k, id] : kept) batch.push(ExampleId{id}, Provenance::one_shot);
  return batch;
}

}  // namespace detail

// Least-confidence sampling: smallest max-probability first.
inline Batch confidence_sampling_batch(const ScoreMatrix& s, const LabeledSet& labeled, std::size_t b) {
  const auto q = compute_confidences(s);
  return detail::smallest_unlabeled(s.rows(), labeled, b, [&](std::size_t i) { return static_cast<double>(q[i]); });
}

// Most likely positive: largest probability mass on any in-distribution class.
inline Batch most_likely_positive_batch(const ScoreMatrix& s, const LabeledSet& labeled, std::size_t b,
                                        const std::vector<ClassId>& id_classes) {
  if (id_classes.empty()) throw input_error("most-likely-positive needs at least one in-distribution class");
  const ClassId ood = class_id(s.classes() - 1);
  for (auto c : id_classes) {
    if (c.value >= s.classes()) throw input_error("in-distribution class out of range");
    if (c == ood) throw input_error("in-distribution classes must exclude the out-of-distribution class");
  }
  return detail::smallest_unlabeled(s.rows(), labeled, b, [&](std::size_t i) {
    float best = 0.0f;
    for (auto c : id_classes) best = std::max(best, s.at(i, c.value));
    return -static_cast<double>(best);
  });
}

// Uniform sample without replacement from the unlabeled examples.
inline Batch random_batch(const LabeledSet& labeled, std::size_t n, std::size_t b, Rng& rng) {
  if (labeled.pool_size() != n) throw input_error("labeled set and pool size disagree");
  Batch batch;
  auto pool = labeled.unlabeled();
  if (b > pool.size()) {
    batch.clipped = true;
    b = pool.size();
  }
  for (std::size_t i = 0; i < b; ++i) {
    const auto j = i + uniform_below(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
    batch.push(pool[i], Provenance::one_shot);
  }
  return batch;
}

}  // namespace galaxy
