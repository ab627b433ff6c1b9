#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "galaxy/linear_graph.hpp"
#include "galaxy/types.hpp"

namespace galaxy {

// N x K softmax probabilities, row-major float32.
//
// Rows must sum to 1 within kRowSumTolerance. Rows whose sum is off by more
// than float rounding can explain are rescaled on ingestion; rows already
// within rounding are stored verbatim, so ingesting a matrix twice is a no-op.
class ScoreMatrix {
 public:
  static constexpr double kRowSumTolerance = 1e-4;

  ScoreMatrix() = default;
  ScoreMatrix(std::size_t n, std::size_t k, std::vector<float> values) : n_(n), k_(k), v_(std::move(values)) {
    if (n_ < 1) throw format_error("score matrix needs at least one row");
    if (k_ < 2) throw format_error("score matrix needs at least two classes");
    if (v_.size() != n_ * k_)
      throw format_error("score matrix has " + std::to_string(v_.size()) + " values, expected " +
                         std::to_string(n_ * k_));
    const double rounding_slack = 4.0 * static_cast<double>(k_) * FLT_EPSILON;
    for (std::size_t i = 0; i < n_; ++i) {
      double sum = 0.0;
      for (std::size_t c = 0; c < k_; ++c) {
        const float x = v_[i * k_ + c];
        if (!(x >= 0.0f && x <= 1.0f))
          throw format_error("row " + std::to_string(i) + " has entry outside [0, 1]");
        sum += x;
      }
      if (std::abs(sum - 1.0) > kRowSumTolerance)
        throw format_error("row " + std::to_string(i) + " sums to " + std::to_string(sum) + ", not 1");
      if (std::abs(sum - 1.0) > rounding_slack) {
        for (std::size_t c = 0; c < k_; ++c)
          v_[i * k_ + c] = static_cast<float>(static_cast<double>(v_[i * k_ + c]) / sum);
      }
    }
  }

  std::size_t rows() const { return n_; }
  std::size_t classes() const { return k_; }
  float at(std::size_t i, std::size_t c) const { return v_[i * k_ + c]; }
  std::span<const float> row(std::size_t i) const { return {v_.data() + i * k_, k_}; }
  const std::vector<float>& values() const { return v_; }

  std::size_t argmax(std::size_t i) const {
    const auto r = row(i);
    return static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }

  friend bool operator==(const ScoreMatrix&, const ScoreMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  std::vector<float> v_;
};

// q_i: the largest class probability of each row.
inline std::vector<float> compute_confidences(const ScoreMatrix& s) {
  std::vector<float> q(s.rows());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const auto r = s.row(i);
    q[i] = *std::max_element(r.begin(), r.end());
  }
  return q;
}

struct MarginVector {
  ClassId cls;
  std::vector<double> values;  // in [-1, 0]; 0 where class k attains the row max
};

// Float differences are exact in double, so margins compare exactly.
inline MarginVector compute_margins(const ScoreMatrix& s, std::span<const float> q, ClassId k) {
  if (k.value >= s.classes()) throw input_error("unknown class id " + std::to_string(k.value));
  if (q.size() != s.rows()) throw input_error("confidence vector length does not match score matrix");
  MarginVector m{k, std::vector<double>(s.rows())};
  for (std::size_t i = 0; i < s.rows(); ++i)
    m.values[i] = static_cast<double>(s.at(i, k.value)) - static_cast<double>(q[i]);
  return m;
}

// Ranking for class k: ascending margin, then ascending confidence, then id.
inline Ranking rank_by_margin(const MarginVector& m, std::span<const float> q) {
  struct Key {
    double margin;
    float q;
    std::uint32_t id;
  };
  std::vector<Key> keys(m.values.size());
  for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = {m.values[i], q[i], static_cast<std::uint32_t>(i)};
  std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
    if (a.margin != b.margin) return a.margin < b.margin;
    if (a.q != b.q) return a.q < b.q;
    return a.id < b.id;
  });
  std::vector<ExampleId> order(keys.size());
  for (std::size_t p = 0; p < keys.size(); ++p) order[p] = ExampleId{keys[p].id};
  return Ranking(m.cls, std::move(order));
}

// K one-vs-all linear graphs at order 1.
inline GraphSet build_graphs(const ScoreMatrix& s) {
  const auto q = compute_confidences(s);
  std::vector<Ranking> rankings;
  rankings.reserve(s.classes());
  for (std::size_t k = 0; k < s.classes(); ++k) rankings.push_back(rank_by_margin(compute_margins(s, q, class_id(k)), q));
  return GraphSet(std::move(rankings), 1);
}

// Raises the graph order by one, adding edges between ranks `new_ord` apart.
// New edges joining two differently-labeled examples are removed at once.
inline void connect(GraphSet& g, std::uint32_t new_ord, const LabeledSet& labeled) {
  if (new_ord != g.order() + 1)
    throw input_error("connect must raise the order by exactly one (have " + std::to_string(g.order()) +
                      ", asked " + std::to_string(new_ord) + ")");
  if (g.pool_size() < 2 || new_ord > g.pool_size() - 1)
    throw order_exhausted("graph order cannot exceed N-1 = " + std::to_string(g.pool_size() - 1));
  g.set_order(new_ord);
  const std::int64_t n = static_cast<std::int64_t>(g.pool_size());
  for (const auto& [x, cx] : labeled.entries()) {
    for (const auto& r : g.rankings()) {
      const std::int64_t p = r.position[x.value];
      for (const std::int64_t q : {p - static_cast<std::int64_t>(new_ord), p + static_cast<std::int64_t>(new_ord)}) {
        if (q < 0 || q >= n) continue;
        const auto cy = labeled.raw(r.order[q].value);
        if (cy != LabeledSet::kUnlabeled && cy != cx.value) g.remove_cut(x, r.order[q]);
      }
    }
  }
}

}  // namespace galaxy
