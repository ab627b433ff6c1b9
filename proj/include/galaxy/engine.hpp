#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "galaxy/batch.hpp"
#include "galaxy/graph_builder.hpp"
#include "galaxy/linear_graph.hpp"
#include "galaxy/metrics.hpp"
#include "galaxy/random.hpp"
#include "galaxy/strategies.hpp"
#include "galaxy/types.hpp"

namespace galaxy {

struct Query {
  ExampleId id;
  Provenance provenance = Provenance::bisection;
  ClassId graph;               // class graph the path came from (bisection only)
  std::size_t path_edges = 0;  // 0 for fallbacks
  std::uint32_t order = 1;     // graph order when the query was issued
};

// One GALAXY batch as a resumable state machine: the caller asks for the
// pending query, obtains its label however it likes (in-process oracle, file,
// human over HTTP), and submits it. Scores and rankings stay fixed for the
// whole batch; graph order restarts at 1.
class GalaxySession {
 public:
  GalaxySession(const ScoreMatrix& scores, LabeledSet labeled, std::size_t batch_size, Rng rng)
      : graphs_(build_graphs(scores)),
        labeled_(std::move(labeled)),
        confidence_(compute_confidences(scores)),
        batch_size_(batch_size),
        rng_(std::move(rng)),
        class_counts_(scores.classes(), 0) {
    if (labeled_.pool_size() != scores.rows()) throw input_error("labeled set and score matrix disagree on pool size");
    for (const auto& [x, c] : labeled_.entries()) {
      if (c.value >= scores.classes()) throw input_error("label " + std::to_string(c.value) + " outside [0, K)");
      ++class_counts_[c.value];
    }
    // Rebuilt graphs may place oppositely labeled examples next to each other.
    for (const auto& [x, c] : labeled_.entries()) remove_cut_edges(graphs_, x, labeled_);
  }

  // The query the caller must answer next; stable until submit(). nullopt once
  // the batch is full or the pool has no unlabeled examples left.
  const std::optional<Query>& pending() {
    if (!pending_ && !complete()) pending_ = compute_next();
    return pending_;
  }

  void submit(ExampleId x, ClassId c) {
    const auto& p = pending();
    if (!p) throw protocol_error("no query outstanding");
    if (p->id != x)
      throw protocol_error("label for example " + std::to_string(x.value) + " but outstanding query is " +
                           std::to_string(p->id.value));
    if (c.value >= class_counts_.size()) throw input_error("label " + std::to_string(c.value) + " outside [0, K)");
    labeled_.add(x, c);
    ++class_counts_[c.value];
    remove_cut_edges(graphs_, x, labeled_);
    batch_.push(x, p->provenance);
    queries_.push_back(*p);
    pending_.reset();
  }

  bool complete() const { return batch_.size() >= batch_size_ || labeled_.unlabeled_count() == 0; }

  const Batch& batch() const { return batch_; }
  const std::vector<Query>& queries() const { return queries_; }
  const LabeledSet& labeled() const { return labeled_; }
  const GraphSet& graphs() const { return graphs_; }
  std::uint32_t order() const { return graphs_.order(); }
  std::size_t batch_size() const { return batch_size_; }
  Rng& rng() { return rng_; }

 private:
  std::size_t observed_classes() const {
    return static_cast<std::size_t>(std::count_if(class_counts_.begin(), class_counts_.end(),
                                                   [](std::size_t n) { return n > 0; }));
  }

  // Shortest straddling path over all class graphs; ties go to the smaller
  // class. The class that won last time is searched first so the others can
  // be bounded by its length (strictly below it for larger class ids).
  std::optional<Path> shortest_over_graphs() {
    const std::size_t kk = graphs_.class_count();
    std::optional<Path> best;
    auto search = [&](std::size_t k) {
      if (class_counts_[k] == 0) return;
      auto limit = std::numeric_limits<std::uint32_t>::max();
      if (best) limit = static_cast<std::uint32_t>(best->edges() - (k > best->cls.value ? 1 : 0));
      auto p = shortest_straddling_path(graphs_, class_id(k), labeled_, scratch_, limit);
      if (p && (!best || p->edges() < best->edges() || k < best->cls.value)) best = std::move(p);
    };
    const std::size_t first = last_class_ < kk ? last_class_ : 0;
    search(first);
    for (std::size_t k = 0; k < kk; ++k)
      if (k != first) search(k);
    if (best) last_class_ = best->cls.value;
    return best;
  }

  Query compute_next() {
    if (observed_classes() >= 2) {
      for (;;) {
        if (auto path = shortest_over_graphs()) {
          const ExampleId mid = path_midpoint(*path, rng_);
          return Query{mid, Provenance::bisection, path->cls, path->edges(), graphs_.order()};
        }
        if (graphs_.order() + 1 > graphs_.pool_size() - 1) break;
        connect(graphs_, graphs_.order() + 1, labeled_);
      }
    }
    return Query{least_confident_unlabeled(), Provenance::fallback_confidence, ClassId{}, 0, graphs_.order()};
  }

  ExampleId least_confident_unlabeled() {
    if (by_confidence_.empty()) {
      by_confidence_.resize(confidence_.size());
      for (std::size_t i = 0; i < by_confidence_.size(); ++i) by_confidence_[i] = static_cast<std::uint32_t>(i);
      std::sort(by_confidence_.begin(), by_confidence_.end(), [&](std::uint32_t a, std::uint32_t b) {
        return confidence_[a] != confidence_[b] ? confidence_[a] < confidence_[b] : a < b;
      });
    }
    while (labeled_.raw(by_confidence_[confidence_cursor_]) != LabeledSet::kUnlabeled) ++confidence_cursor_;
    return ExampleId{by_confidence_[confidence_cursor_]};
  }

  GraphSet graphs_;
  LabeledSet labeled_;
  std::vector<float> confidence_;
  std::size_t batch_size_;
  Rng rng_;
  std::vector<std::size_t> class_counts_;
  SearchScratch scratch_;
  std::size_t last_class_ = 0;
  std::optional<Query> pending_;
  Batch batch_;
  std::vector<Query> queries_;
  std::vector<std::uint32_t> by_confidence_;
  std::size_t confidence_cursor_ = 0;
};

struct BatchResult {
  Batch batch;
  LabeledSet labeled;
  std::vector<Query> queries;
};

// Runs one GALAXY batch of min(b, #unlabeled) sequential queries against a
// synchronous oracle.
inline BatchResult galaxy_select_batch(const ScoreMatrix& scores, LabeledSet labeled, const Oracle& oracle,
                                       std::size_t b, Rng& rng) {
  if (b == 0) return {Batch{}, std::move(labeled), {}};
  if (labeled.unlabeled_count() == 0) throw pool_exhausted("no unlabeled examples remain");
  GalaxySession session(scores, std::move(labeled), b, rng);
  while (const auto& q = session.pending()) session.submit(q->id, oracle(q->id));
  rng = session.rng();
  return {session.batch(), session.labeled(), session.queries()};
}

// Stand-in for the training step: maps the current labeled set to a fresh
// score matrix of fixed shape.
class ScoreProvider {
 public:
  virtual ~ScoreProvider() = default;
  virtual std::size_t pool_size() const = 0;
  virtual std::size_t class_count() const = 0;
  virtual ScoreMatrix scores(const LabeledSet& labeled) = 0;
};

class StaticScoreProvider final : public ScoreProvider {
 public:
  explicit StaticScoreProvider(ScoreMatrix s) : s_(std::move(s)) {}
  std::size_t pool_size() const override { return s_.rows(); }
  std::size_t class_count() const override { return s_.classes(); }
  ScoreMatrix scores(const LabeledSet&) override { return s_; }

 private:
  ScoreMatrix s_;
};

inline ScoreMatrix checked_scores(ScoreProvider& provider, const LabeledSet& labeled) {
  ScoreMatrix s = provider.scores(labeled);
  if (s.rows() != provider.pool_size() || s.classes() != provider.class_count())
    throw protocol_error("score provider returned a " + std::to_string(s.rows()) + "x" +
                         std::to_string(s.classes()) + " matrix, expected " + std::to_string(provider.pool_size()) +
                         "x" + std::to_string(provider.class_count()));
  return s;
}

enum class Strategy { galaxy, confidence, most_likely_positive, random };

constexpr std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::galaxy: return "galaxy";
    case Strategy::confidence: return "confidence";
    case Strategy::most_likely_positive: return "mlp";
    case Strategy::random: return "random";
  }
  return "unknown";
}

inline Strategy strategy_from_string(std::string_view s) {
  for (auto v : {Strategy::galaxy, Strategy::confidence, Strategy::most_likely_positive, Strategy::random})
    if (to_string(v) == s) return v;
  throw input_error("unknown strategy '" + std::string(s) + "'");
}

struct RunConfig {
  Strategy strategy = Strategy::galaxy;
  std::size_t rounds = 1;      // T
  std::size_t batch_size = 1;  // B
  std::uint64_t seed = 0;
  std::vector<ClassId> id_classes;  // empty: every class but the last
};

struct RunResult {
  LabeledSet labeled;
  std::vector<MetricsRow> metrics;
  std::vector<Batch> batches;
};

// Multi-round pool-based loop: a uniform seed round of B labels, then T-1
// rounds of strategy batches with scores refreshed in between. When `truth`
// is given, balanced accuracy is measured over the whole pool; otherwise over
// the labeled examples.
inline RunResult run_active_learning(ScoreProvider& provider, const Oracle& oracle, const RunConfig& cfg,
                                     std::span<const ClassId> truth = {}) {
  const std::size_t n = provider.pool_size();
  const std::size_t k = provider.class_count();
  if (cfg.batch_size == 0) throw input_error("batch size must be at least 1");
  if (cfg.rounds == 0) throw input_error("round count must be at least 1");
  if (cfg.rounds * cfg.batch_size > n)
    throw input_error("budget T*B = " + std::to_string(cfg.rounds * cfg.batch_size) + " exceeds pool size " +
                      std::to_string(n));
  if (!truth.empty() && truth.size() != n) throw input_error("truth length does not match pool size");
  const auto id_classes = cfg.id_classes.empty() ? default_id_classes(k) : cfg.id_classes;

  Rng rng(cfg.seed);
  RunResult out{LabeledSet(n), {}, {}};

  auto measure = [&](const ScoreMatrix& s, std::size_t round) {
    std::vector<ClassId> pred, want;
    if (!truth.empty()) {
      for (std::size_t i = 0; i < n; ++i) pred.push_back(class_id(s.argmax(i)));
      want.assign(truth.begin(), truth.end());
    } else {
      for (const auto& [x, c] : out.labeled.entries()) {
        pred.push_back(class_id(s.argmax(x.value)));
        want.push_back(c);
      }
    }
    out.metrics.push_back(MetricsRow{round, out.labeled.size(), balanced_accuracy(pred, want, k).value,
                                     id_label_count(out.labeled, id_classes), std::string(to_string(cfg.strategy))});
  };

  Batch seed = random_batch(out.labeled, n, cfg.batch_size, rng);
  for (auto& p : seed.provenance) p = Provenance::seed_round;
  for (auto x : seed.ids) out.labeled.add(x, oracle(x));
  out.batches.push_back(seed);
  ScoreMatrix s = checked_scores(provider, out.labeled);
  measure(s, 0);

  for (std::size_t t = 1; t < cfg.rounds; ++t) {
    Batch batch;
    switch (cfg.strategy) {
      case Strategy::galaxy: {
        auto r = galaxy_select_batch(s, std::move(out.labeled), oracle, cfg.batch_size, rng);
        out.labeled = std::move(r.labeled);
        batch = std::move(r.batch);
        break;
      }
      case Strategy::confidence: batch = confidence_sampling_batch(s, out.labeled, cfg.batch_size); break;
      case Strategy::most_likely_positive:
        batch = most_likely_positive_batch(s, out.labeled, cfg.batch_size, id_classes);
        break;
      case Strategy::random: batch = random_batch(out.labeled, n, cfg.batch_size, rng); break;
    }
    if (cfg.strategy != Strategy::galaxy)
      for (auto x : batch.ids) out.labeled.add(x, oracle(x));
    out.batches.push_back(std::move(batch));
    s = checked_scores(provider, out.labeled);
    measure(s, t);
  }
  return out;
}

inline RunResult galaxy_run(ScoreProvider& provider, const Oracle& oracle, std::size_t rounds,
                            std::size_t batch_size, std::uint64_t seed, std::span<const ClassId> truth = {}) {
  return run_active_learning(provider, oracle, RunConfig{Strategy::galaxy, rounds, batch_size, seed, {}}, truth);
}

// Explicit undirected graph for the classic shortest-shortest-path algorithm
// (e.g. a k-nearest-neighbor graph over features).
class StaticGraph {
 public:
  explicit StaticGraph(std::size_t n) : adj_(n) {}

  std::size_t size() const { return adj_.size(); }

  void add_edge(ExampleId a, ExampleId b) {
    if (a.value >= size() || b.value >= size()) throw input_error("edge endpoint outside graph");
    if (a == b || has_edge(a, b)) return;
    adj_[a.value].push_back(b.value);
    adj_[b.value].push_back(a.value);
  }
  bool has_edge(ExampleId a, ExampleId b) const {
    const auto& v = adj_[a.value];
    return std::find(v.begin(), v.end(), b.value) != v.end();
  }
  void remove_edge(ExampleId a, ExampleId b) {
    std::erase(adj_[a.value], b.value);
    std::erase(adj_[b.value], a.value);
  }
  const std::vector<std::uint32_t>& adjacent(std::uint32_t x) const { return adj_[x]; }
  std::size_t edge_count() const {
    std::size_t e = 0;
    for (const auto& v : adj_) e += v.size();
    return e / 2;
  }

  static StaticGraph chain(std::size_t n) {
    StaticGraph g(n);
    for (std::size_t i = 0; i + 1 < n; ++i) g.add_edge(example(i), example(i + 1));
    return g;
  }

  // Symmetrized k-nearest-neighbor graph under Euclidean distance.
  static StaticGraph knn(const std::vector<std::vector<double>>& points, std::size_t k) {
    const std::size_t n = points.size();
    StaticGraph g(n);
    std::vector<std::pair<double, std::uint32_t>> d;
    for (std::size_t i = 0; i < n; ++i) {
      d.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        double s = 0.0;
        for (std::size_t f = 0; f < points[i].size(); ++f) s += (points[i][f] - points[j][f]) * (points[i][f] - points[j][f]);
        d.emplace_back(s, static_cast<std::uint32_t>(j));
      }
      const std::size_t take = std::min(k, d.size());
      std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(take), d.end());
      for (std::size_t t = 0; t < take; ++t) g.add_edge(example(i), ExampleId{d[t].second});
    }
    return g;
  }

 private:
  std::vector<std::vector<std::uint32_t>> adj_;
};

struct S2Result {
  LabeledSet labeled;
  Batch queries;  // every query in order, including the two initial samples
  std::size_t cuts_removed = 0;
};

// Shortest straddling path in a static graph between differently labeled
// examples, minimized over the label of the source side.
inline std::optional<std::vector<std::uint32_t>> static_shortest_straddling_path(const StaticGraph& g,
                                                                                 const LabeledSet& labeled,
                                                                                 SearchScratch& scratch) {
  std::vector<std::uint32_t> classes;
  for (const auto& [x, c] : labeled.entries())
    if (std::find(classes.begin(), classes.end(), c.value) == classes.end()) classes.push_back(c.value);
  std::sort(classes.begin(), classes.end());
  std::optional<std::vector<std::uint32_t>> best;
  for (auto c : classes) {
    std::vector<std::uint32_t> sources, terminals;
    for (const auto& [x, lc] : labeled.entries()) (lc.value == c ? sources : terminals).push_back(x.value);
    auto role = [&](std::uint32_t v) {
      const auto l = labeled.raw(v);
      if (l == LabeledSet::kUnlabeled) return NodeRole::interior;
      return l == c ? NodeRole::source : NodeRole::terminal;
    };
    auto nbrs = [&](std::uint32_t u, auto&& visit) {
      for (auto v : g.adjacent(u)) visit(v);
    };
    auto p = find_straddling_path(g.size(), sources, terminals, nbrs, role, scratch);
    if (p && (!best || p->size() < best->size())) best = std::move(p);
  }
  return best;
}

// Classic S2 on a fixed graph: two uniform initial samples (unless `initial`
// is given), then `budget` rounds of midpoint bisection along the shortest
// straddling path, or a uniform query when no such path exists. Cut edges are
// removed after every label.
inline S2Result s2_select(StaticGraph graph, const Oracle& oracle, std::size_t budget, Rng& rng,
                          std::optional<LabeledSet> initial = std::nullopt) {
  const std::size_t n = graph.size();
  if (budget > n) throw input_error("budget " + std::to_string(budget) + " exceeds pool size " + std::to_string(n));
  if (budget < 2) throw input_error("budget must be at least 2");
  S2Result out{LabeledSet(n), {}, 0};

  auto label = [&](ExampleId x, Provenance p) {
    out.labeled.add(x, oracle(x));
    out.queries.push(x, p);
    const auto cx = out.labeled.raw(x.value);
    const auto adj = graph.adjacent(x.value);
    for (auto y : adj) {
      const auto cy = out.labeled.raw(y);
      if (cy != LabeledSet::kUnlabeled && cy != cx) {
        graph.remove_edge(x, ExampleId{y});
        ++out.cuts_removed;
      }
    }
  };
  auto uniform_unlabeled = [&] {
    const auto pool = out.labeled.unlabeled();
    return pool[uniform_below(rng, pool.size())];
  };

  if (initial) {
    if (initial->pool_size() != n) throw input_error("initial labeled set has wrong pool size");
    for (const auto& [x, c] : initial->entries()) {
      out.labeled.add(x, c);
      for (auto y : std::vector<std::uint32_t>(graph.adjacent(x.value))) {
        const auto cy = out.labeled.raw(y);
        if (cy != LabeledSet::kUnlabeled && cy != c.value) {
          graph.remove_edge(x, ExampleId{y});
          ++out.cuts_removed;
        }
      }
    }
  } else {
    label(uniform_unlabeled(), Provenance::fallback_random);
    label(uniform_unlabeled(), Provenance::fallback_random);
  }

  SearchScratch scratch;
  for (std::size_t t = 0; t < budget && out.labeled.unlabeled_count() > 0; ++t) {
    if (auto nodes = static_shortest_straddling_path(graph, out.labeled, scratch)) {
      Path p{ClassId{}, {}};
      for (auto v : *nodes) p.nodes.push_back(ExampleId{v});
      label(path_midpoint(p, rng), Provenance::bisection);
    } else {
      label(uniform_unlabeled(), Provenance::fallback_random);
    }
  }
  return out;
}

}  // namespace galaxy
