#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "galaxy/engine.hpp"
#include "galaxy/graph_builder.hpp"
#include "galaxy/metrics.hpp"
#include "galaxy/random.hpp"
#include "galaxy/types.hpp"

namespace galaxy {

// Knobs of the synthetic stand-in for a trained classifier. Example i of true
// class y gets logits
//
//   gain(L) * (separation_c(L) * [c == y'] + z_ic) + bias_c + fit * [i labeled c]
//
// with z_ic ~ N(0, 1) fixed per pool, y' the (possibly noise-flipped) class
// the features resemble, separation_c growing with the labels observed for c
// and gain growing with |L|. In-distribution classes get a constant logit
// bonus so that, at the point where class-conditional densities cross, the
// model's out-of-distribution probability is 0.5 - skew.
struct ModelQuality {
  double separation = 0.5;            // signal strength with no labels
  double separation_per_label = 0.3;  // added per log1p(labels of the class)
  double gain = 1.0;
  double gain_per_label = 0.05;  // added per log1p(|L|)
  double skew = 0.0;             // in [0, 0.5)
  double label_noise = 0.0;      // fraction of examples that resemble another class
  double fit = 2.0;              // logit bonus of a labeled example's own class
  bool reweight = false;         // subtract log prior of the labeled class counts
};

struct SimPool {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<ClassId> true_labels;
  std::vector<std::size_t> class_sizes;
  double epsilon = 1.0;  // max over in-distribution classes of N_k / N_{K-1}
  ModelQuality quality;
  std::uint64_t seed = 0;

  Oracle oracle() const {
    return [labels = true_labels](ExampleId x) { return labels.at(x.value); };
  }
  ClassId ood_class() const { return class_id(k - 1); }
};

namespace detail {

inline std::vector<ClassId> shuffled_labels(const std::vector<std::size_t>& sizes, Rng& rng) {
  std::vector<ClassId> labels;
  for (std::size_t c = 0; c < sizes.size(); ++c) labels.insert(labels.end(), sizes[c], class_id(c));
  for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[uniform_below(rng, i)]);
  return labels;
}

inline double realized_epsilon(const std::vector<std::size_t>& sizes) {
  double e = 0.0;
  for (std::size_t c = 0; c + 1 < sizes.size(); ++c)
    e = std::max(e, static_cast<double>(sizes[c]) / static_cast<double>(sizes.back()));
  return e;
}

}  // namespace detail

// Binary pool (class 0 in-distribution, class 1 out-of-distribution) whose
// out-of-distribution probability separates the classes perfectly: every
// in-distribution example scores below the threshold 0.5 - skew, every other
// example above it.
struct SeparablePool {
  SimPool pool;
  ScoreMatrix scores;
  double threshold = 0.5;
};

inline SeparablePool make_separable_pool(std::size_t n_id, std::size_t n_od, double skew, std::uint64_t seed) {
  if (n_id < 1 || n_od < 1) throw input_error("separable pool needs at least one example per class");
  if (!(skew >= 0.0 && skew < 0.5)) throw input_error("skew must lie in [0, 0.5)");
  Rng rng(seed);
  const std::vector<std::size_t> sizes{n_id, n_od};
  SeparablePool out;
  out.pool.n = n_id + n_od;
  out.pool.k = 2;
  out.pool.class_sizes = sizes;
  out.pool.true_labels = detail::shuffled_labels(sizes, rng);
  out.pool.epsilon = detail::realized_epsilon(sizes);
  out.pool.quality.skew = skew;
  out.pool.seed = seed;
  out.threshold = 0.5 - skew;

  constexpr double kGap = 1e-6;
  std::vector<float> v(out.pool.n * 2);
  for (std::size_t i = 0; i < out.pool.n; ++i) {
    const double u = uniform01(rng);
    const double p_ood = out.pool.true_labels[i].value == 0 ? (out.threshold - kGap) * u
                                                            : out.threshold + kGap + (1.0 - out.threshold - kGap) * (1.0 - u);
    v[2 * i + 1] = static_cast<float>(p_ood);
    v[2 * i] = 1.0f - v[2 * i + 1];
  }
  out.scores = ScoreMatrix(out.pool.n, 2, std::move(v));
  return out;
}

// Synthetic score provider: re-evaluates the logit model above against the
// current labeled set, standing in for retraining between batches.
class SyntheticProvider final : public ScoreProvider {
 public:
  SyntheticProvider(const SimPool& pool, std::uint64_t seed)
      : n_(pool.n), k_(pool.k), quality_(pool.quality), looks_like_(pool.true_labels), noise_(pool.n * pool.k) {
    Rng rng = substream(seed, 0x5c0e5);
    for (auto& z : noise_) z = standard_normal(rng);
    for (auto& y : looks_like_) {
      if (quality_.label_noise > 0.0 && bernoulli(rng, quality_.label_noise)) {
        const auto shift = 1 + uniform_below(rng, k_ - 1);
        y = class_id((y.value + shift) % k_);
      }
    }
    const double p = 0.5 + quality_.skew;
    id_bias_ = std::log(p / (1.0 - p));
  }

  std::size_t pool_size() const override { return n_; }
  std::size_t class_count() const override { return k_; }

  ScoreMatrix scores(const LabeledSet& labeled) override {
    if (labeled.pool_size() != n_) throw protocol_error("labeled set does not match synthetic pool");
    std::vector<double> counts(k_, 0.0);
    for (const auto& [x, c] : labeled.entries()) counts[c.value] += 1.0;
    const double gain = quality_.gain + quality_.gain_per_label * std::log1p(static_cast<double>(labeled.size()));
    std::vector<double> sep(k_), bias(k_, 0.0);
    for (std::size_t c = 0; c < k_; ++c) {
      sep[c] = quality_.separation + quality_.separation_per_label * std::log1p(counts[c]);
      if (c + 1 < k_) bias[c] = id_bias_;
      if (quality_.reweight && !labeled.empty())
        bias[c] -= std::log((counts[c] + 1.0) / (static_cast<double>(labeled.size()) + static_cast<double>(k_)));
    }
    std::vector<float> v(n_ * k_);
    std::vector<double> logit(k_);
    for (std::size_t i = 0; i < n_; ++i) {
      const auto own = labeled.raw(i);
      double top = -1e300;
      for (std::size_t c = 0; c < k_; ++c) {
        logit[c] = gain * ((looks_like_[i].value == c ? sep[c] : 0.0) + noise_[i * k_ + c]) + bias[c];
        if (own == c) logit[c] += quality_.fit;
        top = std::max(top, logit[c]);
      }
      double sum = 0.0;
      for (auto& l : logit) sum += (l = std::exp(l - top));
      for (std::size_t c = 0; c < k_; ++c) v[i * k_ + c] = static_cast<float>(logit[c] / sum);
    }
    return ScoreMatrix(n_, k_, std::move(v));
  }

 private:
  std::size_t n_, k_;
  ModelQuality quality_;
  std::vector<ClassId> looks_like_;
  std::vector<double> noise_;
  double id_bias_ = 0.0;
};

struct ImbalancedPool {
  SimPool pool;
  SyntheticProvider provider;
};

// Class sizes for a K-class pool of n examples whose in-distribution classes
// each hold at most epsilon times the out-of-distribution class.
inline std::vector<std::size_t> imbalanced_class_sizes(std::size_t n, std::size_t k, double epsilon) {
  if (k < 2) throw input_error("need at least two classes");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw input_error("epsilon must lie in (0, 1]");
  const auto id_classes = k - 1;
  auto n_ood = static_cast<std::size_t>(std::ceil(static_cast<double>(n) / (1.0 + static_cast<double>(id_classes) * epsilon) - 1e-9));
  n_ood = std::min(n_ood, n);
  std::vector<std::size_t> sizes(k, 0);
  sizes[k - 1] = n_ood;
  const std::size_t rest = n - n_ood;
  for (std::size_t c = 0; c < id_classes; ++c) sizes[c] = rest / id_classes + (c < rest % id_classes ? 1 : 0);
  // Shift examples to the majority class until the ratio bound holds exactly.
  for (std::size_t c = 0; c < id_classes; ++c) {
    while (sizes[c] > 0 && static_cast<double>(sizes[c]) > epsilon * static_cast<double>(sizes[k - 1])) {
      --sizes[c];
      ++sizes[k - 1];
    }
  }
  for (std::size_t c = 0; c < id_classes; ++c)
    if (sizes[c] == 0)
      throw input_error("pool of " + std::to_string(n) + " examples cannot hold " + std::to_string(id_classes) +
                        " nonempty in-distribution classes at epsilon " + std::to_string(epsilon));
  return sizes;
}

inline SimPool make_pool_with_sizes(std::vector<std::size_t> sizes, const ModelQuality& quality, std::uint64_t seed) {
  Rng rng(seed);
  SimPool pool;
  pool.k = sizes.size();
  for (auto s : sizes) pool.n += s;
  pool.class_sizes = std::move(sizes);
  pool.true_labels = detail::shuffled_labels(pool.class_sizes, rng);
  pool.epsilon = detail::realized_epsilon(pool.class_sizes);
  pool.quality = quality;
  pool.seed = seed;
  return pool;
}

inline ImbalancedPool make_imbalanced_pool(std::size_t n, std::size_t k, double epsilon, const ModelQuality& quality,
                                           std::uint64_t seed) {
  SimPool pool = make_pool_with_sizes(imbalanced_class_sizes(n, k, epsilon), quality, seed);
  SyntheticProvider provider(pool, splitmix64(seed));
  return {std::move(pool), std::move(provider)};
}

// Class sizes of the extremely unbalanced benchmark scenarios. The last entry
// is the out-of-distribution class.
struct PoolPreset {
  std::string_view name;
  std::vector<std::size_t> sizes;
  double reported_epsilon;
};

inline const std::vector<PoolPreset>& pool_presets() {
  static const std::vector<PoolPreset> presets{
      {"cifar10-2", {5000, 45000}, 0.1111},
      {"cifar10-3", {5000, 5000, 40000}, 0.1250},
      {"cifar100-2", {500, 49500}, 0.0101},
      {"cifar100-3", {500, 500, 49000}, 0.0102},
      {"cifar100-10", {500, 500, 500, 500, 500, 500, 500, 500, 500, 40500}, 0.0123},
      {"svhn-2", {4948, 68309}, 0.0724},
      {"svhn-3", {13861, 4948, 54448}, 0.2546},
      {"pathmnist-2", {9401, 80595}, 0.1166},
  };
  return presets;
}

inline const PoolPreset& find_preset(std::string_view name) {
  for (const auto& p : pool_presets())
    if (p.name == name) return p;
  throw input_error("unknown pool preset '" + std::string(name) + "'");
}

inline ImbalancedPool make_preset_pool(std::string_view name, const ModelQuality& quality, std::uint64_t seed) {
  SimPool pool = make_pool_with_sizes(find_preset(name).sizes, quality, seed);
  SyntheticProvider provider(pool, splitmix64(seed));
  return {std::move(pool), std::move(provider)};
}

}  // namespace galaxy
