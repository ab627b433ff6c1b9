#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "galaxy/types.hpp"

namespace galaxy {

// Per-round record of an active-learning run.
struct MetricsRow {
  std::size_t round = 0;
  std::size_t labels_used = 0;
  double acc_bal = 0.0;
  std::size_t id_labels = 0;
  std::string strategy;
};

struct BalancedAccuracy {
  double value = 0.0;
  // Classes with no examples in `truths`; left out of the mean.
  std::vector<ClassId> empty_classes;
};

// Unweighted mean over classes of within-class accuracy.
inline BalancedAccuracy balanced_accuracy(std::span<const ClassId> predictions, std::span<const ClassId> truths,
                                          std::size_t k) {
  if (predictions.size() != truths.size()) throw input_error("prediction and truth lengths differ");
  if (truths.empty()) throw input_error("balanced accuracy of an empty set");
  std::vector<std::size_t> hit(k, 0), total(k, 0);
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i].value >= k || predictions[i].value >= k) throw input_error("label outside [0, k)");
    ++total[truths[i].value];
    if (predictions[i] == truths[i]) ++hit[truths[i].value];
  }
  BalancedAccuracy out;
  std::size_t present = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (total[c] == 0) {
      out.empty_classes.push_back(class_id(c));
      continue;
    }
    ++present;
    out.value += static_cast<double>(hit[c]) / static_cast<double>(total[c]);
  }
  out.value /= static_cast<double>(present);
  return out;
}

inline std::size_t id_label_count(const LabeledSet& labeled, std::span<const ClassId> id_classes) {
  std::size_t n = 0;
  for (const auto& [x, c] : labeled.entries())
    for (auto id : id_classes)
      if (c == id) {
        ++n;
        break;
      }
  return n;
}

// Fraction of labels that landed in an in-distribution class.
inline double id_label_fraction(const LabeledSet& labeled, std::span<const ClassId> id_classes) {
  if (labeled.empty()) throw input_error("id label fraction of an empty labeled set");
  return static_cast<double>(id_label_count(labeled, id_classes)) / static_cast<double>(labeled.size());
}

// Every class except the last (out-of-distribution) one.
inline std::vector<ClassId> default_id_classes(std::size_t k) {
  std::vector<ClassId> out;
  for (std::size_t c = 0; c + 1 < k; ++c) out.push_back(class_id(c));
  return out;
}

}  // namespace galaxy
