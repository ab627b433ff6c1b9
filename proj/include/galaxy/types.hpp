#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace galaxy {

// Strong index types. Both are 0-based.
struct ExampleId {
  std::uint32_t value = 0;
  friend constexpr auto operator<=>(ExampleId, ExampleId) = default;
};

struct ClassId {
  std::uint32_t value = 0;
  friend constexpr auto operator<=>(ClassId, ClassId) = default;
};

constexpr ExampleId example(std::size_t i) { return ExampleId{static_cast<std::uint32_t>(i)}; }
constexpr ClassId class_id(std::size_t k) { return ClassId{static_cast<std::uint32_t>(k)}; }

// Error hierarchy. Each maps onto one CLI exit code / HTTP status.
struct input_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct protocol_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct pool_exhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct order_exhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct contract_violation : std::logic_error {
  using std::logic_error::logic_error;
};

// Observed labels, keyed densely by example for O(1) lookup, with the
// labeling order kept alongside.
class LabeledSet {
 public:
  LabeledSet() = default;
  explicit LabeledSet(std::size_t pool_size) : label_of_(pool_size, kUnlabeled) {}

  std::size_t pool_size() const { return label_of_.size(); }
  std::size_t size() const { return history_.size(); }
  bool empty() const { return history_.empty(); }
  std::size_t unlabeled_count() const { return label_of_.size() - history_.size(); }

  bool contains(ExampleId x) const {
    return x.value < label_of_.size() && label_of_[x.value] != kUnlabeled;
  }

  // Raw label lookup for hot loops; kUnlabeled when absent.
  std::uint32_t raw(std::size_t i) const { return label_of_[i]; }

  ClassId at(ExampleId x) const {
    if (!contains(x)) throw input_error("example " + std::to_string(x.value) + " is not labeled");
    return ClassId{label_of_[x.value]};
  }

  // Labels are immutable once observed.
  void add(ExampleId x, ClassId c) {
    if (x.value >= label_of_.size())
      throw input_error("example " + std::to_string(x.value) + " outside pool of size " +
                        std::to_string(label_of_.size()));
    if (label_of_[x.value] != kUnlabeled)
      throw input_error("example " + std::to_string(x.value) + " is already labeled");
    label_of_[x.value] = c.value;
    history_.emplace_back(x, c);
  }

  const std::vector<std::pair<ExampleId, ClassId>>& entries() const { return history_; }

  std::size_t distinct_classes() const {
    std::vector<std::uint32_t> seen;
    for (const auto& [x, c] : history_) {
      if (std::find(seen.begin(), seen.end(), c.value) == seen.end()) seen.push_back(c.value);
    }
    return seen.size();
  }

  std::vector<ExampleId> unlabeled() const {
    std::vector<ExampleId> out;
    out.reserve(unlabeled_count());
    for (std::size_t i = 0; i < label_of_.size(); ++i)
      if (label_of_[i] == kUnlabeled) out.push_back(example(i));
    return out;
  }

  friend bool operator==(const LabeledSet&, const LabeledSet&) = default;

  static constexpr std::uint32_t kUnlabeled = 0xffffffffu;

 private:
  std::vector<std::uint32_t> label_of_;
  std::vector<std::pair<ExampleId, ClassId>> history_;
};

// Synchronous labeling oracle: returns the observed class of an example.
using Oracle = std::function<ClassId(ExampleId)>;

}  // namespace galaxy

template <>
struct std::hash<galaxy::ExampleId> {
  std::size_t operator()(galaxy::ExampleId x) const noexcept { return std::hash<std::uint32_t>{}(x.value); }
};
