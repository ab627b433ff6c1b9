#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "galaxy/types.hpp"

namespace galaxy {

enum class Provenance { bisection, fallback_random, fallback_confidence, seed_round, one_shot };

constexpr std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::bisection: return "bisection";
    case Provenance::fallback_random: return "fallback-random";
    case Provenance::fallback_confidence: return "fallback-confidence";
    case Provenance::seed_round: return "seed-round";
    case Provenance::one_shot: return "one-shot";
  }
  return "unknown";
}

inline Provenance provenance_from_string(std::string_view s) {
  for (auto p : {Provenance::bisection, Provenance::fallback_random, Provenance::fallback_confidence,
                 Provenance::seed_round, Provenance::one_shot})
    if (to_string(p) == s) return p;
  throw format_error("unknown provenance tag '" + std::string(s) + "'");
}

// Examples chosen in one round, in query order.
struct Batch {
  std::vector<ExampleId> ids;
  std::vector<Provenance> provenance;
  bool clipped = false;  // fewer unlabeled examples than requested

  std::size_t size() const { return ids.size(); }
  void push(ExampleId x, Provenance p) {
    ids.push_back(x);
    provenance.push_back(p);
  }
};

}  // namespace galaxy
