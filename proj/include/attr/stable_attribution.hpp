#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "attr/rank_verify.hpp"

namespace attr {

enum class RunStatus {
  kConverged,
  kBudgetExhausted,
  kAcceptedNull,  // sequential test accepted H0 on some rank
};

inline std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::kConverged: return "converged";
    case RunStatus::kBudgetExhausted: return "budget_exhausted";
    case RunStatus::kAcceptedNull: return "accepted_null";
  }
  return "unknown";
}

// Output of the top-K procedures. `converged` implies ranking.K >= the
// requested K.
struct StableAttribution {
  AttributionSet attrs;
  VerifiedRanking ranking;
  std::size_t total_samples = 0;                  // every draw made, discarded ones included
  std::vector<std::size_t> per_feature_samples;   // draws behind the final estimates
  bool converged = false;
  RunStatus status = RunStatus::kBudgetExhausted;
  std::size_t rounds = 0;
};

}  // namespace attr
