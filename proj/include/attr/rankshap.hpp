#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "attr/rank_verify.hpp"
#include "attr/stable_attribution.hpp"
#include "attr/value_function.hpp"

namespace attr {

enum class AllocationScheme { kEqual, kVarianceProportional };

struct SamplingBudget {
  std::size_t n0 = 100;
  std::size_t max_n = 10'000;
  double buffer_c = 1.1;
  AllocationScheme scheme = AllocationScheme::kVarianceProportional;
  TestMode mode = TestMode::kInference;
  // Guard on retest rounds; reaching it ends the run unconverged.
  std::size_t max_rounds = 1'000;

  // Throws InvalidBudget unless 2 <= n0 <= max_n and buffer_c in [1, 2].
  void validate() const;
};

struct SamplePlan {
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

// Permutation counts at which the pair test is expected to reject.
// Variances are per-draw (not of the mean).
//   equal:        n_a = n_b = ceil((t / delta)^2 (var_a + var_b))
//   proportional: n_x = ceil(2 (t / delta)^2 var_x)
// Reproducibility mode doubles the unrounded sizes.
SamplePlan plan_sample_sizes_for_quantile(double delta, double var_a, double var_b, double t,
                                          AllocationScheme scheme, TestMode mode);

// Same with t = t_{1 - alpha/2, df}.
SamplePlan plan_sample_sizes(double delta, double var_a, double var_b, double df, double alpha,
                             AllocationScheme scheme, TestMode mode);

struct RankShapTrace {
  // Times each feature was re-estimated from scratch after a failed test.
  std::vector<std::size_t> resample_generation;
};

// Adaptive top-K Shapley Sampling. Each feature draws from its own stream
// derive_seed(seed, {j}); a failed test k re-estimates the two features at
// ranks k and k+1 from scratch with planned sizes.
StableAttribution rankshap(const MarginalValueFunction& v, std::size_t K, double alpha,
                           const SamplingBudget& budget, std::uint64_t seed,
                           RankingMode ranking = RankingMode::kSigned,
                           RankShapTrace* trace = nullptr);

}  // namespace attr
