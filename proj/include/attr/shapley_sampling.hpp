#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "attr/mean_var.hpp"
#include "attr/rng.hpp"
#include "attr/value_function.hpp"

namespace attr {

enum class Imputation {
  kSampled,     // m rows drawn with replacement per coalition
  kExhaustive,  // every background row once
};

enum class Contribution {
  kSigned,    // v(S + j) - v(S)
  kAbsolute,  // |v(S + j) - v(S)|
};

// One permutation draw for feature j. Both v(S + j) and v(S) use the same
// imputation rows. Consumes the permutation first, then the m row indices.
double marginal_contribution(const MarginalValueFunction& v, std::size_t j, Rng& rng,
                             Imputation imputation = Imputation::kSampled);

// `n` i.i.d. marginal contributions for feature j (batched model calls).
std::vector<double> sample_marginal_contributions(const MarginalValueFunction& v, std::size_t j,
                                                  std::size_t n, Rng& rng,
                                                  Imputation imputation = Imputation::kSampled);

// Shapley Sampling estimate of phi_j from n permutations. Throws
// InvalidBudget when n < 2.
MeanVarEstimate shapley_sampling(const MarginalValueFunction& v, std::size_t j, std::size_t n,
                                 Rng& rng, Imputation imputation = Imputation::kSampled,
                                 Contribution contribution = Contribution::kSigned);

// Independent per-feature streams: feature j uses derive_seed(seed, {j}).
std::vector<MeanVarEstimate> shapley_sampling_all(const MarginalValueFunction& v, std::size_t n,
                                                  std::uint64_t seed,
                                                  Imputation imputation = Imputation::kSampled);

inline constexpr std::size_t kMaxExactFeatures = 12;

using Game = std::function<double(const CoalitionMask&)>;

// Subset-weighted Shapley values over all 2^d coalitions (d <= 12).
Vector exact_shapley(const Game& game, std::size_t d);
// Same quantity as an average over all d! permutations (d <= 8).
Vector exact_shapley_by_permutations(const Game& game, std::size_t d);
// Permutation average of |v(S + j) - v(S)| (subset form, d <= 12).
Vector exact_abs_contribution(const Game& game, std::size_t d);

// exact_shapley on the exhaustive-background value function.
Vector exact_shapley(const MarginalValueFunction& v);

}  // namespace attr
