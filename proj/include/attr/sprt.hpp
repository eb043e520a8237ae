#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "attr/kernelshap.hpp"
#include "attr/rank_verify.hpp"
#include "attr/stable_attribution.hpp"
#include "attr/value_function.hpp"

namespace attr {

struct SprtBoundaries {
  double lower = 0.0;  // beta / (1 - alpha)
  double upper = 0.0;  // (1 - beta) / alpha
  double alpha = 0.0;
  double beta = 0.0;

  static SprtBoundaries make(double alpha, double beta);
};

enum class SprtDecision { kContinue, kRejectNull, kAcceptNull };

struct SprtState {
  std::vector<SprtDecision> decisions;  // one per rank position 1..K
  std::vector<double> last_ratio;       // frozen once the decision latches
  std::vector<double> last_statistic;   // studentized T behind last_ratio
  std::vector<double> last_df;
  std::size_t total_samples = 0;
  std::size_t batches = 0;

  explicit SprtState(std::size_t K = 0)
      : decisions(K, SprtDecision::kContinue),
        last_ratio(K, 1.0),
        last_statistic(K, 0.0),
        last_df(K, 0.0) {}

  bool all_rejected() const;
  bool any_accepted() const;
  std::size_t leading_rejections() const;
};

// Studentized likelihood ratio for H1: Delta > 0 against H0: Delta <= 0,
// with each hypothesis at its maximum-likelihood noncentrality. For T >= 0
// this is f_nct(T; df, T) / f_t(T; df); for T < 0 the roles swap. |T| > 50
// saturates to +inf (T > 0) or 0.
double sprt_likelihood_ratio(double T, double df);

// ratio >= upper rejects, ratio <= lower accepts. Latched ranks ignore
// their entry in `ratios`.
SprtState sprt_step(SprtState state, std::span<const double> ratios, const SprtBoundaries& bounds);

enum class ShapEstimator { kKernelShap, kShapleySampling };

struct SprtOptions {
  std::size_t K = 1;
  double alpha = 0.1;
  double beta = 0.2;
  // Coalitions per batch (KernelSHAP) or permutations per feature per batch
  // (Shapley Sampling).
  std::size_t batch = 500;
  // Cap on coalitions (KernelSHAP) or on permutations per feature.
  std::size_t max_total = 50'000;
  ShapEstimator estimator = ShapEstimator::kKernelShap;
  std::size_t bootstrap_resamples = kDefaultBootstrapResamples;
  RankingMode ranking = RankingMode::kSigned;
  TestMode mode = TestMode::kInference;
};

struct SprtRun {
  StableAttribution result;
  SprtState state;
};

// Sequential top-K verification that keeps every draw: each batch extends
// the sample, refits, and updates the per-rank SPRT decisions. Decisions
// attach to rank positions of the current ordering.
SprtRun sprt_shap(const MarginalValueFunction& v, const SprtOptions& options, std::uint64_t seed);

}  // namespace attr
