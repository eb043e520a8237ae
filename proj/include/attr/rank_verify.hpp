#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "attr/dataset.hpp"
#include "attr/mean_var.hpp"

namespace attr {

enum class RankingMode { kSigned, kAbsolute };

// Reproducibility inflates the standard error of each difference by sqrt(2)
// (and sample-size plans by 2).
enum class TestMode { kInference, kReproducibility };

// Attribution estimates plus the uncertainty needed to test their order.
// Sampling form: one MeanVarEstimate per feature, independent across
// features. Covariance form: a d x d covariance of the estimates that were
// all fit from the same n samples.
class AttributionSet {
 public:
  AttributionSet() = default;

  static AttributionSet from_sampling(std::vector<MeanVarEstimate> per_feature,
                                      RankingMode ranking = RankingMode::kSigned);
  static AttributionSet from_covariance(Vector estimates, Matrix covariance, std::size_t n,
                                        RankingMode ranking = RankingMode::kSigned);
  // Covariance form with a separate sample count per feature.
  static AttributionSet from_moments(Vector estimates, Matrix covariance,
                                     std::vector<std::size_t> counts,
                                     RankingMode ranking = RankingMode::kSigned);

  std::size_t size() const { return static_cast<std::size_t>(estimates_.size()); }
  RankingMode ranking() const { return ranking_; }
  bool has_covariance() const { return covariance_.has_value(); }

  const Vector& estimates() const { return estimates_; }
  const std::vector<MeanVarEstimate>& per_feature() const { return per_feature_; }
  const std::optional<Matrix>& covariance() const { return covariance_; }

  double estimate(std::size_t j) const { return estimates_(static_cast<Eigen::Index>(j)); }
  // |estimate| in absolute mode, the estimate otherwise.
  double ranked_value(std::size_t j) const;
  double variance(std::size_t j) const;  // variance of the estimate itself
  std::size_t count(std::size_t j) const;
  // Covariance of the ranked values (delta-method sign flip in absolute mode).
  double ranked_covariance(std::size_t j, std::size_t k) const;

  // Features by ranked value, descending; ties broken by lower index first.
  std::vector<std::size_t> order() const;

 private:
  Vector estimates_;
  std::vector<MeanVarEstimate> per_feature_;
  std::optional<Matrix> covariance_;
  std::vector<std::size_t> counts_;
  RankingMode ranking_ = RankingMode::kSigned;
};

struct WelchInput {
  double estimate = 0.0;
  double variance = 0.0;  // variance of the estimate (squared standard error)
  std::size_t n = 0;
};

struct WelchResult {
  double statistic = 0.0;
  double df = 0.0;
  bool degenerate = false;  // zero standard error with a nonzero difference
};

// T = (a - b) / s with s^2 = Var(a) + Var(b) - 2 cov. Equal counts give
// df = n - 1; unequal counts use Welch-Satterthwaite.
WelchResult welch_statistic(const WelchInput& a, const WelchInput& b, double cov, TestMode mode);

struct TestOutcome {
  std::size_t k = 0;  // 1-based: compares rank k with rank k + 1
  double statistic = 0.0;
  double df = 0.0;
  double threshold = 0.0;
  bool rejected = false;
  bool degenerate = false;
};

struct VerifiedRanking {
  std::size_t K = 0;
  std::vector<std::size_t> order;
  std::vector<TestOutcome> steps;
};

// One-sided test of H0: value(order[k-1]) <= value(order[k]) at level
// alpha / 2, i.e. reject when T >= t_{1 - alpha/2, df}.
TestOutcome test_adjacent(const AttributionSet& attrs, const std::vector<std::size_t>& order,
                          std::size_t k, double alpha, TestMode mode);

// Sequential verification: test k = 1, 2, ... until the first failure.
VerifiedRanking verify_ranks(const AttributionSet& attrs, double alpha,
                             TestMode mode = TestMode::kInference);

// True when the first K positions of `order` match `truth`.
bool top_k_correct(const std::vector<std::size_t>& order, const std::vector<std::size_t>& truth,
                   std::size_t K);

// Reference order of exact values under a ranking mode (ties by index).
std::vector<std::size_t> rank_order(const Vector& values, RankingMode ranking);

}  // namespace attr
