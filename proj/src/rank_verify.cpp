#include "attr/rank_verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "attr/error.hpp"
#include "attr/t_dist.hpp"

namespace attr {

AttributionSet AttributionSet::from_sampling(std::vector<MeanVarEstimate> per_feature,
                                             RankingMode ranking) {
  if (per_feature.size() < 2) throw InvalidArgument("need at least two features");
  AttributionSet out;
  out.estimates_.resize(static_cast<Eigen::Index>(per_feature.size()));
  for (std::size_t j = 0; j < per_feature.size(); ++j) {
    if (per_feature[j].n < 2)
      throw InvalidArgument("feature " + std::to_string(j) + " has fewer than two draws");
    out.estimates_(static_cast<Eigen::Index>(j)) = per_feature[j].mean;
  }
  out.per_feature_ = std::move(per_feature);
  out.ranking_ = ranking;
  return out;
}

AttributionSet AttributionSet::from_covariance(Vector estimates, Matrix covariance, std::size_t n,
                                               RankingMode ranking) {
  if (estimates.size() < 2) throw InvalidArgument("need at least two features");
  if (covariance.rows() != estimates.size() || covariance.cols() != estimates.size())
    throw InvalidArgument("covariance shape does not match estimates");
  std::vector<std::size_t> counts(static_cast<std::size_t>(estimates.size()), n);
  return from_moments(std::move(estimates), std::move(covariance), std::move(counts), ranking);
}

AttributionSet AttributionSet::from_moments(Vector estimates, Matrix covariance,
                                            std::vector<std::size_t> counts, RankingMode ranking) {
  if (estimates.size() < 2) throw InvalidArgument("need at least two features");
  if (covariance.rows() != estimates.size() || covariance.cols() != estimates.size())
    throw InvalidArgument("covariance shape does not match estimates");
  if (counts.size() != static_cast<std::size_t>(estimates.size()))
    throw InvalidArgument("one count per feature required");
  for (std::size_t n : counts)
    if (n < 2) throw InvalidArgument("covariance form needs n >= 2");
  AttributionSet out;
  out.estimates_ = std::move(estimates);
  out.covariance_ = std::move(covariance);
  out.counts_ = std::move(counts);
  out.ranking_ = ranking;
  return out;
}

double AttributionSet::ranked_value(std::size_t j) const {
  double v = estimate(j);
  return ranking_ == RankingMode::kAbsolute ? std::abs(v) : v;
}

double AttributionSet::variance(std::size_t j) const {
  if (covariance_) {
    auto jj = static_cast<Eigen::Index>(j);
    return std::max(0.0, (*covariance_)(jj, jj));
  }
  double v = per_feature_[j].variance_of_mean();
  return std::max(0.0, v);
}

std::size_t AttributionSet::count(std::size_t j) const {
  return covariance_ ? counts_[j] : per_feature_[j].n;
}

double AttributionSet::ranked_covariance(std::size_t j, std::size_t k) const {
  if (!covariance_ || j == k) return j == k ? variance(j) : 0.0;
  double c = (*covariance_)(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
  if (ranking_ == RankingMode::kAbsolute) {
    double sj = estimate(j) < 0 ? -1.0 : 1.0;
    double sk = estimate(k) < 0 ? -1.0 : 1.0;
    c *= sj * sk;
  }
  return c;
}

std::vector<std::size_t> AttributionSet::order() const {
  std::vector<std::size_t> idx(size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [this](std::size_t a, std::size_t b) { return ranked_value(a) > ranked_value(b); });
  return idx;
}

WelchResult welch_statistic(const WelchInput& a, const WelchInput& b, double cov, TestMode mode) {
  if (!std::isfinite(a.variance) || !std::isfinite(b.variance) || a.variance < 0 || b.variance < 0)
    throw InvalidArgument("Welch test needs finite non-negative variances");
  if (a.n < 2 || b.n < 2) throw InvalidArgument("Welch test needs n >= 2 on both sides");

  WelchResult out;
  double var = std::max(0.0, a.variance + b.variance - 2.0 * cov);
  if (mode == TestMode::kReproducibility) var *= 2.0;
  double delta = a.estimate - b.estimate;

  if (a.n == b.n) {
    out.df = static_cast<double>(a.n - 1);
  } else {
    double den = a.variance * a.variance / static_cast<double>(a.n - 1) +
                 b.variance * b.variance / static_cast<double>(b.n - 1);
    double num = (a.variance + b.variance) * (a.variance + b.variance);
    out.df = den > 0 ? num / den : static_cast<double>(std::min(a.n, b.n) - 1);
    out.df = std::max(out.df, 1.0);
  }

  if (var == 0.0) {
    if (delta == 0.0) {
      out.statistic = 0.0;
    } else {
      out.statistic = delta > 0 ? std::numeric_limits<double>::infinity()
                                : -std::numeric_limits<double>::infinity();
      out.degenerate = true;
    }
    return out;
  }
  out.statistic = delta / std::sqrt(var);
  return out;
}

TestOutcome test_adjacent(const AttributionSet& attrs, const std::vector<std::size_t>& order,
                          std::size_t k, double alpha, TestMode mode) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  if (k < 1 || k >= order.size()) throw InvalidArgument("rank index out of range");
  std::size_t hi = order[k - 1];
  std::size_t lo = order[k];
  WelchInput a{attrs.ranked_value(hi), attrs.variance(hi), attrs.count(hi)};
  WelchInput b{attrs.ranked_value(lo), attrs.variance(lo), attrs.count(lo)};
  WelchResult w = welch_statistic(a, b, attrs.ranked_covariance(hi, lo), mode);

  TestOutcome t;
  t.k = k;
  t.statistic = w.statistic;
  t.df = w.df;
  t.degenerate = w.degenerate;
  t.threshold = t_quantile(1.0 - alpha / 2.0, w.df);
  t.rejected = t.statistic >= t.threshold;
  return t;
}

VerifiedRanking verify_ranks(const AttributionSet& attrs, double alpha, TestMode mode) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  VerifiedRanking out;
  out.order = attrs.order();
  for (std::size_t k = 1; k < out.order.size(); ++k) {
    TestOutcome t = test_adjacent(attrs, out.order, k, alpha, mode);
    out.steps.push_back(t);
    if (!t.rejected) break;
    ++out.K;
  }
  return out;
}

bool top_k_correct(const std::vector<std::size_t>& order, const std::vector<std::size_t>& truth,
                   std::size_t K) {
  if (K > order.size() || K > truth.size()) throw InvalidArgument("K exceeds ranking length");
  return std::equal(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(K), truth.begin());
}

std::vector<std::size_t> rank_order(const Vector& values, RankingMode ranking) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto key = [&](std::size_t j) {
    double v = values(static_cast<Eigen::Index>(j));
    return ranking == RankingMode::kAbsolute ? std::abs(v) : v;
  };
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
  return idx;
}

}  // namespace attr
