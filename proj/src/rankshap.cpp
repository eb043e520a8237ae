#include "attr/rankshap.hpp"

#include <algorithm>
#include <cmath>

#include "attr/error.hpp"
#include "attr/shapley_sampling.hpp"
#include "attr/t_dist.hpp"

namespace attr {

void SamplingBudget::validate() const {
  if (n0 < 2) throw InvalidBudget("n0 must be at least 2");
  if (max_n < n0) throw InvalidBudget("max_n must be at least n0");
  if (!(buffer_c >= 1.0 && buffer_c <= 2.0)) throw InvalidBudget("buffer must lie in [1, 2]");
  if (max_rounds < 1) throw InvalidBudget("max_rounds must be positive");
}

namespace {

std::size_t ceil_count(double x) {
  if (!std::isfinite(x) || x >= 1e18) return static_cast<std::size_t>(1e18);
  return static_cast<std::size_t>(std::ceil(x));
}

}  // namespace

SamplePlan plan_sample_sizes_for_quantile(double delta, double var_a, double var_b, double t,
                                          AllocationScheme scheme, TestMode mode) {
  if (!(delta > 0.0)) throw NonPositiveGap("sample-size planning needs a positive gap");
  if (!(var_a >= 0.0) || !(var_b >= 0.0)) throw InvalidArgument("variances must be non-negative");
  double scale = (t / delta) * (t / delta);
  double factor = mode == TestMode::kReproducibility ? 2.0 : 1.0;
  if (scheme == AllocationScheme::kEqual) {
    std::size_t n = ceil_count(factor * scale * (var_a + var_b));
    return {n, n};
  }
  return {ceil_count(factor * 2.0 * scale * var_a), ceil_count(factor * 2.0 * scale * var_b)};
}

SamplePlan plan_sample_sizes(double delta, double var_a, double var_b, double df, double alpha,
                             AllocationScheme scheme, TestMode mode) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  return plan_sample_sizes_for_quantile(delta, var_a, var_b, t_quantile(1.0 - alpha / 2.0, df),
                                        scheme, mode);
}

StableAttribution rankshap(const MarginalValueFunction& v, std::size_t K, double alpha,
                           const SamplingBudget& budget, std::uint64_t seed, RankingMode ranking,
                           RankShapTrace* trace) {
  budget.validate();
  const std::size_t d = v.dim();
  if (K < 1 || K > d - 1) throw InvalidArgument("K must lie in [1, d - 1]");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");

  std::vector<Rng> streams;
  streams.reserve(d);
  for (std::size_t j = 0; j < d; ++j) streams.push_back(make_rng(seed, {j}));

  StableAttribution out;
  std::vector<MeanVarEstimate> est(d);
  std::vector<std::size_t> generation(d, 0);
  for (std::size_t j = 0; j < d; ++j) {
    est[j] = shapley_sampling(v, j, budget.n0, streams[j]);
    out.total_samples += budget.n0;
  }

  auto resample = [&](std::size_t j, std::size_t n) {
    est[j] = shapley_sampling(v, j, n, streams[j]);
    out.total_samples += n;
    ++generation[j];
  };

  out.status = RunStatus::kBudgetExhausted;
  while (true) {
    AttributionSet attrs = AttributionSet::from_sampling(est, ranking);
    std::vector<std::size_t> order = attrs.order();

    std::optional<TestOutcome> failed;
    for (std::size_t k = 1; k <= K; ++k) {
      TestOutcome t = test_adjacent(attrs, order, k, alpha, budget.mode);
      if (!t.rejected) {
        failed = t;
        break;
      }
    }
    if (!failed) {
      out.converged = true;
      out.status = RunStatus::kConverged;
      break;
    }
    std::size_t a = order[failed->k - 1];
    std::size_t b = order[failed->k];
    if ((est[a].n >= budget.max_n && est[b].n >= budget.max_n) || out.rounds >= budget.max_rounds)
      break;

    std::size_t n_a = budget.max_n;
    std::size_t n_b = budget.max_n;
    double delta = attrs.ranked_value(a) - attrs.ranked_value(b);
    double var_a = est[a].variance();
    double var_b = est[b].variance();
    if (delta > 0.0 && var_a + var_b > 0.0) {
      double t = t_quantile(1.0 - alpha / 2.0, failed->df);
      SamplePlan plan = plan_sample_sizes_for_quantile(delta, var_a, var_b, t, budget.scheme, budget.mode);
      n_a = ceil_count(budget.buffer_c * static_cast<double>(plan.n_a));
      n_b = ceil_count(budget.buffer_c * static_cast<double>(plan.n_b));
    }
    n_a = std::min(std::max(n_a, est[a].n), budget.max_n);
    n_b = std::min(std::max(n_b, est[b].n), budget.max_n);
    resample(a, n_a);
    resample(b, n_b);
    ++out.rounds;
  }

  out.attrs = AttributionSet::from_sampling(est, ranking);
  out.ranking = verify_ranks(out.attrs, alpha, budget.mode);
  for (const auto& e : est) out.per_feature_samples.push_back(e.n);
  if (trace) trace->resample_generation = generation;
  return out;
}

}  // namespace attr
