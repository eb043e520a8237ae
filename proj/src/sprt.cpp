#include "attr/sprt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "attr/error.hpp"
#include "attr/shapley_sampling.hpp"
#include "attr/t_dist.hpp"

namespace attr {

SprtBoundaries SprtBoundaries::make(double alpha, double beta) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  if (!(beta > 0.0 && beta < 1.0)) throw InvalidArgument("beta must lie in (0, 1)");
  SprtBoundaries b{beta / (1.0 - alpha), (1.0 - beta) / alpha, alpha, beta};
  if (!(b.lower < 1.0 && 1.0 < b.upper))
    throw InvalidArgument("SPRT needs alpha + beta < 1 so that lower < 1 < upper");
  return b;
}

bool SprtState::all_rejected() const {
  return std::all_of(decisions.begin(), decisions.end(),
                     [](SprtDecision d) { return d == SprtDecision::kRejectNull; });
}

bool SprtState::any_accepted() const {
  return std::any_of(decisions.begin(), decisions.end(),
                     [](SprtDecision d) { return d == SprtDecision::kAcceptNull; });
}

std::size_t SprtState::leading_rejections() const {
  std::size_t k = 0;
  while (k < decisions.size() && decisions[k] == SprtDecision::kRejectNull) ++k;
  return k;
}

double sprt_likelihood_ratio(double T, double df) {
  if (!(df >= 1.0)) throw InvalidArgument("SPRT ratio needs df >= 1");
  if (std::isnan(T)) throw InvalidArgument("SPRT ratio needs a statistic");
  if (T > 50.0) return std::numeric_limits<double>::infinity();
  if (T < -50.0) return 0.0;
  if (T == 0.0) return 1.0;
  double log_ratio = noncentral_t_log_pdf(T, df, T) - noncentral_t_log_pdf(T, df, 0.0);
  return T > 0.0 ? std::exp(log_ratio) : std::exp(-log_ratio);
}

SprtState sprt_step(SprtState state, std::span<const double> ratios, const SprtBoundaries& bounds) {
  if (ratios.size() != state.decisions.size())
    throw InvalidArgument("ratio count does not match the number of ranks");
  for (std::size_t k = 0; k < ratios.size(); ++k) {
    if (state.decisions[k] != SprtDecision::kContinue) continue;
    double r = ratios[k];
    if (std::isnan(r)) throw InvalidArgument("SPRT ratio is NaN");
    state.last_ratio[k] = r;
    if (r >= bounds.upper) state.decisions[k] = SprtDecision::kRejectNull;
    else if (r <= bounds.lower) state.decisions[k] = SprtDecision::kAcceptNull;
  }
  return state;
}

namespace {

// Current estimates and their uncertainty from whichever estimator is in use.
class BatchSource {
 public:
  BatchSource(const MarginalValueFunction& v, const SprtOptions& opt, std::uint64_t seed)
      : v_(v), opt_(opt), kernel_(v, seed) {
    if (opt.estimator == ShapEstimator::kShapleySampling) {
      for (std::size_t j = 0; j < v.dim(); ++j) streams_.push_back(make_rng(seed, {j}));
      per_feature_.resize(v.dim());
    }
  }

  // Returns the number of new draws.
  std::size_t add_batch() {
    if (opt_.estimator == ShapEstimator::kKernelShap) {
      kernel_.add_samples(opt_.batch);
      return opt_.batch;
    }
    for (std::size_t j = 0; j < v_.dim(); ++j)
      for (double c : sample_marginal_contributions(v_, j, opt_.batch, streams_[j]))
        per_feature_[j].add(c);
    return opt_.batch * v_.dim();
  }

  AttributionSet current() {
    if (opt_.estimator == ShapEstimator::kKernelShap) {
      Vector phi = kernel_.fit();
      BootstrapSummary boot = kernel_.bootstrap(opt_.bootstrap_resamples);
      return AttributionSet::from_covariance(std::move(phi), std::move(boot.covariance),
                                             kernel_.sample_count(), opt_.ranking);
    }
    return AttributionSet::from_sampling(per_feature_, opt_.ranking);
  }

  std::size_t draws_per_feature() const {
    return opt_.estimator == ShapEstimator::kKernelShap ? kernel_.sample_count() : per_feature_[0].n;
  }

  std::vector<std::size_t> per_feature_counts() const {
    if (opt_.estimator == ShapEstimator::kKernelShap)
      return std::vector<std::size_t>(v_.dim(), kernel_.sample_count());
    std::vector<std::size_t> n;
    for (const auto& e : per_feature_) n.push_back(e.n);
    return n;
  }

 private:
  const MarginalValueFunction& v_;
  const SprtOptions& opt_;
  KernelShapEstimator kernel_;
  std::vector<Rng> streams_;
  std::vector<MeanVarEstimate> per_feature_;
};

}  // namespace

SprtRun sprt_shap(const MarginalValueFunction& v, const SprtOptions& options, std::uint64_t seed) {
  const std::size_t d = v.dim();
  if (options.K < 1 || options.K > d - 1) throw InvalidArgument("K must lie in [1, d - 1]");
  if (options.batch < 1) throw InvalidBudget("batch size must be positive");
  if (options.estimator == ShapEstimator::kShapleySampling && options.batch < 2)
    throw InvalidBudget("Shapley Sampling batches need at least 2 permutations");
  if (options.estimator == ShapEstimator::kKernelShap && options.batch < d + 2)
    throw InvalidBudget("KernelSHAP batches need at least d + 2 coalitions");
  SprtBoundaries bounds = SprtBoundaries::make(options.alpha, options.beta);

  BatchSource source(v, options, seed);
  SprtRun run{StableAttribution{}, SprtState(options.K)};
  SprtState& state = run.state;
  AttributionSet attrs;
  std::vector<std::size_t> order;

  while (true) {
    state.total_samples += source.add_batch();
    ++state.batches;
    attrs = source.current();
    order = attrs.order();

    std::vector<double> ratios(options.K, 1.0);
    for (std::size_t k = 1; k <= options.K; ++k) {
      if (state.decisions[k - 1] != SprtDecision::kContinue) continue;
      std::size_t hi = order[k - 1];
      std::size_t lo = order[k];
      WelchResult w = welch_statistic({attrs.ranked_value(hi), attrs.variance(hi), attrs.count(hi)},
                                      {attrs.ranked_value(lo), attrs.variance(lo), attrs.count(lo)},
                                      attrs.ranked_covariance(hi, lo), options.mode);
      ratios[k - 1] = sprt_likelihood_ratio(w.statistic, std::max(w.df, 1.0));
      state.last_statistic[k - 1] = w.statistic;
      state.last_df[k - 1] = w.df;
    }
    state = sprt_step(std::move(state), ratios, bounds);

    if (state.all_rejected()) {
      run.result.status = RunStatus::kConverged;
      break;
    }
    if (state.any_accepted()) {
      run.result.status = RunStatus::kAcceptedNull;
      break;
    }
    if (source.draws_per_feature() >= options.max_total) {
      run.result.status = RunStatus::kBudgetExhausted;
      break;
    }
  }

  StableAttribution& out = run.result;
  out.converged = out.status == RunStatus::kConverged;
  out.total_samples = state.total_samples;
  out.per_feature_samples = source.per_feature_counts();
  out.rounds = state.batches;
  out.ranking.order = order;
  out.ranking.K = state.leading_rejections();
  for (std::size_t k = 1; k <= options.K; ++k) {
    TestOutcome t;
    t.k = k;
    t.statistic = state.last_ratio[k - 1];
    t.df = state.last_df[k - 1];
    t.threshold = bounds.upper;
    t.rejected = state.decisions[k - 1] == SprtDecision::kRejectNull;
    out.ranking.steps.push_back(t);
    if (!t.rejected) break;
  }
  out.attrs = std::move(attrs);
  return run;
}

}  // namespace attr
