#include "attr/lime.hpp"

#include <algorithm>
#include <cmath>

#include "attr/error.hpp"
#include "attr/lars.hpp"
#include "attr/t_dist.hpp"

namespace attr {

double lime_kernel_width(std::size_t d) { return 0.75 * std::sqrt(static_cast<double>(d)); }

double lime_weight(std::size_t distance, std::size_t d) {
  double D = static_cast<double>(distance) / static_cast<double>(d);
  double w = lime_kernel_width(d);
  return std::exp(-(D * D) / (w * w));
}

std::vector<LimeSample> lime_perturb(const Model& model, const Vector& x,
                                     const TabularDataset& background, std::size_t n, Rng& rng) {
  if (n < 1) throw InvalidArgument("lime_perturb needs n >= 1");
  const std::size_t d = static_cast<std::size_t>(x.size());
  if (background.features() != d) throw InvalidArgument("background width differs from input");

  std::vector<LimeSample> out;
  out.reserve(n);
  Matrix points(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < n; ++i) {
    LimeSample s{CoalitionMask(d), 1.0, 0.0};
    for (std::size_t j = 0; j < d; ++j) s.mask.set(j, coin(rng));
    auto row = background.row(uniform_index(rng, background.rows()));
    auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < d; ++j) {
      auto jj = static_cast<Eigen::Index>(j);
      points(ii, jj) = s.mask.test(j) ? x(jj) : row(jj);
    }
    s.weight = lime_weight(d - s.mask.count(), d);
    out.push_back(std::move(s));
  }
  Vector y = eval_model(model, points);
  for (std::size_t i = 0; i < n; ++i) out[i].label = y(static_cast<Eigen::Index>(i));
  return out;
}

WeightedDesign lime_design(const std::vector<LimeSample>& samples) {
  if (samples.empty()) throw InvalidArgument("no perturbation samples");
  const auto n = static_cast<Eigen::Index>(samples.size());
  const auto d = static_cast<Eigen::Index>(samples.front().mask.size());
  Matrix M(n, d);
  Vector w(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const LimeSample& s = samples[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j) M(i, j) = s.mask.test(static_cast<std::size_t>(j)) ? 1.0 : 0.0;
    w(i) = s.weight;
    y(i) = s.label;
  }
  double wsum = w.sum();
  Vector sw = w.cwiseSqrt();
  WeightedDesign out;
  out.Z.resize(n, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    double mu = w.dot(M.col(j)) / wsum;
    Vector col = sw.cwiseProduct((M.col(j).array() - mu).matrix());
    double norm = col.norm();
    out.Z.col(j) = norm > 1e-12 ? Vector(col / norm) : Vector::Zero(n);
  }
  double ybar = w.dot(y) / wsum;
  out.y = sw.cwiseProduct((y.array() - ybar).matrix());
  return out;
}

double slime_test_level(double alpha, std::size_t K) {
  return alpha / (2.0 * static_cast<double>(K));
}

namespace {

// One attempt on a fixed pool. Returns the steps taken; stops at the first
// step that is not significant.
std::vector<SelectionStep> run_steps(const std::vector<LimeSample>& pool, const SlimeOptions& opt) {
  WeightedDesign design = lime_design(pool);
  LarsPath path(design.Z, design.y);
  const double level = slime_test_level(opt.alpha, opt.K);
  const auto n = static_cast<Eigen::Index>(pool.size());

  std::vector<SelectionStep> steps;
  for (std::size_t k = 0; k < opt.K; ++k) {
    Vector c = path.correlations();
    std::vector<std::size_t> cand = path.inactive();
    std::stable_sort(cand.begin(), cand.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(c(a)) > std::abs(c(b)); });

    SelectionStep step;
    step.n = pool.size();
    step.feature = cand.front();
    if (cand.size() < 2) {
      step.significant = true;
    } else {
      step.runner_up = cand[1];
      step.has_runner_up = true;
      auto a = static_cast<Eigen::Index>(step.feature);
      auto b = static_cast<Eigen::Index>(step.runner_up);
      double sa = c(a) >= 0 ? 1.0 : -1.0;
      double sb = c(b) >= 0 ? 1.0 : -1.0;
      Vector D = (sa * design.Z.col(a) - sb * design.Z.col(b)).cwiseProduct(path.residual());
      double mean = D.mean();
      double var = (D.array() - mean).square().sum() / static_cast<double>(n - 1);
      double se = std::sqrt(var / static_cast<double>(n));
      if (se > 0) {
        step.statistic = mean / se;
        step.p_value = 1.0 - t_cdf(step.statistic, static_cast<double>(n - 1));
      } else {
        step.statistic = mean > 0 ? INFINITY : (mean < 0 ? -INFINITY : 0.0);
        step.p_value = mean > 0 ? 0.0 : (mean < 0 ? 1.0 : 0.5);
      }
      step.significant = step.p_value <= level + opt.tol;
    }
    steps.push_back(step);
    if (!step.significant) break;
    path.next();
  }
  return steps;
}

}  // namespace

SelectionTrace slime_select(const Model& model, const Vector& x, const TabularDataset& background,
                            const SlimeOptions& opt, Rng& rng) {
  const std::size_t d = static_cast<std::size_t>(x.size());
  if (opt.K < 1 || opt.K > d) throw InvalidArgument("K must lie in [1, d]");
  if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  if (opt.n0 < 2 || opt.max_n < opt.n0) throw InvalidBudget("need 2 <= n0 <= max_n");
  if (!(opt.tol >= 0.0)) throw InvalidArgument("tol must be non-negative");

  SelectionTrace trace;
  std::vector<LimeSample> pool = lime_perturb(model, x, background, opt.n0, rng);
  while (true) {
    trace.pool_sizes.push_back(pool.size());
    trace.per_step = run_steps(pool, opt);
    trace.ordered_features.clear();
    for (const auto& s : trace.per_step)
      if (s.significant) trace.ordered_features.push_back(s.feature);
    if (trace.ordered_features.size() == opt.K) {
      trace.converged = true;
      return trace;
    }
    if (pool.size() >= opt.max_n) return trace;
    std::size_t target = std::min(2 * pool.size(), opt.max_n);
    auto extra = lime_perturb(model, x, background, target - pool.size(), rng);
    pool.insert(pool.end(), std::make_move_iterator(extra.begin()),
                std::make_move_iterator(extra.end()));
  }
}

std::vector<std::size_t> lime_select(const std::vector<LimeSample>& samples, std::size_t K) {
  WeightedDesign design = lime_design(samples);
  LarsPath path(design.Z, design.y);
  if (K < 1 || K > path.dim()) throw InvalidArgument("K must lie in [1, d]");
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < K; ++k) out.push_back(path.next());
  return out;
}

}  // namespace attr
