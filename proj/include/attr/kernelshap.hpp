#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "attr/rng.hpp"
#include "attr/shapley_sampling.hpp"
#include "attr/value_function.hpp"

namespace attr {

struct CoalitionSample {
  CoalitionMask mask;
  double value = 0.0;
  // Regression weight. Coalitions drawn from the Shapley kernel
  // distribution carry weight 1; enumerated coalitions carry the exact
  // kernel weight.
  double kernel_weight = 1.0;
};

inline constexpr std::size_t kDefaultBootstrapResamples = 250;

inline std::size_t default_coalition_budget(std::size_t d) { return 2 * d + 2048; }

// Shapley kernel weight (d - 1) / (C(d, s) s (d - s)) for a coalition of size s.
double shapley_kernel_weight(std::size_t d, std::size_t s);

// P(|S| = s) for s = 1 .. d-1, proportional to (d - 1) / (s (d - s)).
// Index 0 holds s = 1.
std::vector<double> coalition_size_probabilities(std::size_t d);

// Draws n masks: size from the kernel size law, members uniform given size.
// Throws InvalidBudget when n < d + 2.
std::vector<CoalitionMask> sample_coalitions(std::size_t d, std::size_t n, Rng& rng);

// Evaluates v(S) for each mask with fresh imputation rows (weight 1).
std::vector<CoalitionSample> evaluate_coalitions(const MarginalValueFunction& v,
                                                 const std::vector<CoalitionMask>& masks,
                                                 Rng& rng);

// Every non-trivial coalition with its exact kernel weight.
std::vector<CoalitionSample> enumerate_coalitions(const Game& game, std::size_t d);

// Weighted least squares subject to sum(phi) = v_full - v_empty, solved by
// eliminating the last coefficient. Throws SingularDesign when the reduced
// normal matrix is rank deficient.
Vector kernelshap_fit(std::span<const CoalitionSample> samples, double v_empty, double v_full);

struct BootstrapSummary {
  Matrix covariance;
  std::size_t skipped = 0;  // singular resamples that were redrawn
};

// Covariance of B refits on resampled (with replacement) coalition lists.
BootstrapSummary bootstrap_covariance(std::span<const CoalitionSample> samples, double v_empty,
                                      double v_full, std::size_t B, Rng& rng);

// Growing pool of evaluated coalitions for one explained input.
class KernelShapEstimator {
 public:
  KernelShapEstimator(const MarginalValueFunction& v, std::uint64_t seed);

  void add_samples(std::size_t n);
  std::size_t sample_count() const { return samples_.size(); }
  const std::vector<CoalitionSample>& samples() const { return samples_; }
  double v_empty() const { return v_empty_; }
  double v_full() const { return v_full_; }

  Vector fit() const;
  BootstrapSummary bootstrap(std::size_t B);

 private:
  const MarginalValueFunction& v_;
  Rng sample_rng_;
  Rng bootstrap_rng_;
  double v_empty_;
  double v_full_;
  std::vector<CoalitionSample> samples_;
};

}  // namespace attr
