#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "attr/dataset.hpp"
#include "attr/model.hpp"
#include "attr/rng.hpp"
#include "attr/value_function.hpp"

namespace attr {

struct LimeSample {
  CoalitionMask mask;  // bit j on: feature j keeps the explained value
  double weight = 1.0;
  double label = 0.0;
};

// Proximity kernel width 0.75 * sqrt(d).
double lime_kernel_width(std::size_t d);
// exp(-(distance / d)^2 / width^2) for a mask with `distance` bits off.
double lime_weight(std::size_t distance, std::size_t d);

// n tabular perturbations of x: mask bits i.i.d. Bernoulli(1/2), masked-off
// features taken from one uniformly drawn background row.
std::vector<LimeSample> lime_perturb(const Model& model, const Vector& x,
                                     const TabularDataset& background, std::size_t n, Rng& rng);

// Kernel-weighted, column-standardized design and response:
//   Z_ij = sqrt(w_i) (m_ij - mu_j) / ||.||,  y_i = sqrt(w_i) (label_i - ybar)
// with weighted means. Constant columns stay zero.
struct WeightedDesign {
  Matrix Z;
  Vector y;
};
WeightedDesign lime_design(const std::vector<LimeSample>& samples);

struct SelectionStep {
  std::size_t feature = 0;
  std::size_t runner_up = 0;
  bool has_runner_up = false;
  double statistic = 0.0;  // paired t of |corr| winner minus runner-up
  double p_value = 0.0;    // one-sided
  std::size_t n = 0;       // pool size behind the step
  bool significant = false;
};

struct SelectionTrace {
  std::vector<std::size_t> ordered_features;  // confident selections in order
  std::vector<SelectionStep> per_step;        // tests from the final pool
  std::vector<std::size_t> pool_sizes;        // pool size at every attempt
  bool converged = false;
};

struct SlimeOptions {
  std::size_t K = 1;
  double alpha = 0.1;
  std::size_t n0 = 1'000;
  std::size_t max_n = 100'000;
  double tol = 1e-4;
};

// Per-test level alpha / (2K).
double slime_test_level(double alpha, std::size_t K);

// Runs K LARS steps on one growing perturbation pool. At each step the
// winner's |correlation| is tested against the runner-up with a paired t
// test on per-sample contributions; a step is accepted when the one-sided
// p-value is at most alpha / (2K) + tol. Any failure doubles the pool (up
// to max_n) and restarts from step 1.
SelectionTrace slime_select(const Model& model, const Vector& x, const TabularDataset& background,
                            const SlimeOptions& options, Rng& rng);

// Plain K-LASSO: the first K features LARS adds on a fixed pool.
std::vector<std::size_t> lime_select(const std::vector<LimeSample>& samples, std::size_t K);

}  // namespace attr
