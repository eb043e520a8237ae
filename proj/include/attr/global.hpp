#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "attr/mean_var.hpp"
#include "attr/rank_verify.hpp"
#include "attr/rankshap.hpp"
#include "attr/shapley_sampling.hpp"
#include "attr/stable_attribution.hpp"
#include "attr/value_function.hpp"

namespace attr {

enum class AttributionOrigin { kExact, kEstimated };

// psi(i, j): local attribution of feature j at input i. NaN marks an entry
// that was not computed.
struct LocalAttributionMatrix {
  Matrix psi;
  AttributionOrigin origin = AttributionOrigin::kEstimated;
  std::vector<std::int64_t> input_ids;  // optional, one per row

  std::size_t inputs() const { return static_cast<std::size_t>(psi.rows()); }
  std::size_t features() const { return static_cast<std::size_t>(psi.cols()); }
};

// theta_j = mean of column j over its observed inputs, with the covariance
// of the means taken over shared inputs:
//   Cov(theta_j, theta_l) = |O_jl| / (n_j n_l) * Cov_{O_jl}(psi_j, psi_l).
class GlobalScores {
 public:
  struct Column {
    std::vector<std::size_t> ids;  // input ids, strictly increasing
    std::vector<double> values;
  };

  explicit GlobalScores(std::vector<Column> columns);

  std::size_t features() const { return columns_.size(); }
  const Vector& theta() const { return theta_; }
  double theta(std::size_t j) const { return theta_(static_cast<Eigen::Index>(j)); }
  std::size_t count(std::size_t j) const { return columns_[j].ids.size(); }
  std::vector<std::size_t> counts() const;
  // Sample variance of psi_j.
  double variance(std::size_t j) const;
  // Covariance of the estimates theta_j, theta_l.
  double covariance(std::size_t j, std::size_t l) const;
  Matrix covariance_matrix() const;

  AttributionSet attribution_set(RankingMode ranking = RankingMode::kSigned) const;

 private:
  std::vector<Column> columns_;
  Vector theta_;
};

GlobalScores global_scores(const LocalAttributionMatrix& psi);

// Sequential adjacent tests on the global ranking. Paired inputs give
// s^2 = (var_a + var_b - 2 cov) / n with df = n - 1.
VerifiedRanking verify_global_ranks(const GlobalScores& scores, double alpha,
                                    TestMode mode = TestMode::kInference,
                                    RankingMode ranking = RankingMode::kSigned);

// Local attributions on demand over a stream of inputs 0, 1, 2, ...
class LocalAttributionSource {
 public:
  virtual ~LocalAttributionSource() = default;
  virtual std::size_t dim() const = 0;
  // Inputs available; SIZE_MAX for an unbounded stream.
  virtual std::size_t inputs() const = 0;
  virtual double attribute(std::size_t input, std::size_t feature) const = 0;
  virtual Vector attribute_all(std::size_t input) const;
};

// Rows of a fixed matrix (NaN-free).
class MatrixAttributionSource final : public LocalAttributionSource {
 public:
  explicit MatrixAttributionSource(Matrix psi);
  std::size_t dim() const override { return static_cast<std::size_t>(psi_.cols()); }
  std::size_t inputs() const override { return static_cast<std::size_t>(psi_.rows()); }
  double attribute(std::size_t input, std::size_t feature) const override;

 private:
  Matrix psi_;
};

// Input i is a uniformly drawn row of `pool`; its attributions are Shapley
// Sampling estimates (signed phi, or xi with Contribution::kAbsolute) on a
// stream derived from (seed, i, j).
class SamplingAttributionSource final : public LocalAttributionSource {
 public:
  SamplingAttributionSource(const Model& model, const TabularDataset& pool,
                            const TabularDataset& background, std::size_t permutations,
                            std::uint64_t seed, Contribution contribution = Contribution::kSigned,
                            std::size_t samples_per_subset = kDefaultSamplesPerSubset);

  std::size_t dim() const override { return pool_.features(); }
  std::size_t inputs() const override;
  double attribute(std::size_t input, std::size_t feature) const override;
  Vector attribute_all(std::size_t input) const override;
  std::size_t row_of(std::size_t input) const;

 private:
  const Model& model_;
  const TabularDataset& pool_;
  const TabularDataset& background_;
  std::size_t permutations_;
  std::uint64_t seed_;
  Contribution contribution_;
  std::size_t m_;
};

enum class GlobalStrategy { kResample, kSprt };

struct GlobalTopKOptions {
  std::size_t K = 1;
  double alpha = 0.1;
  GlobalStrategy strategy = GlobalStrategy::kResample;
  // Resample: n0, max_n (inputs per feature), buffer, mode, max_rounds.
  SamplingBudget budget;
  // Sprt: inputs per batch and the cap on inputs.
  double beta = 0.2;
  std::size_t batch = 50;
  std::size_t max_total = 5'000;
  RankingMode ranking = RankingMode::kSigned;
};

// Top-K global ranking over inputs. Resample: features start on inputs
// [0, n0); a failed pair is re-estimated on fresh shared inputs at the
// planned count. Sprt: every feature sees the same batches of inputs and
// the per-rank decisions follow sprt-shap. total_samples counts local
// attribution evaluations.
StableAttribution global_topk(const LocalAttributionSource& source, const GlobalTopKOptions& options);

// Shapley Sampling estimate of xi_j, the permutation mean of
// |v(S + j) - v(S)|.
MeanVarEstimate unbiased_abs_contribution(const MarginalValueFunction& v, std::size_t j,
                                          std::size_t n, Rng& rng);

// CSV with header input_id,feature_0,...,feature_{d-1}; empty cells are
// missing entries. Values round-trip exactly.
void write_attributions(std::ostream& out, const LocalAttributionMatrix& psi);
LocalAttributionMatrix parse_attributions(const std::string& text,
                                          const std::string& source = "<memory>");
LocalAttributionMatrix load_attributions(const std::string& path);

}  // namespace attr
