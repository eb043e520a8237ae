#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "attr/dataset.hpp"
#include "attr/model.hpp"
#include "attr/rng.hpp"

namespace attr {

// Subset of [d]; bit j set means feature j keeps the explained input's value.
class CoalitionMask {
 public:
  explicit CoalitionMask(std::size_t d, bool value = false) : bits_(d, value ? 1 : 0) {}

  static CoalitionMask empty(std::size_t d) { return CoalitionMask(d, false); }
  static CoalitionMask full(std::size_t d) { return CoalitionMask(d, true); }
  static CoalitionMask from_bits(std::uint64_t bits, std::size_t d);

  std::size_t size() const { return bits_.size(); }
  bool test(std::size_t j) const { return bits_[j] != 0; }
  void set(std::size_t j, bool on = true) { bits_[j] = on ? 1 : 0; }
  std::size_t count() const;
  bool is_empty() const { return count() == 0; }
  bool is_full() const { return count() == size(); }

  friend bool operator==(const CoalitionMask&, const CoalitionMask&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

inline constexpr std::size_t kDefaultSamplesPerSubset = 10;

// v(S) under marginal imputation: features in S come from x, the rest from
// background rows drawn uniformly with replacement.
class MarginalValueFunction {
 public:
  MarginalValueFunction(const Model& model, Vector x, const TabularDataset& background,
                        std::size_t samples_per_subset = kDefaultSamplesPerSubset);

  std::size_t dim() const { return static_cast<std::size_t>(x_.size()); }
  std::size_t samples_per_subset() const { return m_; }
  const Model& model() const { return model_; }
  const Vector& input() const { return x_; }
  const TabularDataset& background() const { return background_; }

  // Monte Carlo v(S) with m fresh imputation rows.
  double operator()(const CoalitionMask& s, Rng& rng) const;
  // Deterministic v(S): each background row used once.
  double exhaustive(const CoalitionMask& s) const;
  // v(S) averaged over the listed background rows.
  double with_rows(const CoalitionMask& s, const std::vector<std::size_t>& rows) const;

  double full_value() const;
  double empty_value_exhaustive() const;

  // Writes x_S joined with the given background row into `dst`.
  void compose(const CoalitionMask& s, std::size_t background_row,
               Eigen::Ref<Eigen::RowVectorXd> dst) const;

 private:
  const Model& model_;
  Vector x_;
  const TabularDataset& background_;
  std::size_t m_;
};

double value_function_marginal(const Model& model, const Vector& x, const CoalitionMask& s,
                               const TabularDataset& background, std::size_t m, Rng& rng);

double value_function_exhaustive(const Model& model, const Vector& x, const CoalitionMask& s,
                                 const TabularDataset& background);

}  // namespace attr
