#include "attr/value_function.hpp"

#include <algorithm>

#include "attr/error.hpp"

namespace attr {

CoalitionMask CoalitionMask::from_bits(std::uint64_t bits, std::size_t d) {
  CoalitionMask m(d);
  for (std::size_t j = 0; j < d && j < 64; ++j) m.set(j, (bits >> j) & 1U);
  return m;
}

std::size_t CoalitionMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

MarginalValueFunction::MarginalValueFunction(const Model& model, Vector x,
                                             const TabularDataset& background,
                                             std::size_t samples_per_subset)
    : model_(model), x_(std::move(x)), background_(background), m_(samples_per_subset) {
  if (m_ < 1) throw InvalidBudget("samples per subset must be at least 1");
  if (static_cast<std::size_t>(x_.size()) != background_.features())
    throw InvalidArgument("input length does not match background feature count");
  if (model_.input_dim() != background_.features())
    throw InvalidArgument("model input dim does not match background feature count");
}

void MarginalValueFunction::compose(const CoalitionMask& s, std::size_t background_row,
                                    Eigen::Ref<Eigen::RowVectorXd> dst) const {
  const auto r = background_.row(background_row);
  for (std::size_t j = 0; j < dim(); ++j) {
    auto jj = static_cast<Eigen::Index>(j);
    dst(jj) = s.test(j) ? x_(jj) : r(jj);
  }
}

double MarginalValueFunction::with_rows(const CoalitionMask& s,
                                        const std::vector<std::size_t>& rows) const {
  if (s.size() != dim()) throw InvalidArgument("mask length does not match feature count");
  if (rows.empty()) throw InvalidArgument("no imputation rows");
  Matrix batch(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim()));
  for (std::size_t i = 0; i < rows.size(); ++i) compose(s, rows[i], batch.row(static_cast<Eigen::Index>(i)));
  return eval_model(model_, batch).mean();
}

double MarginalValueFunction::operator()(const CoalitionMask& s, Rng& rng) const {
  if (s.size() != dim()) throw InvalidArgument("mask length does not match feature count");
  if (s.is_full()) return full_value();
  std::vector<std::size_t> rows(m_);
  for (auto& r : rows) r = uniform_index(rng, background_.rows());
  return with_rows(s, rows);
}

double MarginalValueFunction::exhaustive(const CoalitionMask& s) const {
  if (s.size() != dim()) throw InvalidArgument("mask length does not match feature count");
  if (s.is_full()) return full_value();
  std::vector<std::size_t> rows(background_.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return with_rows(s, rows);
}

double MarginalValueFunction::full_value() const {
  Matrix batch(1, static_cast<Eigen::Index>(dim()));
  batch.row(0) = x_.transpose();
  return eval_model(model_, batch)(0);
}

double MarginalValueFunction::empty_value_exhaustive() const {
  return exhaustive(CoalitionMask::empty(dim()));
}

double value_function_marginal(const Model& model, const Vector& x, const CoalitionMask& s,
                               const TabularDataset& background, std::size_t m, Rng& rng) {
  return MarginalValueFunction(model, x, background, m)(s, rng);
}

double value_function_exhaustive(const Model& model, const Vector& x, const CoalitionMask& s,
                                 const TabularDataset& background) {
  return MarginalValueFunction(model, x, background, 1).exhaustive(s);
}

}  // namespace attr
