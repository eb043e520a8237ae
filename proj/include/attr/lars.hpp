#pragma once

#include <cstddef>
#include <vector>

#include "attr/dataset.hpp"

namespace attr {

// Least angle regression with the lasso modification (a coefficient that
// would change sign leaves the active set). Columns of Z are expected to be
// centred; y is the response. Each call to next() adds one feature.
class LarsPath {
 public:
  LarsPath(Matrix Z, Vector y);

  std::size_t dim() const { return static_cast<std::size_t>(Z_.cols()); }
  const Matrix& design() const { return Z_; }
  const Vector& residual() const { return r_; }
  const Vector& coefficients() const { return beta_; }
  const std::vector<std::size_t>& active() const { return active_; }
  bool is_active(std::size_t j) const { return in_active_[j] != 0; }
  // Every feature currently inactive, in index order.
  std::vector<std::size_t> inactive() const;
  // Z^T residual.
  Vector correlations() const { return Z_.transpose() * r_; }
  // Largest |correlation|, i.e. the current lasso penalty.
  double penalty() const { return C_; }
  bool exhausted() const { return active_.size() == dim() || done_; }

  // Adds the inactive feature with the largest |correlation| and advances
  // the residual to the next breakpoint where another feature ties (after
  // any lasso drops). Throws DegenerateDesign when every inactive
  // correlation is zero, InvalidArgument when nothing is left to add.
  std::size_t next();

 private:
  void advance();

  Matrix Z_;
  Vector y_;
  Vector r_;
  Vector beta_;
  std::vector<std::size_t> active_;
  std::vector<char> in_active_;
  double C_ = 0.0;
  double tol_ = 0.0;
  bool done_ = false;
};

// One LARS step on (Z, residual) with the given active set; returns the
// feature that enters and leaves the advanced state in `path`.
std::size_t lars_next_feature(LarsPath& path);

}  // namespace attr
