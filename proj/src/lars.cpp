#include "attr/lars.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include "attr/error.hpp"

namespace attr {

LarsPath::LarsPath(Matrix Z, Vector y) : Z_(std::move(Z)), y_(std::move(y)) {
  if (Z_.rows() != y_.size()) throw InvalidArgument("design and response lengths differ");
  if (Z_.cols() < 1) throw InvalidArgument("design has no columns");
  if (!Z_.allFinite() || !y_.allFinite()) throw InvalidArgument("design or response not finite");
  r_ = y_;
  beta_ = Vector::Zero(Z_.cols());
  in_active_.assign(dim(), 0);
  Vector c = correlations();
  C_ = c.cwiseAbs().maxCoeff();
  tol_ = 1e-12 * std::max(Z_.norm() * y_.norm(), std::numeric_limits<double>::min());
}

std::vector<std::size_t> LarsPath::inactive() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < dim(); ++j)
    if (!in_active_[j]) out.push_back(j);
  return out;
}

std::size_t LarsPath::next() {
  if (exhausted()) throw InvalidArgument("LARS path has no inactive feature left");
  Vector c = correlations();
  std::optional<std::size_t> best;
  for (std::size_t j = 0; j < dim(); ++j) {
    if (in_active_[j]) continue;
    if (!best || std::abs(c(j)) > std::abs(c(*best))) best = j;
  }
  if (std::abs(c(*best)) <= tol_)
    throw DegenerateDesign("all residual correlations are zero");
  if (active_.empty()) C_ = std::abs(c(*best));
  active_.push_back(*best);
  in_active_[*best] = 1;
  advance();
  return *best;
}

void LarsPath::advance() {
  const double eps = 1e-12;
  std::optional<std::size_t> just_dropped;
  while (true) {
    const auto m = static_cast<Eigen::Index>(active_.size());
    Vector c = correlations();
    Matrix ZA(Z_.rows(), m);
    Vector s(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      auto j = static_cast<Eigen::Index>(active_[static_cast<std::size_t>(a)]);
      ZA.col(a) = Z_.col(j);
      s(a) = c(j) >= 0 ? 1.0 : -1.0;
    }
    Matrix G = ZA.transpose() * ZA;
    Eigen::ColPivHouseholderQR<Matrix> qr(G);
    qr.setThreshold(1e-10);
    if (qr.rank() < m) throw SingularDesign("active columns are collinear");
    Vector delta = qr.solve(s);
    Vector u = ZA * delta;
    Vector a = Z_.transpose() * u;

    double gamma = C_;
    bool enters = false;
    for (std::size_t j = 0; j < dim(); ++j) {
      if (in_active_[j] || (just_dropped && *just_dropped == j)) continue;
      auto jj = static_cast<Eigen::Index>(j);
      for (double g : {(C_ - c(jj)) / (1.0 - a(jj)), (C_ + c(jj)) / (1.0 + a(jj))}) {
        if (std::isfinite(g) && g > eps * C_ && g < gamma) {
          gamma = g;
          enters = true;
        }
      }
    }

    std::optional<Eigen::Index> drop;
    double gamma_drop = gamma;
    for (Eigen::Index k = 0; k < m; ++k) {
      auto j = static_cast<Eigen::Index>(active_[static_cast<std::size_t>(k)]);
      if (delta(k) == 0.0) continue;
      double g = -beta_(j) / delta(k);
      if (g > eps * C_ && g < gamma_drop) {
        gamma_drop = g;
        drop = k;
      }
    }

    double step = drop ? gamma_drop : gamma;
    for (Eigen::Index k = 0; k < m; ++k)
      beta_(static_cast<Eigen::Index>(active_[static_cast<std::size_t>(k)])) += step * delta(k);
    r_ -= step * u;
    C_ -= step;

    if (drop) {
      std::size_t j = active_[static_cast<std::size_t>(*drop)];
      beta_(static_cast<Eigen::Index>(j)) = 0.0;
      active_.erase(active_.begin() + *drop);
      in_active_[j] = 0;
      just_dropped = j;
      if (active_.empty()) return;
      continue;
    }
    if (!enters) done_ = true;
    return;
  }
}

std::size_t lars_next_feature(LarsPath& path) { return path.next(); }

}  // namespace attr
