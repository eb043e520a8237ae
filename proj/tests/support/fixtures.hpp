#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "attr/dataset.hpp"
#include "attr/model.hpp"
#include "attr/value_function.hpp"

namespace fixtures {

using attr::Matrix;
using attr::TabularDataset;
using attr::Vector;

inline TabularDataset gaussian_data(std::size_t n, std::size_t d, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, sd);
  Matrix X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = z(rng);
  std::vector<std::string> names;
  for (std::size_t j = 0; j < d; ++j) names.push_back("x" + std::to_string(j));
  return TabularDataset(std::move(X), std::move(names));
}

inline TabularDataset single_row(const std::vector<double>& row) {
  Matrix X(1, static_cast<Eigen::Index>(row.size()));
  std::vector<std::string> names;
  for (std::size_t j = 0; j < row.size(); ++j) {
    X(0, static_cast<Eigen::Index>(j)) = row[j];
    names.push_back("x" + std::to_string(j));
  }
  return TabularDataset(std::move(X), std::move(names));
}

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// phi_j = w_j (x_j - mu_j) for a linear model under marginal imputation.
inline Vector linear_shapley(const Vector& w, const Vector& x, const Vector& mu) {
  return w.cwiseProduct(x - mu);
}

// Brute-force Shapley values by walking every permutation with
// std::next_permutation; the game takes a membership vector.
inline std::vector<double> permutation_oracle(std::size_t d,
                                              const std::function<double(const std::vector<bool>&)>& v) {
  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> phi(d, 0.0);
  double count = 0;
  do {
    std::vector<bool> in(d, false);
    double prev = v(in);
    for (std::size_t p : perm) {
      in[p] = true;
      double cur = v(in);
      phi[p] += cur - prev;
      prev = cur;
    }
    count += 1;
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (double& x : phi) x /= count;
  return phi;
}

// Same walk, averaging |v(S + j) - v(S)|.
inline std::vector<double> abs_permutation_oracle(std::size_t d,
                                                  const std::function<double(const std::vector<bool>&)>& v) {
  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> xi(d, 0.0);
  double count = 0;
  do {
    std::vector<bool> in(d, false);
    double prev = v(in);
    for (std::size_t p : perm) {
      in[p] = true;
      double cur = v(in);
      xi[p] += std::abs(cur - prev);
      prev = cur;
    }
    count += 1;
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (double& x : xi) x /= count;
  return xi;
}

// v(S) averaged over every background row, written without the library's
// value function.
inline std::function<double(const std::vector<bool>&)> exhaustive_game(const attr::Model& model,
                                                                       const Vector& x,
                                                                       const TabularDataset& bg) {
  return [&model, x, &bg](const std::vector<bool>& in) {
    Matrix batch = bg.values();
    for (Eigen::Index i = 0; i < batch.rows(); ++i)
      for (Eigen::Index j = 0; j < batch.cols(); ++j)
        if (in[static_cast<std::size_t>(j)]) batch(i, j) = x(j);
    return model.predict(batch).mean();
  };
}

inline std::vector<std::size_t> order_desc(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  return idx;
}

// The five d = 6 models used by the oracle-equivalence checks.
inline std::vector<std::unique_ptr<attr::Model>> six_feature_models() {
  std::vector<std::unique_ptr<attr::Model>> out;
  out.push_back(std::make_unique<attr::LinearModel>(vec({2.0, -1.5, 1.0, 0.5, -0.25, 0.1}), 0.3));
  out.push_back(std::make_unique<attr::FunctionModel>(6, [](const auto& r) {
    return r(0) * r(1) + 0.5 * r(2) - r(3) * r(4) * r(5);
  }));
  out.push_back(std::make_unique<attr::FunctionModel>(6, [](const auto& r) {
    return std::tanh(r(0) + 0.5 * r(1)) + std::max(0.0, r(2) - r(3)) + 0.2 * r(4) * r(4) - 0.3 * r(5);
  }));
  {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> z;
    attr::MlpModel::Layer l1{Matrix(5, 6), Vector(5)}, l2{Matrix(1, 5), Vector(1)};
    for (Eigen::Index i = 0; i < 5; ++i) {
      for (Eigen::Index j = 0; j < 6; ++j) l1.weights(i, j) = z(rng);
      l1.bias(i) = 0.1 * z(rng);
      l2.weights(0, i) = z(rng);
    }
    l2.bias(0) = 0.05;
    out.push_back(std::make_unique<attr::MlpModel>(std::vector<attr::MlpModel::Layer>{l1, l2},
                                                   attr::OutputKind::kProbability));
  }
  out.push_back(std::make_unique<attr::FunctionModel>(6, [](const auto& r) {
    double s = 0;
    for (int j = 0; j < 6; ++j) s += (j + 1) * r(j);
    return std::sin(0.3 * s) + (r(0) > 0 ? 1.0 : 0.0) * r(5);
  }));
  return out;
}

// d = 8 linear fixture with planted signed Shapley values at each input;
// some adjacent pairs near the top are close.
struct LinearEight {
  Vector w = vec({4.0, -3.2, 2.5, -1.9, 1.4, -1.0, 0.6, 0.3});
  TabularDataset background = gaussian_data(100, 8, 20240611);
  attr::LinearModel model{w, 0.5};

  // x = mu + target / w gives phi = target exactly.
  Vector input_for(const Vector& target) const {
    return background.column_means() + target.cwiseQuotient(w);
  }
  std::vector<Vector> inputs() const {
    std::vector<Vector> out;
    const double base[5][8] = {
        {4.0, 3.85, 2.2, 2.05, 1.0, 0.6, 0.3, 0.1},
        {3.5, -1.0, 2.6, 0.4, 2.3, -0.5, 0.9, 0.0},
        {-2.0, 3.1, 1.2, 2.8, -0.8, 0.5, 1.8, 0.2},
        {2.8, 2.65, -1.4, 1.3, 0.7, 3.6, -0.2, 0.4},
        {1.1, 4.2, 0.6, -1.7, 2.9, 0.2, 2.5, -0.6},
    };
    for (const auto& row : base) {
      Vector t(8);
      for (int j = 0; j < 8; ++j) t(j) = row[j];
      out.push_back(input_for(t));
    }
    return out;
  }
};

}  // namespace fixtures
