#include "attr/shapley_sampling.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "attr/error.hpp"

namespace attr {
namespace {

constexpr std::size_t kRowsPerBatch = 8192;

// Coalition of features preceding j in a fresh uniform permutation.
CoalitionMask preceding_coalition(std::size_t d, std::size_t j, Rng& rng,
                                  std::vector<std::size_t>& scratch) {
  scratch.resize(d);
  std::iota(scratch.begin(), scratch.end(), std::size_t{0});
  fisher_yates(std::span<std::size_t>(scratch), rng);
  CoalitionMask s(d);
  for (std::size_t f : scratch) {
    if (f == j) break;
    s.set(f);
  }
  return s;
}

}  // namespace

std::vector<double> sample_marginal_contributions(const MarginalValueFunction& v, std::size_t j,
                                                  std::size_t n, Rng& rng,
                                                  Imputation imputation) {
  const std::size_t d = v.dim();
  if (j >= d) throw InvalidArgument("feature index out of range");
  const std::size_t rows_per_value =
      imputation == Imputation::kSampled ? v.samples_per_subset() : v.background().rows();
  const std::size_t draws_per_batch = std::max<std::size_t>(1, kRowsPerBatch / (2 * rows_per_value));

  std::vector<double> out;
  out.reserve(n);
  std::vector<std::size_t> perm;
  std::vector<std::size_t> rows(rows_per_value);
  Matrix batch;
  std::size_t done = 0;
  while (done < n) {
    std::size_t chunk = std::min(draws_per_batch, n - done);
    batch.resize(static_cast<Eigen::Index>(2 * rows_per_value * chunk), static_cast<Eigen::Index>(d));
    Eigen::Index r = 0;
    for (std::size_t t = 0; t < chunk; ++t) {
      CoalitionMask without = preceding_coalition(d, j, rng, perm);
      CoalitionMask with = without;
      with.set(j);
      if (imputation == Imputation::kSampled) {
        for (auto& row : rows) row = uniform_index(rng, v.background().rows());
      } else {
        std::iota(rows.begin(), rows.end(), std::size_t{0});
      }
      for (std::size_t row : rows) v.compose(with, row, batch.row(r++));
      for (std::size_t row : rows) v.compose(without, row, batch.row(r++));
    }
    Vector y = eval_model(v.model(), batch);
    auto per = static_cast<Eigen::Index>(rows_per_value);
    for (std::size_t t = 0; t < chunk; ++t) {
      Eigen::Index base = static_cast<Eigen::Index>(2 * t) * per;
      out.push_back(y.segment(base, per).mean() - y.segment(base + per, per).mean());
    }
    done += chunk;
  }
  return out;
}

double marginal_contribution(const MarginalValueFunction& v, std::size_t j, Rng& rng,
                             Imputation imputation) {
  return sample_marginal_contributions(v, j, 1, rng, imputation).front();
}

MeanVarEstimate shapley_sampling(const MarginalValueFunction& v, std::size_t j, std::size_t n,
                                 Rng& rng, Imputation imputation, Contribution contribution) {
  if (n < 2) throw InvalidBudget("Shapley Sampling needs at least 2 permutations");
  MeanVarEstimate est;
  for (double c : sample_marginal_contributions(v, j, n, rng, imputation))
    est.add(contribution == Contribution::kAbsolute ? std::abs(c) : c);
  return est;
}

std::vector<MeanVarEstimate> shapley_sampling_all(const MarginalValueFunction& v, std::size_t n,
                                                  std::uint64_t seed, Imputation imputation) {
  std::vector<MeanVarEstimate> out;
  out.reserve(v.dim());
  for (std::size_t j = 0; j < v.dim(); ++j) {
    Rng rng = make_rng(seed, {j});
    out.push_back(shapley_sampling(v, j, n, rng, imputation));
  }
  return out;
}

namespace {

void check_exact_dim(std::size_t d, std::size_t limit) {
  if (d > limit)
    throw TooManyFeatures("exact enumeration supports at most " + std::to_string(limit) +
                          " features, got " + std::to_string(d));
  if (d < 1) throw InvalidArgument("need at least one feature");
}

std::vector<double> all_coalition_values(const Game& game, std::size_t d) {
  std::vector<double> values(std::size_t{1} << d);
  for (std::uint64_t bits = 0; bits < values.size(); ++bits)
    values[bits] = game(CoalitionMask::from_bits(bits, d));
  return values;
}

// |S|! (d - |S| - 1)! / d!, evaluated in log space.
std::vector<double> subset_weights(std::size_t d) {
  std::vector<double> w(d);
  double dd = static_cast<double>(d);
  for (std::size_t s = 0; s < d; ++s) {
    double sd = static_cast<double>(s);
    w[s] = std::exp(std::lgamma(sd + 1.0) + std::lgamma(dd - sd) - std::lgamma(dd + 1.0));
  }
  return w;
}

template <typename Transform>
Vector subset_form(const Game& game, std::size_t d, Transform transform) {
  check_exact_dim(d, kMaxExactFeatures);
  auto values = all_coalition_values(game, d);
  auto w = subset_weights(d);
  Vector phi = Vector::Zero(static_cast<Eigen::Index>(d));
  for (std::uint64_t bits = 0; bits < values.size(); ++bits) {
    std::size_t size = static_cast<std::size_t>(std::popcount(bits));
    for (std::size_t j = 0; j < d; ++j) {
      if ((bits >> j) & 1U) continue;
      double delta = values[bits | (std::uint64_t{1} << j)] - values[bits];
      phi(static_cast<Eigen::Index>(j)) += w[size] * transform(delta);
    }
  }
  return phi;
}

}  // namespace

Vector exact_shapley(const Game& game, std::size_t d) {
  return subset_form(game, d, [](double x) { return x; });
}

Vector exact_abs_contribution(const Game& game, std::size_t d) {
  return subset_form(game, d, [](double x) { return std::abs(x); });
}

Vector exact_shapley_by_permutations(const Game& game, std::size_t d) {
  check_exact_dim(d, 8);
  auto values = all_coalition_values(game, d);
  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Vector phi = Vector::Zero(static_cast<Eigen::Index>(d));
  std::size_t count = 0;
  do {
    std::uint64_t bits = 0;
    for (std::size_t f : perm) {
      std::uint64_t next = bits | (std::uint64_t{1} << f);
      phi(static_cast<Eigen::Index>(f)) += values[next] - values[bits];
      bits = next;
    }
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return phi / static_cast<double>(count);
}

Vector exact_shapley(const MarginalValueFunction& v) {
  return exact_shapley([&v](const CoalitionMask& s) { return v.exhaustive(s); }, v.dim());
}

}  // namespace attr
