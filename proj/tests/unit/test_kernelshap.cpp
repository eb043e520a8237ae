#include <gtest/gtest.h>

#include <cmath>

#include "attr/error.hpp"
#include "attr/kernelshap.hpp"
#include "support/fixtures.hpp"

using namespace attr;
using fixtures::vec;

namespace {

std::vector<CoalitionSample> label(const std::vector<CoalitionMask>& masks, const Game& g) {
  std::vector<CoalitionSample> out;
  for (const auto& m : masks) out.push_back({m, g(m), 1.0});
  return out;
}

}  // namespace

TEST(KernelWeights, HandValues) {
  EXPECT_DOUBLE_EQ(shapley_kernel_weight(4, 1), 0.25);
  EXPECT_DOUBLE_EQ(shapley_kernel_weight(4, 2), 0.125);
  EXPECT_THROW(shapley_kernel_weight(4, 0), InvalidArgument);
  EXPECT_THROW(shapley_kernel_weight(4, 4), InvalidArgument);
  auto p = coalition_size_probabilities(4);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_NEAR(p[0], 1.0 / 2.75, 1e-15);
  EXPECT_NEAR(p[1], 0.75 / 2.75, 1e-15);
  EXPECT_NEAR(p[2], 1.0 / 2.75, 1e-15);
}

TEST(SampleCoalitions, SizeLawChiSquare) {
  const std::size_t d = 6, n = 20000;
  Rng rng(42);
  auto masks = sample_coalitions(d, n, rng);
  ASSERT_EQ(masks.size(), n);
  std::vector<double> counts(d - 1, 0.0);
  std::vector<double> member(d, 0.0);
  for (const auto& m : masks) {
    ASSERT_FALSE(m.is_empty());
    ASSERT_FALSE(m.is_full());
    counts[m.count() - 1] += 1;
    for (std::size_t j = 0; j < d; ++j) member[j] += m.test(j);
  }
  auto p = coalition_size_probabilities(d);
  double chi2 = 0;
  for (std::size_t s = 0; s < d - 1; ++s) chi2 += std::pow(counts[s] - n * p[s], 2) / (n * p[s]);
  EXPECT_LT(chi2, 18.467);  // chi-square(4) upper 0.001 point
  // Given the size law is symmetric, each feature is in half the masks.
  for (double c : member) EXPECT_NEAR(c / n, 0.5, 0.015);
  EXPECT_THROW(sample_coalitions(d, d + 1, rng), InvalidBudget);
}

TEST(KernelShapFit, EnumerationEqualsExactShapley) {
  auto models = fixtures::six_feature_models();
  auto bg = fixtures::gaussian_data(12, 6, 51);
  Vector x = fixtures::gaussian_data(1, 6, 52).row(0).transpose();
  for (const auto& m : models) {
    MarginalValueFunction v(*m, x, bg);
    Game g = [&](const CoalitionMask& s) { return v.exhaustive(s); };
    auto all = enumerate_coalitions(g, 6);
    EXPECT_EQ(all.size(), 62u);
    Vector fit = kernelshap_fit(all, g(CoalitionMask::empty(6)), g(CoalitionMask::full(6)));
    Vector exact = exact_shapley(g, 6);
    EXPECT_LE((fit - exact).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(KernelShapFit, AdditiveGameIsRecoveredFromAnySample) {
  Vector a = vec({1.0, -2.0, 0.5, 3.0, -0.25});
  Game g = [&](const CoalitionMask& s) {
    double v = 0.7;
    for (std::size_t j = 0; j < 5; ++j) v += s.test(j) ? a(j) : 0.0;
    return v;
  };
  Rng rng(3);
  auto samples = label(sample_coalitions(5, 40, rng), g);
  Vector fit = kernelshap_fit(samples, g(CoalitionMask::empty(5)), g(CoalitionMask::full(5)));
  EXPECT_LE((fit - a).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(KernelShapFit, ConstantGameGivesZeroAndEfficiencyHolds) {
  Game c = [](const CoalitionMask&) { return 4.0; };
  Rng rng(4);
  auto masks = sample_coalitions(4, 30, rng);
  Vector fit = kernelshap_fit(label(masks, c), 4.0, 4.0);
  EXPECT_LE(fit.cwiseAbs().maxCoeff(), 1e-12);

  auto models = fixtures::six_feature_models();
  auto bg = fixtures::gaussian_data(30, 6, 9);
  MarginalValueFunction v(*models[2], Vector::Ones(6), bg);
  KernelShapEstimator ks(v, 7);
  ks.add_samples(100);
  Vector phi = ks.fit();
  EXPECT_NEAR(phi.sum(), ks.v_full() - ks.v_empty(), 1e-10);
  EXPECT_EQ(ks.v_full(), v.full_value());
}

TEST(KernelShapFit, RankDeficientDesignThrows) {
  Game g = [](const CoalitionMask& s) { return static_cast<double>(s.count()); };
  std::vector<CoalitionMask> same(10, CoalitionMask::from_bits(0b0011, 4));
  EXPECT_THROW(kernelshap_fit(label(same, g), 0.0, 4.0), SingularDesign);
}

TEST(Bootstrap, CovarianceIsSymmetricPsdAndSeeded) {
  auto models = fixtures::six_feature_models();
  auto bg = fixtures::gaussian_data(30, 6, 9);
  MarginalValueFunction v(*models[1], Vector::Ones(6), bg);
  KernelShapEstimator a(v, 11), b(v, 11);
  a.add_samples(200);
  b.add_samples(200);
  Matrix ca = a.bootstrap(100).covariance;
  Matrix cb = b.bootstrap(100).covariance;
  EXPECT_TRUE(ca == cb);
  EXPECT_LE((ca - ca.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(ca);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
}

TEST(Bootstrap, VarianceTracksRepeatedFits) {
  auto models = fixtures::six_feature_models();
  auto bg = fixtures::gaussian_data(40, 6, 13);
  Vector x = fixtures::gaussian_data(1, 6, 14).row(0).transpose();
  MarginalValueFunction v(*models[2], x, bg);
  const int reps = 150;
  std::vector<MeanVarEstimate> mc(6);
  KernelShapEstimator first(v, 1000);
  first.add_samples(200);
  Vector boot = first.bootstrap(250).covariance.diagonal();
  for (int r = 0; r < reps; ++r) {
    KernelShapEstimator e(v, 1000 + r);
    e.add_samples(200);
    Vector phi = e.fit();
    for (int j = 0; j < 6; ++j) mc[j].add(phi(j));
  }
  for (int j = 0; j < 6; ++j) {
    double ratio = boot(j) / mc[j].variance();
    EXPECT_GT(ratio, 0.4) << j;
    EXPECT_LT(ratio, 2.5) << j;
  }
}
