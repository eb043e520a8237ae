#include "attr/kernelshap.hpp"

#include <cmath>
#include <numeric>

#include "attr/error.hpp"

namespace attr {
namespace {

double log_binomial(std::size_t n, std::size_t k) {
  double nn = static_cast<double>(n);
  double kk = static_cast<double>(k);
  return std::lgamma(nn + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(nn - kk + 1.0);
}

struct ReducedSystem {
  Matrix design;   // n x (d-1): z_j - z_last
  Vector target;   // v - v_empty - z_last * total
  Vector weights;  // n
};

ReducedSystem reduce(std::span<const CoalitionSample> samples, double v_empty, double v_full) {
  if (samples.empty()) throw SingularDesign("no coalition samples");
  std::size_t d = samples.front().mask.size();
  if (d < 2) throw InvalidArgument("need at least two features");
  double total = v_full - v_empty;
  ReducedSystem sys{Matrix(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(d - 1)),
                    Vector(static_cast<Eigen::Index>(samples.size())),
                    Vector(static_cast<Eigen::Index>(samples.size()))};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.mask.size() != d) throw InvalidArgument("mask lengths differ");
    if (!(s.kernel_weight > 0.0)) throw InvalidArgument("kernel weights must be positive");
    auto ii = static_cast<Eigen::Index>(i);
    double last = s.mask.test(d - 1) ? 1.0 : 0.0;
    for (std::size_t j = 0; j + 1 < d; ++j)
      sys.design(ii, static_cast<Eigen::Index>(j)) = (s.mask.test(j) ? 1.0 : 0.0) - last;
    sys.target(ii) = s.value - v_empty - last * total;
    sys.weights(ii) = s.kernel_weight;
  }
  return sys;
}

Vector solve_reduced(const Matrix& normal, const Vector& rhs, double total) {
  Eigen::ColPivHouseholderQR<Matrix> qr(normal);
  qr.setThreshold(1e-10);
  if (qr.rank() < normal.rows()) throw SingularDesign("coalition design is rank deficient");
  Vector beta = qr.solve(rhs);
  Vector phi(beta.size() + 1);
  phi.head(beta.size()) = beta;
  phi(beta.size()) = total - beta.sum();
  return phi;
}

}  // namespace

double shapley_kernel_weight(std::size_t d, std::size_t s) {
  if (s == 0 || s >= d) throw InvalidArgument("kernel weight undefined for empty or full coalitions");
  double dd = static_cast<double>(d);
  double ss = static_cast<double>(s);
  return (dd - 1.0) / (std::exp(log_binomial(d, s)) * ss * (dd - ss));
}

std::vector<double> coalition_size_probabilities(std::size_t d) {
  if (d < 2) throw InvalidArgument("need at least two features");
  std::vector<double> p(d - 1);
  double dd = static_cast<double>(d);
  for (std::size_t s = 1; s < d; ++s) {
    double ss = static_cast<double>(s);
    p[s - 1] = (dd - 1.0) / (ss * (dd - ss));
  }
  double z = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= z;
  return p;
}

namespace {

std::vector<CoalitionMask> draw_masks(std::size_t d, std::size_t n, Rng& rng) {
  auto probs = coalition_size_probabilities(d);
  std::discrete_distribution<std::size_t> size_dist(probs.begin(), probs.end());
  std::vector<std::size_t> perm(d);
  std::vector<CoalitionMask> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t s = size_dist(rng) + 1;
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    // Partial Fisher-Yates: the first s slots are a uniform s-subset.
    for (std::size_t k = 0; k < s; ++k) {
      std::size_t r = k + uniform_index(rng, d - k);
      std::swap(perm[k], perm[r]);
    }
    CoalitionMask m(d);
    for (std::size_t k = 0; k < s; ++k) m.set(perm[k]);
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

std::vector<CoalitionMask> sample_coalitions(std::size_t d, std::size_t n, Rng& rng) {
  if (d < 2) throw InvalidArgument("need at least two features");
  if (n < d + 2) throw InvalidBudget("KernelSHAP needs at least d + 2 coalitions");
  return draw_masks(d, n, rng);
}

std::vector<CoalitionSample> evaluate_coalitions(const MarginalValueFunction& v,
                                                 const std::vector<CoalitionMask>& masks,
                                                 Rng& rng) {
  const std::size_t m = v.samples_per_subset();
  const std::size_t d = v.dim();
  std::vector<CoalitionSample> out;
  out.reserve(masks.size());
  constexpr std::size_t kMasksPerBatch = 512;
  Matrix batch;
  for (std::size_t start = 0; start < masks.size(); start += kMasksPerBatch) {
    std::size_t chunk = std::min(kMasksPerBatch, masks.size() - start);
    batch.resize(static_cast<Eigen::Index>(chunk * m), static_cast<Eigen::Index>(d));
    Eigen::Index r = 0;
    for (std::size_t t = 0; t < chunk; ++t) {
      const auto& mask = masks[start + t];
      if (mask.size() != d) throw InvalidArgument("mask length does not match feature count");
      for (std::size_t k = 0; k < m; ++k)
        v.compose(mask, uniform_index(rng, v.background().rows()), batch.row(r++));
    }
    Vector y = eval_model(v.model(), batch);
    for (std::size_t t = 0; t < chunk; ++t) {
      double value = y.segment(static_cast<Eigen::Index>(t * m), static_cast<Eigen::Index>(m)).mean();
      out.push_back({masks[start + t], value, 1.0});
    }
  }
  return out;
}

std::vector<CoalitionSample> enumerate_coalitions(const Game& game, std::size_t d) {
  if (d > kMaxExactFeatures) throw TooManyFeatures("coalition enumeration limited to 12 features");
  std::vector<CoalitionSample> out;
  std::uint64_t full = (std::uint64_t{1} << d) - 1;
  for (std::uint64_t bits = 1; bits < full; ++bits) {
    CoalitionMask m = CoalitionMask::from_bits(bits, d);
    double w = shapley_kernel_weight(d, m.count());
    out.push_back({m, game(m), w});
  }
  return out;
}

Vector kernelshap_fit(std::span<const CoalitionSample> samples, double v_empty, double v_full) {
  ReducedSystem sys = reduce(samples, v_empty, v_full);
  Matrix weighted = sys.design.array().colwise() * sys.weights.array();
  Matrix normal = weighted.transpose() * sys.design;
  Vector rhs = weighted.transpose() * sys.target;
  return solve_reduced(normal, rhs, v_full - v_empty);
}

BootstrapSummary bootstrap_covariance(std::span<const CoalitionSample> samples, double v_empty,
                                      double v_full, std::size_t B, Rng& rng) {
  if (B < 2) throw InvalidBudget("bootstrap needs at least 2 resamples");
  ReducedSystem sys = reduce(samples, v_empty, v_full);
  const std::size_t n = samples.size();
  const std::size_t d = samples.front().mask.size();
  const double total = v_full - v_empty;

  Matrix fits(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(d));
  Vector counts(static_cast<Eigen::Index>(n));
  BootstrapSummary out;
  std::size_t consecutive_skips = 0;
  std::size_t done = 0;
  while (done < B) {
    counts.setZero();
    for (std::size_t i = 0; i < n; ++i) counts(static_cast<Eigen::Index>(uniform_index(rng, n))) += 1.0;
    Vector cw = counts.cwiseProduct(sys.weights);
    Matrix weighted = sys.design.array().colwise() * cw.array();
    Matrix normal = weighted.transpose() * sys.design;
    Vector rhs = weighted.transpose() * sys.target;
    try {
      fits.row(static_cast<Eigen::Index>(done)) = solve_reduced(normal, rhs, total).transpose();
    } catch (const SingularDesign&) {
      ++out.skipped;
      if (++consecutive_skips >= B)
        throw SingularDesign("bootstrap: " + std::to_string(B) + " consecutive singular resamples");
      continue;
    }
    consecutive_skips = 0;
    ++done;
  }
  Matrix centered = fits.rowwise() - fits.colwise().mean();
  out.covariance = (centered.transpose() * centered) / static_cast<double>(B - 1);
  // Exact symmetry for downstream consumers.
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

KernelShapEstimator::KernelShapEstimator(const MarginalValueFunction& v, std::uint64_t seed)
    : v_(v),
      sample_rng_(make_rng(seed, {0x6b73})),
      bootstrap_rng_(make_rng(seed, {0x626f})),
      v_empty_(v.empty_value_exhaustive()),
      v_full_(v.full_value()) {}

void KernelShapEstimator::add_samples(std::size_t n) {
  std::size_t d = v_.dim();
  if (samples_.size() + n < d + 2) throw InvalidBudget("KernelSHAP needs at least d + 2 coalitions");
  auto masks = draw_masks(d, n, sample_rng_);
  auto fresh = evaluate_coalitions(v_, masks, sample_rng_);
  samples_.insert(samples_.end(), fresh.begin(), fresh.end());
}

Vector KernelShapEstimator::fit() const { return kernelshap_fit(samples_, v_empty_, v_full_); }

BootstrapSummary KernelShapEstimator::bootstrap(std::size_t B) {
  return bootstrap_covariance(samples_, v_empty_, v_full_, B, bootstrap_rng_);
}

}  // namespace attr
