#pragma once

#include <cmath>
#include <cstddef>
#include <limits>

namespace attr {

// Streaming mean / sum of squared deviations (Welford), mergeable with
// Chan's pairwise update.
struct MeanVarEstimate {
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;

  void add(double value) {
    ++n;
    double delta = value - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (value - mean);
  }

  void merge(const MeanVarEstimate& other) {
    if (other.n == 0) return;
    if (n == 0) {
      *this = other;
      return;
    }
    double na = static_cast<double>(n);
    double nb = static_cast<double>(other.n);
    double total = na + nb;
    double delta = other.mean - mean;
    mean += delta * nb / total;
    m2 += other.m2 + delta * delta * na * nb / total;
    n += other.n;
  }

  // Sample variance of the draws; NaN below two draws.
  double variance() const {
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    return m2 / static_cast<double>(n - 1);
  }

  double variance_of_mean() const { return variance() / static_cast<double>(n); }
  double standard_error() const { return std::sqrt(variance_of_mean()); }
};

inline MeanVarEstimate merged(MeanVarEstimate a, const MeanVarEstimate& b) {
  a.merge(b);
  return a;
}

}  // namespace attr
