#include "attr/t_dist.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "attr/error.hpp"

namespace attr {

double t_quantile(double p, double df) {
  if (!(df > 0.0)) throw InvalidArgument("t quantile needs df > 0");
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("t quantile needs p in (0, 1)");
  return boost::math::quantile(boost::math::students_t_distribution<double>(df), p);
}

double t_cdf(double t, double df) {
  if (!(df > 0.0)) throw InvalidArgument("t cdf needs df > 0");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  return boost::math::cdf(boost::math::students_t_distribution<double>(df), t);
}

double students_t_log_pdf(double t, double df) {
  if (!(df > 0.0)) throw InvalidArgument("t density needs df > 0");
  return std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0) -
         0.5 * std::log(df * std::numbers::pi) - (df + 1.0) / 2.0 * std::log1p(t * t / df);
}

namespace {

// log int_0^inf x^df exp(-(x - a)^2 / 2) dx
double log_moment_integral(double df, double a) {
  double mode = 0.5 * (a + std::sqrt(a * a + 4.0 * df));
  auto log_integrand = [df, a](double x) { return df * std::log(x) - 0.5 * (x - a) * (x - a); };
  double peak = log_integrand(mode);
  // Log integrand minus its peak, written in u = x - mode to avoid cancellation at large df.
  auto rel = [df, a, mode](double x) {
    double u = x - mode;
    return df * std::log1p(u / mode) - 0.5 * u * (u + 2.0 * (mode - a));
  };
  // Curvature at the mode sets the scale of the window.
  double width = 1.0 / std::sqrt(1.0 + df / (mode * mode));
  double lo = std::max(0.0, mode - 40.0 * width);
  double hi = mode + 40.0 * width;
  auto scaled = [&](double x) { return x <= 0.0 ? 0.0 : std::exp(rel(x)); };

  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  double left = gauss_kronrod<double, 31>::integrate(scaled, lo, mode, 15, 1e-12, &err);
  double right = gauss_kronrod<double, 31>::integrate(scaled, mode, hi, 15, 1e-12, &err);
  return peak + std::log(left + right);
}

}  // namespace

double noncentral_t_log_pdf(double t, double df, double ncp) {
  if (!(df > 0.0)) throw InvalidArgument("noncentral t density needs df > 0");
  if (!std::isfinite(t) || !std::isfinite(ncp))
    throw InvalidArgument("noncentral t density needs finite arguments");
  double s = t * t + df;
  double a = ncp * t / std::sqrt(s);
  return 0.5 * df * std::log(df) - df * ncp * ncp / (2.0 * s) - 0.5 * std::log(std::numbers::pi) -
         std::lgamma(df / 2.0) - 0.5 * (df - 1.0) * std::log(2.0) - 0.5 * (df + 1.0) * std::log(s) +
         log_moment_integral(df, a);
}

}  // namespace attr
