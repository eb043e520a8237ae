#pragma once

namespace attr {

// Quantile of Student's t with real-valued degrees of freedom.
double t_quantile(double p, double df);
double t_cdf(double t, double df);

double students_t_log_pdf(double t, double df);

// Log density of the noncentral t distribution, from the integral
//   f(t) = C(t) * int_0^inf x^df exp(-(x - a)^2 / 2) dx,
//   a = ncp * t / sqrt(t^2 + df),
// with the integral evaluated by adaptive Gauss-Kronrod around its mode in
// log space.
double noncentral_t_log_pdf(double t, double df, double ncp);

}  // namespace attr
