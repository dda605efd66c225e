#pragma once

// Gaussian tail probability F(d) = Q(d / sqrt(r)) and its complement
// Phi(d) = 1 - F(d), with logarithms and analytic d-derivatives.
//
// d is the gap tau - h(x) between a sensor threshold and the noiseless
// output, r is the sensor noise variance. F(d) is the probability that the
// sensor reads 1. All functions are pure.

namespace mhmap::gauss {

class TailArg {
 public:
  /// Throws DomainError unless d is finite and r is finite and > 0.
  TailArg(double d, double r);

  double d() const noexcept { return d_; }
  double r() const noexcept { return r_; }
  double standardized() const noexcept { return d_ * inv_sigma_; }
  double inv_sigma() const noexcept { return inv_sigma_; }

 private:
  double d_;
  double r_;
  double inv_sigma_;
};

double q_tail(const TailArg& a);
double cdf(const TailArg& a);

/// ln Q(d/sqrt r); finite for every finite d.
double log_q_tail(const TailArg& a);
double dlog_q_tail(const TailArg& a);
double d2log_q_tail(const TailArg& a);

/// ln Phi(d) = ln Q(-d/sqrt r).
double log_cdf(const TailArg& a);
double dlog_cdf(const TailArg& a);
double d2log_cdf(const TailArg& a);

// Standard-normal versions in the standardized argument x = d / sqrt(r).
namespace standard {

double q(double x);
double log_q(double x);
/// Inverse Mills ratio phi(x) / Q(x).
double hazard(double x);
/// hazard(x) - x, computed without cancellation for large x.
double hazard_excess(double x);

}  // namespace standard

}  // namespace mhmap::gauss
