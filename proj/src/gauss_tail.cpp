#include "mhmap/gauss_tail.hpp"

#include <cmath>

#include "mhmap/errors.hpp"

namespace mhmap::gauss {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
// Above this the erfc route loses relative accuracy in ln Q and the
// continued fraction needs only a few dozen terms.
constexpr double kTailSwitch = 8.0;
constexpr int kFractionDepth = 80;

// 1 / (x + 2/(x + 3/(x + ...))), i.e. hazard(x) - x, for x >= kTailSwitch.
double tail_fraction(double x) {
  double s = x;
  for (int k = kFractionDepth; k >= 2; --k) s = x + k / s;
  return 1.0 / s;
}

double std_pdf(double x) {
  return std::exp(-0.5 * x * x - kLogSqrt2Pi);
}

}  // namespace

TailArg::TailArg(double d, double r) : d_(d), r_(r), inv_sigma_(0.0) {
  if (!std::isfinite(d)) throw DomainError("gauss tail: non-finite argument d");
  if (!std::isfinite(r) || !(r > 0.0))
    throw DomainError("gauss tail: noise variance r must be finite and > 0");
  inv_sigma_ = 1.0 / std::sqrt(r);
}

namespace standard {

double q(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

double log_q(double x) {
  if (x > kTailSwitch) {
    // Q(x) = phi(x) / (x + K(x))
    return -0.5 * x * x - kLogSqrt2Pi - std::log(x + tail_fraction(x));
  }
  if (x < 0.0) return std::log1p(-q(-x));
  return std::log(q(x));
}

double hazard(double x) {
  if (x > kTailSwitch) return x + tail_fraction(x);
  return std_pdf(x) / q(x);
}

double hazard_excess(double x) {
  if (x > kTailSwitch) return tail_fraction(x);
  return hazard(x) - x;
}

}  // namespace standard

double q_tail(const TailArg& a) { return standard::q(a.standardized()); }

double cdf(const TailArg& a) { return standard::q(-a.standardized()); }

double log_q_tail(const TailArg& a) { return standard::log_q(a.standardized()); }

double dlog_q_tail(const TailArg& a) {
  return -standard::hazard(a.standardized()) * a.inv_sigma();
}

double d2log_q_tail(const TailArg& a) {
  const double x = a.standardized();
  const double h = standard::hazard(x);
  return -h * standard::hazard_excess(x) * a.inv_sigma() * a.inv_sigma();
}

double log_cdf(const TailArg& a) { return standard::log_q(-a.standardized()); }

double dlog_cdf(const TailArg& a) {
  return standard::hazard(-a.standardized()) * a.inv_sigma();
}

double d2log_cdf(const TailArg& a) {
  const double x = -a.standardized();
  return -standard::hazard(x) * standard::hazard_excess(x) * a.inv_sigma() *
         a.inv_sigma();
}

}  // namespace mhmap::gauss
