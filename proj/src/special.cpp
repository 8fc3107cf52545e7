#include "rerand/special.hpp"

#include <cmath>
#include <limits>

#include "rerand/common.hpp"

namespace rerand {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Acklam's rational approximation, |relative error| < 1.15e-9 before refinement.
double normal_quantile_acklam(double p) {
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) return -normal_quantile_acklam(1.0 - p);
  double q = p - 0.5;
  double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, "normal_quantile: p must lie in (0,1)");
  double x = normal_quantile_acklam(p);
  // One Halley step against the erfc-based CDF.
  if (x * x < 1400.0) {
    const double sqrt2pi = 2.5066282746310002;
    double e = normal_cdf(x) - p;
    double u = e * sqrt2pi * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

double gamma_p(double a, double x) {
  require(a > 0.0, "gamma_p: a must be positive");
  require(x >= 0.0, "gamma_p: x must be non-negative");
  if (x == 0.0) return 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  const double fpmin = std::numeric_limits<double>::min() / eps;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    // series representation
    double ap = a, del = 1.0 / a, sum = del;
    for (int i = 0; i < 100000; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * eps)
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    throw numerical_error("gamma_p: series failed to converge");
  }
  // continued fraction (modified Lentz)
  double b = x + 1.0 - a, c = 1.0 / fpmin, d = 1.0 / b, h = d;
  for (int i = 1; i < 100000; ++i) {
    double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < fpmin) d = fpmin;
    c = b + an / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps)
      return 1.0 - std::exp(-x + a * std::log(x) - lg) * h;
  }
  throw numerical_error("gamma_p: continued fraction failed to converge");
}

double gamma_p_inverse(double p, double a) {
  require(a > 0.0, "gamma_p_inverse: a must be positive");
  require(p >= 0.0 && p < 1.0, "gamma_p_inverse: p must lie in [0,1)");
  if (p == 0.0) return 0.0;
  const double lg = std::lgamma(a);

  double x;
  if (a > 1.0) {
    // Wilson-Hilferty starting point
    double z = normal_quantile(p);
    double core = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * std::sqrt(a));
    x = a * core * core * core;
    if (!(x > 0.0)) x = 1e-3;
  } else {
    double t = 1.0 - a * (0.253 + a * 0.12);
    x = (p < t) ? std::pow(p / t, 1.0 / a) : 1.0 - std::log(1.0 - (p - t) / (1.0 - t));
  }

  // Halley iterations kept inside an evolving bracket; bisection whenever the
  // step leaves it or the density underflows.
  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    double err = gamma_p(a, x) - p;
    if (err >= 0.0) hi = std::min(hi, x);
    else lo = std::max(lo, x);

    double dens = std::exp(-x + (a - 1.0) * std::log(x) - lg);
    double x_new;
    if (dens > 0.0 && std::isfinite(dens)) {
      double u = err / dens;
      double corr = u * ((a - 1.0) / x - 1.0);
      corr = std::clamp(corr, -0.9, 0.9);
      x_new = x - u / (1.0 - 0.5 * corr);
    } else {
      x_new = std::numeric_limits<double>::quiet_NaN();
    }
    if (!(x_new > lo && x_new < hi))
      x_new = std::isinf(hi) ? 2.0 * std::max(x, 1.0) : 0.5 * (lo + hi);
    double step = std::abs(x_new - x);
    x = x_new;
    if (step <= 1e-15 * std::max(x, 1e-300)) break;
  }
  return x;
}

double chi2_cdf(double x, double nu) {
  require(nu > 0.0, "chi2_cdf: nu must be positive");
  if (x <= 0.0) return 0.0;
  return gamma_p(0.5 * nu, 0.5 * x);
}

double chi2_quantile(double q, double nu) {
  require(q > 0.0 && q < 1.0, "chi2_quantile: q must lie in (0,1)");
  require(nu > 0.0, "chi2_quantile: nu must be positive");
  return 2.0 * gamma_p_inverse(q, 0.5 * nu);
}

}  // namespace rerand
