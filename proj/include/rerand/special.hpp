#ifndef RERAND_SPECIAL_HPP
#define RERAND_SPECIAL_HPP

namespace rerand {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile, p in (0,1). Accurate to ~1e-15 absolute.
double normal_quantile(double p);

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double gamma_p(double a, double x);

/// Inverse of gamma_p in x for fixed a, p in [0,1).
double gamma_p_inverse(double p, double a);

/// Chi-square CDF with (possibly non-integer) dof nu > 0.
double chi2_cdf(double x, double nu);

/// Chi-square quantile, q in (0,1), nu > 0. Accurate to ~1e-12 relative.
double chi2_quantile(double q, double nu);

}  // namespace rerand

#endif  // RERAND_SPECIAL_HPP
