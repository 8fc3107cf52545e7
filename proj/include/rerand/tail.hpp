#ifndef RERAND_TAIL_HPP
#define RERAND_TAIL_HPP

#include <cstdint>
#include <string>

#include "rerand/common.hpp"
#include "rerand/moments.hpp"
#include "rerand/sampling.hpp"

namespace rerand {

/// Which tail strategy evaluates the q-quantile of the estimator MSE.
struct TailSpec {
  enum class Strategy { exact_mc, normal_hbe, kurtosis_approx };

  Strategy strategy = Strategy::normal_hbe;
  double q = 0.95;
  ZSampler sampler{};      // exact_mc
  Index n_z = 10000;       // exact_mc draw count, >= 100
  bool smoothing = true;   // exact_mc: smooth the criterion trace over a
  double kappa_z = 0.0;    // kurtosis_approx excess kurtosis, >= -2
  std::uint64_t seed = 0;

  static TailSpec parse(const std::string& strategy_flag);  // exact|normal|approx
  std::string name() const;
  void validate() const;
};

/// Third-order MSE of the regression estimator at a fixed z: (1/n^2) z'Rz.
double mse_lr_given_z(const Matrix& R, const Vector& z);

/// Exact MSE of the differences-in-means estimator at fixed z:
/// (1/n^2) (X beta + z)' Sigma_W (X beta + z).
double mse_dm_given_z(const Matrix& sigma_w, const Matrix& X, const Vector& beta,
                      const Vector& z);

double expected_mse_lr(const StrategyMoments& m, const ProjectionCache& cache,
                       double sigma2_z);
double expected_mse_dm(const StrategyMoments& m, const Matrix& X,
                       const Vector& beta, double sigma2_z);
double se_mse_dm(const StrategyMoments& m, const Matrix& X, const Vector& beta,
                 double sigma2_z, double kappa_z);
double se_mse_lr(const StrategyMoments& m, const ProjectionCache& cache,
                 double sigma2_z, double kappa_z);

/// Hall-Buckley-Eagleson quantile of sum_i lambda_i chi^2_1: three-cumulant
/// match to b + a chi^2_nu with a = m3/m2, nu = m2^3/m3^2, b = m1 - a nu.
double hbe_quantile(const Vector& lambdas, double q);

/// Quantile of z'Rz for gaussian z via HBE on the eigenvalues of R; negative
/// eigenvalues are clamped to zero and their share of sum|lambda| is written
/// to clamped_mass when given.
double tail_normal_lr(const StrategyMoments& m, const ProjectionCache& cache,
                      double q, double* clamped_mass = nullptr);

/// Empirical q-quantile of z'Rz over n_z draws from the sampler;
/// deterministic given seed, independent of the worker count.
double tail_exact_lr(const StrategyMoments& m, const ProjectionCache& cache,
                     double q, const ZSampler& sampler, Index n_z,
                     std::uint64_t seed);

/// Mean-plus-c-standard-errors surrogate with the design-independent terms
/// dropped: BAL + c sqrt(2 RAND^2 + 8 tr(GD)/n + 8 tr(D^2)/n^2 + kappa SS).
double tail_approx_lr(const StrategyMoments& m, const ProjectionCache& cache,
                      double q, double kappa_z);

/// Differences-in-means analogue given beta (simulation/diagnostic use).
double q_prime_dm(const StrategyMoments& m, const Matrix& X, const Vector& beta,
                  double sigma2_z, double q, double kappa_z);

/// Dispatch on spec.strategy; the criterion value the optimizer minimizes.
double tail_criterion(const StrategyMoments& m, const ProjectionCache& cache,
                      const TailSpec& spec, double* clamped_mass = nullptr);

/// Type-7 (linear interpolation) empirical quantile.
double empirical_quantile(Vector values, double q);

}  // namespace rerand

#endif  // RERAND_TAIL_HPP
