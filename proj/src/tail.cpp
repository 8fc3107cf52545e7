#include "rerand/tail.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "rerand/parallel.hpp"
#include "rerand/special.hpp"

namespace rerand {

TailSpec TailSpec::parse(const std::string& flag) {
  TailSpec spec;
  if (flag == "exact") spec.strategy = Strategy::exact_mc;
  else if (flag == "normal") spec.strategy = Strategy::normal_hbe;
  else if (flag == "approx") spec.strategy = Strategy::kurtosis_approx;
  else throw validation_error("unknown tail strategy '" + flag +
                              "' (expected exact|normal|approx)");
  return spec;
}

std::string TailSpec::name() const {
  switch (strategy) {
    case Strategy::exact_mc:
      return "exact:" + sampler.name() + ":Nz=" + std::to_string(n_z) +
             (smoothing ? ":smoothed" : ":raw");
    case Strategy::normal_hbe: return "normal-hbe";
    case Strategy::kurtosis_approx: return "approx:kappa=" + std::to_string(kappa_z);
  }
  return "?";
}

void TailSpec::validate() const {
  require(q > 0.0 && q < 1.0, "tail spec: q must lie in (0,1)");
  if (strategy == Strategy::exact_mc) {
    require(n_z >= 100, "tail spec: exact strategy needs N_z >= 100");
    sampler.validate();
  }
  if (strategy == Strategy::kurtosis_approx)
    require(kappa_z >= -2.0, "tail spec: excess kurtosis must be >= -2");
}

double mse_lr_given_z(const Matrix& R, const Vector& z) {
  require(R.rows() == R.cols() && R.rows() == z.size(),
          "mse_lr_given_z: dimension mismatch");
  const double n = static_cast<double>(z.size());
  return z.dot(R * z) / (n * n);
}

double mse_dm_given_z(const Matrix& sigma_w, const Matrix& X, const Vector& beta,
                      const Vector& z) {
  require(sigma_w.rows() == z.size() && X.rows() == z.size() && X.cols() == beta.size(),
          "mse_dm_given_z: dimension mismatch");
  const double n = static_cast<double>(z.size());
  Vector v = X * beta + z;
  return v.dot(sigma_w * v) / (n * n);
}

namespace {

double balance_trace(const StrategyMoments& m, const ProjectionCache& cache) {
  // tr(X_perp' Sigma_W X_perp)
  return (cache.X_perp.transpose() * m.sigma_w * cache.X_perp).trace();
}

void require_forced_balance(const StrategyMoments& m, const std::string& where) {
  double worst = (m.sigma_w * Vector::Ones(m.sigma_w.rows())).cwiseAbs().maxCoeff();
  if (worst > 1e-8 * static_cast<double>(m.sigma_w.rows()))
    throw validation_error(where + ": moments do not satisfy forced balance "
                                   "(Sigma_W * 1 != 0)");
}

}  // namespace

double expected_mse_lr(const StrategyMoments& m, const ProjectionCache& cache,
                       double sigma2_z) {
  require(sigma2_z > 0.0, "expected_mse_lr: sigma2_z must be positive");
  const double n = static_cast<double>(cache.n);
  return sigma2_z / n + sigma2_z / (n * n) * balance_trace(m, cache);
}

double expected_mse_dm(const StrategyMoments& m, const Matrix& X,
                       const Vector& beta, double sigma2_z) {
  require(sigma2_z > 0.0, "expected_mse_dm: sigma2_z must be positive");
  const double n = static_cast<double>(X.rows());
  Vector xb = X * beta;
  return sigma2_z / n + xb.dot(m.sigma_w * xb) / (n * n);
}

double se_mse_dm(const StrategyMoments& m, const Matrix& X, const Vector& beta,
                 double sigma2_z, double kappa_z) {
  require(sigma2_z > 0.0, "se_mse_dm: sigma2_z must be positive");
  require(kappa_z >= -2.0, "se_mse_dm: excess kurtosis must be >= -2");
  require_forced_balance(m, "se_mse_dm");
  const double n = static_cast<double>(X.rows());
  Vector sxb = m.sigma_w * (X * beta);
  double inner = n * kappa_z + 2.0 * m.sigma_w.squaredNorm() +
                 4.0 / sigma2_z * sxb.squaredNorm();
  return sigma2_z / (n * n) * std::sqrt(std::max(0.0, inner));
}

double se_mse_lr(const StrategyMoments& m, const ProjectionCache& cache,
                 double sigma2_z, double kappa_z) {
  require(sigma2_z > 0.0, "se_mse_lr: sigma2_z must be positive");
  require(kappa_z >= -2.0, "se_mse_lr: excess kurtosis must be >= -2");
  const double n = static_cast<double>(cache.n);
  CriterionMatrices cm = criterion_matrices(m, cache);
  double rand2 = cm.G.squaredNorm();                    // tr(G^2)
  double tr_gd = cm.G.cwiseProduct(m.d).sum();          // tr(GD)
  double tr_d2 = m.d.squaredNorm();                     // tr(D^2)
  double ss = (cm.G.diagonal() + (2.0 / n) * m.d.diagonal()).squaredNorm();
  double inner = 2.0 * rand2 + 8.0 / n * tr_gd + 8.0 / (n * n) * tr_d2 + kappa_z * ss;
  return sigma2_z / (n * n) * std::sqrt(std::max(0.0, inner));
}

double hbe_quantile(const Vector& lambdas, double q) {
  require(q > 0.0 && q < 1.0, "hbe_quantile: q must lie in (0,1)");
  require(lambdas.size() > 0, "hbe_quantile: empty eigenvalue list");
  double m1 = 0.0, m2 = 0.0, m3 = 0.0;
  for (Index i = 0; i < lambdas.size(); ++i) {
    double l = lambdas[i];
    require(l >= -1e-8, "hbe_quantile: eigenvalue below -1e-8");
    if (l < 0.0) l = 0.0;
    m1 += l;
    m2 += l * l;
    m3 += l * l * l;
  }
  if (m3 <= 0.0)
    throw numerical_error("hbe_quantile: degenerate distribution, all weights zero");
  double a = m3 / m2;
  double nu = m2 * m2 * m2 / (m3 * m3);
  double b = m1 - a * nu;
  return a * chi2_quantile(q, nu) + b;
}

double tail_normal_lr(const StrategyMoments& m, const ProjectionCache& cache,
                      double q, double* clamped_mass) {
  CriterionMatrices cm = criterion_matrices(m, cache);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cm.R, Eigen::EigenvaluesOnly);
  Vector lam = eig.eigenvalues();
  double abs_total = lam.cwiseAbs().sum();
  double neg_mass = 0.0;
  for (Index i = 0; i < lam.size(); ++i)
    if (lam[i] < 0.0) {
      neg_mass += -lam[i];
      lam[i] = 0.0;
    }
  if (clamped_mass) *clamped_mass = (abs_total > 0.0) ? neg_mass / abs_total : 0.0;
  return hbe_quantile(lam, q);
}

double tail_exact_lr(const StrategyMoments& m, const ProjectionCache& cache,
                     double q, const ZSampler& sampler, Index n_z,
                     std::uint64_t seed) {
  require(q > 0.0 && q < 1.0, "tail_exact_lr: q must lie in (0,1)");
  require(n_z >= 100, "tail_exact_lr: need N_z >= 100");
  sampler.validate();
  CriterionMatrices cm = criterion_matrices(m, cache);
  const Index n = cache.n;
  Vector values(n_z);
  parallel_blocks(n_z, 256, [&](Index begin, Index end, Index) {
    Vector z(n);
    for (Index i = begin; i < end; ++i) {
      Rng rng = Rng(seed).child(static_cast<std::uint64_t>(i));
      sampler.draw(rng, z);
      values[i] = z.dot(cm.R * z);
    }
  });
  return empirical_quantile(std::move(values), q);
}

double tail_approx_lr(const StrategyMoments& m, const ProjectionCache& cache,
                      double q, double kappa_z) {
  require(q > 0.0 && q < 1.0, "tail_approx_lr: q must lie in (0,1)");
  require(kappa_z >= -2.0, "tail_approx_lr: excess kurtosis must be >= -2");
  const double n = static_cast<double>(cache.n);
  CriterionMatrices cm = criterion_matrices(m, cache);
  double bal = balance_trace(m, cache);
  double rand2 = cm.G.squaredNorm();
  double tr_gd = cm.G.cwiseProduct(m.d).sum();
  double tr_d2 = m.d.squaredNorm();
  double ss = (cm.G.diagonal() + (2.0 / n) * m.d.diagonal()).squaredNorm();
  double c = normal_quantile(q);
  double inner = 2.0 * rand2 + 8.0 / n * tr_gd + 8.0 / (n * n) * tr_d2 + kappa_z * ss;
  return bal + c * std::sqrt(std::max(0.0, inner));
}

double q_prime_dm(const StrategyMoments& m, const Matrix& X, const Vector& beta,
                  double sigma2_z, double q, double kappa_z) {
  require(q > 0.0 && q < 1.0, "q_prime_dm: q must lie in (0,1)");
  require(sigma2_z > 0.0, "q_prime_dm: sigma2_z must be positive");
  require(kappa_z >= -2.0, "q_prime_dm: excess kurtosis must be >= -2");
  const double n = static_cast<double>(X.rows());
  Vector xb = X * beta;
  double bal1 = xb.dot(m.sigma_w * xb);
  double bal2 = (m.sigma_w * xb).squaredNorm();
  double c = normal_quantile(q);
  double inner = n * kappa_z + 2.0 * m.sigma_w.squaredNorm() + 4.0 / sigma2_z * bal2;
  return bal1 + c * sigma2_z * std::sqrt(std::max(0.0, inner));
}

double tail_criterion(const StrategyMoments& m, const ProjectionCache& cache,
                      const TailSpec& spec, double* clamped_mass) {
  spec.validate();
  if (clamped_mass) *clamped_mass = 0.0;
  switch (spec.strategy) {
    case TailSpec::Strategy::exact_mc:
      return tail_exact_lr(m, cache, spec.q, spec.sampler, spec.n_z, spec.seed);
    case TailSpec::Strategy::normal_hbe:
      return tail_normal_lr(m, cache, spec.q, clamped_mass);
    case TailSpec::Strategy::kurtosis_approx:
      return tail_approx_lr(m, cache, spec.q, spec.kappa_z);
  }
  throw validation_error("tail_criterion: unknown strategy");
}

double empirical_quantile(Vector values, double q) {
  require(values.size() > 0, "empirical_quantile: empty sample");
  require(q > 0.0 && q < 1.0, "empirical_quantile: q must lie in (0,1)");
  std::sort(values.begin(), values.end());
  double h = (static_cast<double>(values.size()) - 1.0) * q;
  Index lo = static_cast<Index>(std::floor(h));
  Index hi = std::min(lo + 1, values.size() - 1);
  double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace rerand
