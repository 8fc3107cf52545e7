#include <doctest.h>

#include <cmath>

#include "rerand/parallel.hpp"
#include "rerand/special.hpp"
#include "rerand/tail.hpp"
#include "oracles.hpp"

using namespace rerand;

namespace {

struct Instance {
  Matrix X;
  ProjectionCache cache;
  RankedPool ranked;
};

Instance enumeration_instance(Index n, Index p, std::uint64_t seed) {
  Instance inst;
  inst.X = oracles::random_standardized(n, p, seed);
  inst.cache = projection_cache(inst.X);
  inst.ranked = rank_pool(inst.X, enumerate_balanced(n), BalanceMetric{});
  return inst;
}

Matrix prefix_columns(const RankedPool& ranked, Index s) {
  return ranked.pool.assignments.leftCols(s);
}

}  // namespace

TEST_CASE("mse_lr_given_z basics: zero z, column-space z") {
  Instance inst = enumeration_instance(8, 1, 301);
  StrategyMoments m = moments_from_prefix(inst.ranked, 20, inst.cache);
  CriterionMatrices cm = criterion_matrices(m, inst.cache);
  CHECK(mse_lr_given_z(cm.R, Vector::Zero(8)) == 0.0);

  // with D = 0 the criterion is z'Gz alone, which vanishes on the column space
  StrategyMoments g_only = make_moments(m.sigma_w, Matrix::Zero(8, 8), m.s);
  CriterionMatrices cm_g = criterion_matrices(g_only, inst.cache);
  Vector z_in = inst.X * Vector::Constant(1, 2.5);
  CHECK(mse_lr_given_z(cm_g.R, z_in) == doctest::Approx(0.0).epsilon(1e-12));
}

// The third-order expansion of (1 - B)^-2 is poor at B ~ 0.5 (truncation error
// above 100% for unlucky z), so the 5% agreement band is checked where the
// expansion is actually valid: per-z on low-imbalance pools, and z-averaged
// up to B < 0.3.
TEST_CASE("third-order MSE tracks the enumeration oracle on low-imbalance pools") {
  const Index n = 8;
  Instance inst = enumeration_instance(n, 1, 303);

  SUBCASE("per-z within 5% when pool imbalance < 0.05") {
    Index s = 0;
    while (s < inst.ranked.pool.size() && inst.ranked.imbalances[s] < 0.05) ++s;
    REQUIRE(s >= 8);
    Matrix pool = prefix_columns(inst.ranked, s);
    StrategyMoments m = moments_from_prefix(inst.ranked, s, inst.cache);
    CriterionMatrices cm = criterion_matrices(m, inst.cache);
    oracles::PolarGaussian g(305);
    for (int t = 0; t < 5; ++t) {
      Vector z(n);
      for (Index i = 0; i < n; ++i) z[i] = g.next();
      double approx = mse_lr_given_z(cm.R, z);
      double exact = oracles::enumeration_mse_lr(pool, inst.cache.P, z);
      CHECK(approx == doctest::Approx(exact).epsilon(0.05));
    }
  }

  SUBCASE("z-averaged within 5% when pool imbalance < 0.3") {
    Index s = 0;
    while (s < inst.ranked.pool.size() && inst.ranked.imbalances[s] < 0.3) ++s;
    Matrix pool = prefix_columns(inst.ranked, s);
    StrategyMoments m = moments_from_prefix(inst.ranked, s, inst.cache);
    CriterionMatrices cm = criterion_matrices(m, inst.cache);
    oracles::PolarGaussian g(307);
    double sum_approx = 0.0, sum_exact = 0.0;
    for (int t = 0; t < 2000; ++t) {
      Vector z(n);
      for (Index i = 0; i < n; ++i) z[i] = g.next();
      sum_approx += mse_lr_given_z(cm.R, z);
      sum_exact += oracles::enumeration_mse_lr(pool, inst.cache.P, z);
    }
    CHECK(sum_approx == doctest::Approx(sum_exact).epsilon(0.05));
  }
}

TEST_CASE("mse_dm_given_z is the exact pool average") {
  const Index n = 8;
  Instance inst = enumeration_instance(n, 2, 309);
  Vector beta(2);
  beta << 0.7, -1.2;

  SUBCASE("zero signal, zero noise") {
    StrategyMoments m = moments_from_prefix(inst.ranked, 10, inst.cache);
    CHECK(mse_dm_given_z(m.sigma_w, inst.X, Vector::Zero(2), Vector::Zero(n)) == 0.0);
  }
  SUBCASE("mirror pair collapses to one squared projection") {
    Vector w = inst.ranked.pool.assignment(5);
    StrategyMoments m = make_moments(w * w.transpose(), Matrix::Zero(n, n), 2);
    oracles::PolarGaussian g(311);
    Vector z(n);
    for (Index i = 0; i < n; ++i) z[i] = g.next();
    Vector v = inst.X * beta + z;
    double direct = std::pow(w.dot(v) / static_cast<double>(n), 2);
    CHECK(mse_dm_given_z(m.sigma_w, inst.X, beta, z) ==
          doctest::Approx(direct).epsilon(1e-12));
  }
  SUBCASE("full enumeration matches the oracle to 1e-10") {
    Index s = inst.ranked.pool.size();
    StrategyMoments m = moments_from_prefix(inst.ranked, s, inst.cache);
    oracles::PolarGaussian g(313);
    Vector z(n);
    for (Index i = 0; i < n; ++i) z[i] = g.next();
    double exact = oracles::enumeration_mse_dm(prefix_columns(inst.ranked, s),
                                               inst.X * beta + z);
    CHECK(mse_dm_given_z(m.sigma_w, inst.X, beta, z) ==
          doctest::Approx(exact).epsilon(1e-10));
  }
}

TEST_CASE("expected_mse_lr: orthogonal mirror pair, trace identity, Monte Carlo") {
  const Index n = 10;
  const double sigma2 = 2.3;

  SUBCASE("prefix {w,-w} with X'w = 0 gives exactly sigma^2/n") {
    Vector w = oracles::random_balanced(n, 331);
    Matrix raw = oracles::random_standardized(n, 1, 333);
    // remove the w-component, then recenter/rescale (keeps X'w = 0)
    raw.col(0) -= (raw.col(0).dot(w) / static_cast<double>(n)) * w;
    Matrix X = raw;
    X.col(0).array() -= X.col(0).mean();
    X.col(0) /= std::sqrt(X.col(0).squaredNorm() / static_cast<double>(n - 1));
    REQUIRE(std::abs(X.col(0).dot(w)) < 1e-12);
    ProjectionCache cache = projection_cache(X);
    StrategyMoments m = make_moments(w * w.transpose(),
                                     (w.dot(cache.P * w)) * (w * w.transpose()), 2);
    CHECK(expected_mse_lr(m, cache, sigma2) ==
          doctest::Approx(sigma2 / n).epsilon(1e-12));
  }

  Instance inst = enumeration_instance(8, 2, 335);
  StrategyMoments m = moments_from_prefix(inst.ranked, 24, inst.cache);
  CriterionMatrices cm = criterion_matrices(m, inst.cache);

  SUBCASE("equals (sigma^2/n^2) tr(R)") {
    double via_trace = sigma2 / 64.0 * cm.R.trace();
    CHECK(expected_mse_lr(m, inst.cache, sigma2) ==
          doctest::Approx(via_trace).epsilon(1e-10));
  }
  SUBCASE("matches the Monte Carlo mean within 3 standard errors") {
    const Index draws = 10000;
    oracles::PolarGaussian g(337);
    Vector vals(draws);
    for (Index t = 0; t < draws; ++t) {
      Vector z(8);
      for (Index i = 0; i < 8; ++i) z[i] = std::sqrt(sigma2) * g.next();
      vals[t] = mse_lr_given_z(cm.R, z);
    }
    double mc = vals.mean();
    double se = std::sqrt((vals.array() - mc).square().sum() / (draws - 1.0) /
                          static_cast<double>(draws));
    CHECK(std::abs(expected_mse_lr(m, inst.cache, sigma2) - mc) <= 3.0 * se);
  }
}

TEST_CASE("expected_mse_dm: zero signal, Monte Carlo, closed-form BCRD") {
  const double sigma2 = 1.7;
  Instance inst = enumeration_instance(6, 1, 339);
  Index s_full = inst.ranked.pool.size();
  StrategyMoments m = moments_from_prefix(inst.ranked, s_full, inst.cache);
  Vector beta(1);
  beta << 0.9;

  CHECK(expected_mse_dm(m, inst.X, Vector::Zero(1), sigma2) ==
        doctest::Approx(sigma2 / 6.0).epsilon(1e-12));

  SUBCASE("Monte Carlo over gaussian z within 3 SE") {
    const Index draws = 10000;
    oracles::PolarGaussian g(341);
    Vector vals(draws);
    for (Index t = 0; t < draws; ++t) {
      Vector z(6);
      for (Index i = 0; i < 6; ++i) z[i] = std::sqrt(sigma2) * g.next();
      vals[t] = mse_dm_given_z(m.sigma_w, inst.X, beta, z);
    }
    double mc = vals.mean();
    double se = std::sqrt((vals.array() - mc).square().sum() / (draws - 1.0) /
                          static_cast<double>(draws));
    CHECK(std::abs(expected_mse_dm(m, inst.X, beta, sigma2) - mc) <= 3.0 * se);
  }
  SUBCASE("full BCRD closed form via off-diagonals -1/(n-1)") {
    // Sigma_W = (n I - J)/(n-1) and 1'X beta = 0, so the balance term is
    // n/(n-1) ||X beta||^2 / n^2
    Vector xb = inst.X * beta;
    double direct = sigma2 / 6.0 + (6.0 / 5.0) * xb.squaredNorm() / 36.0;
    CHECK(expected_mse_dm(m, inst.X, beta, sigma2) ==
          doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("se_mse_dm: term deletion, Monte Carlo SD, kurtosis monotonicity") {
  const double sigma2 = 1.3;
  Instance inst = enumeration_instance(8, 2, 343);
  StrategyMoments m =
      moments_from_prefix(inst.ranked, inst.ranked.pool.size(), inst.cache);
  Vector beta(2);
  beta << 0.8, -0.4;

  CHECK(se_mse_dm(m, inst.X, Vector::Zero(2), sigma2, 0.0) ==
        doctest::Approx(sigma2 / 64.0 * std::sqrt(2.0) * m.sigma_w.norm())
            .epsilon(1e-12));
  CHECK(se_mse_dm(m, inst.X, beta, sigma2, 3.0) >
        se_mse_dm(m, inst.X, beta, sigma2, 0.0));

  SUBCASE("matches the sample SD over 1e5 gaussian draws within 5%") {
    const Index draws = 100000;
    Vector vals(draws);
    parallel_blocks(draws, 4096, [&](Index begin, Index end, Index block) {
      oracles::PolarGaussian g(derive_seed(345, static_cast<std::uint64_t>(block)));
      for (Index t = begin; t < end; ++t) {
        Vector z(8);
        for (Index i = 0; i < 8; ++i) z[i] = std::sqrt(sigma2) * g.next();
        vals[t] = mse_dm_given_z(m.sigma_w, inst.X, beta, z);
      }
    });
    double mean = vals.mean();
    double sd = std::sqrt((vals.array() - mean).square().sum() / (draws - 1.0));
    CHECK(se_mse_dm(m, inst.X, beta, sigma2, 0.0) == doctest::Approx(sd).epsilon(0.05));
  }

  SUBCASE("non-forced-balance moments are rejected") {
    Matrix bad = m.sigma_w;
    bad(0, 1) += 0.5;
    bad(1, 0) += 0.5;
    StrategyMoments mb = make_moments(bad, m.d, m.s);
    CHECK_THROWS_WITH_AS(se_mse_dm(mb, inst.X, beta, sigma2, 0.0),
                         doctest::Contains("forced balance"), validation_error);
  }
}

TEST_CASE("se_mse_lr: matrix-expression oracle and Monte Carlo SD") {
  const double sigma2 = 0.9;
  Instance inst = enumeration_instance(8, 1, 347);
  StrategyMoments m = moments_from_prefix(inst.ranked, 30, inst.cache);
  CriterionMatrices cm = criterion_matrices(m, inst.cache);

  SUBCASE("equals (sigma^2/n^2) sqrt(2 tr(R^2) + kappa sum R_ii^2)") {
    for (double kappa : {0.0, 3.0}) {
      double tr_r2 = (cm.R * cm.R).trace();
      double ss = cm.R.diagonal().squaredNorm();
      double direct = sigma2 / 64.0 * std::sqrt(2.0 * tr_r2 + kappa * ss);
      CHECK(se_mse_lr(m, inst.cache, sigma2, kappa) ==
            doctest::Approx(direct).epsilon(1e-10));
    }
  }
  SUBCASE("matches the sample SD over 1e5 gaussian draws within 5%") {
    const Index draws = 100000;
    Vector vals(draws);
    parallel_blocks(draws, 4096, [&](Index begin, Index end, Index block) {
      oracles::PolarGaussian g(derive_seed(349, static_cast<std::uint64_t>(block)));
      for (Index t = begin; t < end; ++t) {
        Vector z(8);
        for (Index i = 0; i < 8; ++i) z[i] = std::sqrt(sigma2) * g.next();
        vals[t] = mse_lr_given_z(cm.R, z);
      }
    });
    double mean = vals.mean();
    double sd = std::sqrt((vals.array() - mean).square().sum() / (draws - 1.0));
    CHECK(se_mse_lr(m, inst.cache, sigma2, 0.0) == doctest::Approx(sd).epsilon(0.05));
  }
}

TEST_CASE("hbe_quantile: chi-square reductions, scaling, Monte Carlo accuracy") {
  SUBCASE("equal weights reduce to a plain chi-square") {
    for (Index k : {Index(1), Index(5), Index(40)}) {
      Vector lam = Vector::Ones(k);
      for (double q : {0.5, 0.9, 0.99})
        CHECK(hbe_quantile(lam, q) ==
              doctest::Approx(chi2_quantile(q, static_cast<double>(k))).epsilon(1e-12));
    }
  }
  SUBCASE("single weight is pure scaling") {
    Vector lam(1);
    lam << 2.0;
    CHECK(hbe_quantile(lam, 0.9) ==
          doctest::Approx(2.0 * chi2_quantile(0.9, 1.0)).epsilon(1e-12));
  }
  SUBCASE("positively homogeneous") {
    Vector lam(4);
    lam << 0.3, 1.1, 2.2, 5.0;
    CHECK(hbe_quantile(3.7 * lam, 0.95) ==
          doctest::Approx(3.7 * hbe_quantile(lam, 0.95)).epsilon(1e-12));
  }
  SUBCASE("lambda = (1,2,3) against a 1e6-draw Monte Carlo oracle") {
    Vector lam(3);
    lam << 1.0, 2.0, 3.0;
    double mc = oracles::mc_chi2_mix_quantile(lam, 0.95, 1000000, 351);
    CHECK(hbe_quantile(lam, 0.95) == doctest::Approx(mc).epsilon(0.02));
  }
  SUBCASE("degenerate and invalid inputs") {
    CHECK_THROWS_AS(hbe_quantile(Vector::Zero(3), 0.95), numerical_error);
    Vector neg(2);
    neg << 1.0, -0.5;
    CHECK_THROWS_AS(hbe_quantile(neg, 0.95), validation_error);
    Vector tiny_neg(2);
    tiny_neg << 1.0, -1e-9;  // inside the clamp band
    CHECK(hbe_quantile(tiny_neg, 0.95) > 0.0);
  }
}

TEST_CASE("tail_normal_lr: quantile monotonicity, MC agreement, order invariance") {
  Instance inst = enumeration_instance(8, 1, 353);
  StrategyMoments m = moments_from_prefix(inst.ranked, 30, inst.cache);

  CHECK(tail_normal_lr(m, inst.cache, 0.5) <= tail_normal_lr(m, inst.cache, 0.95));
  CHECK(tail_normal_lr(m, inst.cache, 0.95) <= tail_normal_lr(m, inst.cache, 0.99));

  SUBCASE("agrees with the empirical quantile of z'Rz within 3%") {
    CriterionMatrices cm = criterion_matrices(m, inst.cache);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cm.R, Eigen::EigenvaluesOnly);
    double mc = oracles::mc_chi2_mix_quantile(eig.eigenvalues().cwiseMax(0.0), 0.95,
                                              100000, 355);
    CHECK(tail_normal_lr(m, inst.cache, 0.95) == doctest::Approx(mc).epsilon(0.03));
  }
  SUBCASE("pool order does not matter") {
    // {w,-w} and {-w,w} carry identical moments
    Vector w = inst.ranked.pool.assignment(3);
    StrategyMoments fwd = make_moments(w * w.transpose(),
                                       w.dot(inst.cache.P * w) * (w * w.transpose()), 2);
    Vector mw = -w;
    StrategyMoments rev = make_moments(mw * mw.transpose(),
                                       mw.dot(inst.cache.P * mw) * (mw * mw.transpose()), 2);
    CHECK(tail_normal_lr(fwd, inst.cache, 0.9) == tail_normal_lr(rev, inst.cache, 0.9));
  }
}

TEST_CASE("tail_exact_lr: determinism, constant sampler, convergence to HBE") {
  Instance inst = enumeration_instance(8, 1, 357);
  StrategyMoments m = moments_from_prefix(inst.ranked, 30, inst.cache);
  ZSampler gaussian = ZSampler::parse("gaussian");

  double first = tail_exact_lr(m, inst.cache, 0.95, gaussian, 5000, 99);
  double second = tail_exact_lr(m, inst.cache, 0.95, gaussian, 5000, 99);
  CHECK(first == second);
  CHECK(first != tail_exact_lr(m, inst.cache, 0.95, gaussian, 5000, 100));

  SUBCASE("constant custom sampler hits z0'Rz0 at any q") {
    ZSampler constant;
    constant.family = ZSampler::Family::custom;
    constant.table = Matrix::Zero(1, 8);
    constant.table.row(0) << 1, -1, 2, 0.5, -0.25, 3, -2, 0.1;
    CriterionMatrices cm = criterion_matrices(m, inst.cache);
    Vector z0 = constant.table.row(0).transpose();
    double expected = z0.dot(cm.R * z0);
    for (double q : {0.1, 0.5, 0.95})
      CHECK(tail_exact_lr(m, inst.cache, q, constant, 500, 1) ==
            doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("large N_z converges to the HBE value") {
    double exact = tail_exact_lr(m, inst.cache, 0.95, gaussian, 200000, 11);
    CHECK(exact == doctest::Approx(tail_normal_lr(m, inst.cache, 0.95)).epsilon(0.03));
  }
  SUBCASE("agreement holds at n = 50 with 1e5 draws") {
    Matrix X50 = oracles::random_standardized(50, 5, 367);
    ProjectionCache cache50 = projection_cache(X50);
    RankedPool ranked50 =
        rank_pool(X50, mirror_close(sample_bcrd(50, 400, 369)), BalanceMetric{});
    StrategyMoments m50 = moments_from_prefix(ranked50, 200, cache50);
    double exact = tail_exact_lr(m50, cache50, 0.95, gaussian, 100000, 13);
    CHECK(exact == doctest::Approx(tail_normal_lr(m50, cache50, 0.95)).epsilon(0.03));
  }
  SUBCASE("independent of the worker count") {
    setenv("RERAND_THREADS", "1", 1);
    double serial = tail_exact_lr(m, inst.cache, 0.95, gaussian, 4000, 7);
    setenv("RERAND_THREADS", "8", 1);
    double parallel = tail_exact_lr(m, inst.cache, 0.95, gaussian, 4000, 7);
    unsetenv("RERAND_THREADS");
    CHECK(serial == parallel);
  }
}

TEST_CASE("tail_approx_lr: gaussian c, kurtosis monotonicity, expression oracle") {
  CHECK(normal_quantile(0.95) == doctest::Approx(1.65).epsilon(0.01));

  Instance inst = enumeration_instance(8, 2, 359);
  StrategyMoments m = moments_from_prefix(inst.ranked, 24, inst.cache);
  CHECK(tail_approx_lr(m, inst.cache, 0.95, 3.0) >=
        tail_approx_lr(m, inst.cache, 0.95, 0.0));

  CriterionMatrices cm = criterion_matrices(m, inst.cache);
  double bal = (inst.cache.X_perp.transpose() * m.sigma_w * inst.cache.X_perp).trace();
  double rand2 = (cm.G * cm.G).trace();
  double tr_gd = (cm.G * m.d).trace();
  double tr_d2 = (m.d * m.d).trace();
  double ss = cm.R.diagonal().squaredNorm();
  for (double kappa : {0.0, 3.0}) {
    double direct = bal + normal_quantile(0.95) *
                              std::sqrt(2.0 * rand2 + (8.0 / 8.0) * tr_gd +
                                        (8.0 / 64.0) * tr_d2 + kappa * ss);
    CHECK(tail_approx_lr(m, inst.cache, 0.95, kappa) ==
          doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("q_prime_dm: zero signal reduction and recombination identity") {
  Instance inst = enumeration_instance(8, 2, 361);
  StrategyMoments m = moments_from_prefix(inst.ranked, 20, inst.cache);
  const double sigma2 = 2.0, q = 0.95;
  Vector beta(2);
  beta << 1.1, -0.3;

  double zero_signal = q_prime_dm(m, inst.X, Vector::Zero(2), sigma2, q, 3.0);
  double expected = normal_quantile(q) * sigma2 *
                    std::sqrt(8.0 * 3.0 + 2.0 * m.sigma_w.squaredNorm());
  CHECK(zero_signal == doctest::Approx(expected).epsilon(1e-12));

  // Q'_DM = n^2 (E + c SE - sigma^2/n): same objective minus affine constants
  double recombined =
      64.0 * (expected_mse_dm(m, inst.X, beta, sigma2) +
              normal_quantile(q) * se_mse_dm(m, inst.X, beta, sigma2, 3.0) -
              sigma2 / 8.0);
  CHECK(q_prime_dm(m, inst.X, beta, sigma2, q, 3.0) ==
        doctest::Approx(recombined).epsilon(1e-10));
}

TEST_CASE("all three strategies rank a dominated pair identically") {
  // Sigma and D grow by explicit PSD increments aligned with the BAL
  // direction (range of P) and the RAND direction (range of I-P), so
  // R_2 - R_1 is PSD and domination of all criterion ingredients is
  // asserted, then every strategy must agree on the ranking.
  Instance inst = enumeration_instance(8, 1, 363);
  StrategyMoments base = moments_from_prefix(inst.ranked, 20, inst.cache);

  oracles::PolarGaussian g(365);
  Vector a(8), b(8);
  for (Index i = 0; i < 8; ++i) {
    a[i] = g.next();
    b[i] = g.next();
  }
  Vector qa = inst.cache.I_minus_P * a;  // RAND direction
  Vector pb = inst.cache.P * b;          // BAL direction
  Matrix sigma2 = base.sigma_w + 0.4 * (qa * qa.transpose()) + 0.4 * (pb * pb.transpose());
  Matrix d2 = base.d + 0.4 * (b * b.transpose());
  StrategyMoments worse = make_moments(sigma2, d2, base.s);

  CriterionMatrices c1 = criterion_matrices(base, inst.cache);
  CriterionMatrices c2 = criterion_matrices(worse, inst.cache);
  double bal_1 = (inst.cache.X_perp.transpose() * base.sigma_w * inst.cache.X_perp).trace();
  double bal_2 = (inst.cache.X_perp.transpose() * worse.sigma_w * inst.cache.X_perp).trace();
  REQUIRE(bal_2 > bal_1);
  REQUIRE(c2.G.squaredNorm() > c1.G.squaredNorm());
  REQUIRE(worse.d.squaredNorm() > base.d.squaredNorm());
  Eigen::SelfAdjointEigenSolver<Matrix> delta(c2.R - c1.R, Eigen::EigenvaluesOnly);
  REQUIRE(delta.eigenvalues().minCoeff() >= -1e-10);

  CHECK(tail_normal_lr(worse, inst.cache, 0.95) > tail_normal_lr(base, inst.cache, 0.95));
  CHECK(tail_approx_lr(worse, inst.cache, 0.95, 0.0) >
        tail_approx_lr(base, inst.cache, 0.95, 0.0));
  ZSampler gaussian = ZSampler::parse("gaussian");
  CHECK(tail_exact_lr(worse, inst.cache, 0.95, gaussian, 20000, 5) >
        tail_exact_lr(base, inst.cache, 0.95, gaussian, 20000, 5));
}

TEST_CASE("tail spec validation") {
  TailSpec spec;
  spec.q = 1.2;
  CHECK_THROWS_AS(spec.validate(), validation_error);
  spec.q = 0.95;
  spec.strategy = TailSpec::Strategy::exact_mc;
  spec.n_z = 50;
  CHECK_THROWS_AS(spec.validate(), validation_error);
  spec.n_z = 100;
  CHECK_NOTHROW(spec.validate());
  spec.strategy = TailSpec::Strategy::kurtosis_approx;
  spec.kappa_z = -3.0;
  CHECK_THROWS_AS(spec.validate(), validation_error);
  CHECK(TailSpec::parse("normal").strategy == TailSpec::Strategy::normal_hbe);
  CHECK_THROWS_AS(TailSpec::parse("bootstrap"), validation_error);
}
