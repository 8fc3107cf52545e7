#ifndef RERAND_MOMENTS_HPP
#define RERAND_MOMENTS_HPP

#include "rerand/balance.hpp"
#include "rerand/common.hpp"

namespace rerand {

struct ProjectionCache {
  Matrix P;          // n x n projector onto the column space of X
  Matrix I_minus_P;  // residual projector
  Matrix X_perp;     // n x p orthogonalized covariates X (X'X)^{-1/2}
  Index n = 0;
  Index p = 0;
};

ProjectionCache projection_cache(const Matrix& X);

/// Second- and quartic-moment matrices of the assignment distribution given
/// by the first s ranked vectors. sigma_sum and d_sum hold the undivided
/// accumulator sums: sigma_sum has exact integer entries, so the forced
/// balance identities (row sums zero, diagonal s) hold exactly there, while
/// sigma_w = sigma_sum / s carries one rounding per entry.
struct StrategyMoments {
  Matrix sigma_w;    // (1/s) sum of w w'
  Matrix d;          // (1/s) sum of (w'Pw) w w'
  Index s = 0;
  Matrix sigma_sum;
  Matrix d_sum;
};

/// Builds moments with consistent sums from already-divided matrices
/// (synthetic moments in tests).
StrategyMoments make_moments(const Matrix& sigma_w, const Matrix& d, Index s);

StrategyMoments moments_from_prefix(const RankedPool& ranked, Index s,
                                    const ProjectionCache& cache);

/// One-assignment update; equals moments_from_prefix over the extended prefix
/// up to rounding of the divide.
StrategyMoments increment_moments(const StrategyMoments& m, const Vector& w,
                                  const ProjectionCache& cache);

/// Streaming accumulator used by the threshold sweep; snapshots are
/// bit-identical to batch recomputation because only exact sums are stored.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(const ProjectionCache& cache)
      : cache_(&cache),
        sigma_sum_(Matrix::Zero(cache.n, cache.n)),
        d_sum_(Matrix::Zero(cache.n, cache.n)) {}

  void add(const Vector& w);
  StrategyMoments snapshot() const;
  Index count() const { return s_; }

 private:
  const ProjectionCache* cache_;
  Matrix sigma_sum_, d_sum_;
  Index s_ = 0;
};

struct CriterionMatrices {
  Matrix G;  // (I-P) Sigma_W (I-P)
  Matrix R;  // G + (2/n) D, symmetrized
};

CriterionMatrices criterion_matrices(const StrategyMoments& m,
                                     const ProjectionCache& cache);

}  // namespace rerand

#endif  // RERAND_MOMENTS_HPP
