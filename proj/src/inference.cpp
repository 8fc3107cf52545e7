#include "rerand/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rerand/estimators.hpp"
#include "rerand/parallel.hpp"
#include "rerand/rng.hpp"

namespace rerand {

namespace {

Index find_in_design(const DesignResult& design, const Vector& w_exp) {
  std::string key = format_assignment(w_exp);
  for (Index i = 0; i < design.w_star.cols(); ++i)
    if (format_assignment(design.w_star.col(i)) == key) return i;
  throw validation_error("design mismatch: w_exp is not a member of W*; "
                         "replicates must come from the design that was run");
}

/// R indices drawn uniformly without replacement from W* minus the realized
/// assignment; all of them when fewer than R remain.
std::vector<Index> replicate_indices(const DesignResult& design, Index exp_index,
                                     Index R, std::uint64_t seed) {
  std::vector<Index> candidates;
  candidates.reserve(static_cast<size_t>(design.s_star - 1));
  for (Index i = 0; i < design.s_star; ++i)
    if (i != exp_index) candidates.push_back(i);
  const Index m = static_cast<Index>(candidates.size());
  if (m <= R) return candidates;
  Rng rng(derive_seed(seed, 0x7265706cULL));
  for (Index i = 0; i < R; ++i) {
    Index j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(m - i)));
    std::swap(candidates[static_cast<size_t>(i)], candidates[static_cast<size_t>(j)]);
  }
  candidates.resize(static_cast<size_t>(R));
  return candidates;
}

void validate_record(const DesignResult& design, const Matrix& X,
                     const ExperimentRecord& record) {
  require(record.y.size() == design.n, "inference: y length differs from design n");
  require(record.w_exp.size() == design.n, "inference: w_exp length differs from design n");
  require(record.y.allFinite(), "inference: y contains non-finite values");
  require(X.rows() == design.n, "inference: covariate rows differ from design n");
  require_balanced(record.w_exp, "inference");
}

}  // namespace

TestResult randomization_test(const DesignResult& design, const Matrix& X,
                              const ExperimentRecord& record, Index R,
                              double alpha, std::uint64_t seed,
                              bool quantile_region) {
  validate_record(design, X, record);
  require(R >= 100, "randomization_test: need R >= 100 replicates");
  require(alpha > 0.0 && alpha < 1.0, "randomization_test: alpha must lie in (0,1)");

  Index exp_index = find_in_design(design, record.w_exp);
  std::vector<Index> reps = replicate_indices(design, exp_index, R, seed);
  const Index r_used = static_cast<Index>(reps.size());
  require(r_used >= 1, "randomization_test: W* has no other assignment to test against");

  const bool lr = record.estimator == ExperimentRecord::Estimator::lr;
  ProjectionCache cache;
  if (lr) cache = projection_cache(X);

  TestResult out;
  out.alpha = alpha;
  out.r_used = r_used;
  out.estimate = lr ? estimate_lr(cache, record.y, record.w_exp)
                    : estimate_dm(record.y, record.w_exp);
  out.null_estimates.resize(r_used);
  parallel_for(r_used, [&](Index i) {
    Vector w = design.w_star.col(reps[static_cast<size_t>(i)]);
    out.null_estimates[i] = lr ? estimate_lr(cache, record.y, w)
                               : estimate_dm(record.y, w);
  });

  if (!quantile_region) {
    Index count = 0;
    for (Index i = 0; i < r_used; ++i)
      if (std::abs(out.null_estimates[i]) >= std::abs(out.estimate)) ++count;
    out.p_value = (1.0 + count) / (1.0 + static_cast<double>(r_used));
  } else {
    Index count_le = 0, count_ge = 0;
    for (Index i = 0; i < r_used; ++i) {
      if (out.null_estimates[i] <= out.estimate) ++count_le;
      if (out.null_estimates[i] >= out.estimate) ++count_ge;
    }
    double lo_p = (1.0 + count_le) / (1.0 + static_cast<double>(r_used));
    double hi_p = (1.0 + count_ge) / (1.0 + static_cast<double>(r_used));
    out.p_value = std::min(1.0, 2.0 * std::min(lo_p, hi_p));
  }
  return out;
}

ConfidenceInterval confidence_interval(const DesignResult& design, const Matrix& X,
                                       const ExperimentRecord& record, Index R,
                                       double alpha, const Vector& delta_grid,
                                       std::uint64_t seed) {
  validate_record(design, X, record);
  require(R >= 100, "confidence_interval: need R >= 100 replicates");
  require(alpha > 0.0 && alpha < 1.0, "confidence_interval: alpha must lie in (0,1)");
  require(delta_grid.size() >= 2, "confidence_interval: delta grid needs >= 2 points");
  for (Index i = 1; i < delta_grid.size(); ++i)
    require(delta_grid[i] >= delta_grid[i - 1],
            "confidence_interval: delta grid must be ascending");

  Index exp_index = find_in_design(design, record.w_exp);
  std::vector<Index> reps = replicate_indices(design, exp_index, R, seed);
  const Index r_used = static_cast<Index>(reps.size());

  const bool lr = record.estimator == ExperimentRecord::Estimator::lr;
  const double n = static_cast<double>(design.n);

  ProjectionCache cache;
  double estimate;
  Vector resid_y, resid_wexp;
  if (lr) {
    cache = projection_cache(X);
    estimate = estimate_lr(cache, record.y, record.w_exp);
    resid_y = record.y - cache.X_perp * (cache.X_perp.transpose() * record.y);
    resid_wexp = record.w_exp - cache.X_perp * (cache.X_perp.transpose() * record.w_exp);
  } else {
    estimate = estimate_dm(record.y, record.w_exp);
  }
  require(delta_grid[0] <= estimate && estimate <= delta_grid[delta_grid.size() - 1],
          "confidence_interval: delta grid does not span the point estimate");

  // The replicate estimate under the delta-shifted sharp null is affine in
  // delta: b_r(delta) = (A_r - delta B_r) / den_r + delta, so the whole grid
  // costs O(R) per point after one pass over the replicates.
  Vector a_coef(r_used), b_coef(r_used), den(r_used);
  parallel_for(r_used, [&](Index i) {
    Vector w = design.w_star.col(reps[static_cast<size_t>(i)]);
    if (lr) {
      Vector pw = cache.X_perp * (cache.X_perp.transpose() * w);
      den[i] = n - w.dot(pw);
      if (den[i] < 1e-8)
        throw numerical_error("confidence_interval: collinear replicate assignment");
      a_coef[i] = w.dot(resid_y);
      b_coef[i] = w.dot(resid_wexp);
    } else {
      den[i] = n;
      a_coef[i] = w.dot(record.y);
      b_coef[i] = w.dot(record.w_exp);
    }
  });

  // the experimental statistic runs through the same affine form, so the
  // structural tie with the mirror replicate (-w_exp gives the bit-exact
  // negated statistic) is counted deterministically
  double a_exp, b_exp, den_exp;
  if (lr) {
    Vector pw = cache.X_perp * (cache.X_perp.transpose() * record.w_exp);
    a_exp = record.w_exp.dot(resid_y);
    b_exp = record.w_exp.dot(resid_wexp);
    den_exp = n - record.w_exp.dot(pw);  // same expression as the replicates
  } else {
    a_exp = record.w_exp.dot(record.y);
    b_exp = static_cast<double>(design.n);
    den_exp = n;
  }

  ConfidenceInterval ci;
  ci.grid_p_values.resize(static_cast<size_t>(delta_grid.size()));
  bool any = false;
  for (Index g = 0; g < delta_grid.size(); ++g) {
    double delta = delta_grid[g];
    double stat_exp = std::abs((a_exp - delta * b_exp) / den_exp);
    Index count = 0;
    for (Index i = 0; i < r_used; ++i)
      if (std::abs((a_coef[i] - delta * b_coef[i]) / den[i]) >= stat_exp) ++count;
    double p = (1.0 + count) / (1.0 + static_cast<double>(r_used));
    ci.grid_p_values[static_cast<size_t>(g)] = p;
    if (p > alpha) {
      if (!any) ci.lo = delta;
      ci.hi = delta;
      any = true;
    }
  }
  if (!any)
    throw validation_error(
        "confidence_interval: no grid point retained; boundary p-values " +
        std::to_string(ci.grid_p_values.front()) + " (low) and " +
        std::to_string(ci.grid_p_values.back()) + " (high); widen the delta grid");
  return ci;
}

Vector default_delta_grid(const TestResult& test) {
  double mean = test.null_estimates.mean();
  double var = (test.null_estimates.array() - mean).square().sum() /
               std::max<double>(1.0, static_cast<double>(test.null_estimates.size() - 1));
  double se = std::sqrt(var);
  if (!(se > 0.0)) se = std::max(1.0, std::abs(test.estimate)) * 1e-8;
  Vector grid(201);
  for (Index i = 0; i < 201; ++i)
    grid[i] = test.estimate + (static_cast<double>(i) - 100.0) / 100.0 * 5.0 * se;
  return grid;
}

}  // namespace rerand
