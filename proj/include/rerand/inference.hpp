#ifndef RERAND_INFERENCE_HPP
#define RERAND_INFERENCE_HPP

#include <cstdint>
#include <vector>

#include "rerand/common.hpp"
#include "rerand/optimizer.hpp"

namespace rerand {

struct ExperimentRecord {
  enum class Estimator { dm, lr };
  Vector w_exp;
  Vector y;
  Estimator estimator = Estimator::lr;
};

struct TestResult {
  double estimate = 0.0;
  double p_value = 1.0;
  Vector null_estimates;
  Index r_used = 0;
  double alpha = 0.05;
};

/// Randomization test of the sharp null over the optimal design: null
/// replicates recompute the estimate under assignments drawn uniformly
/// without replacement from W* \ {w_exp}. Two-sided p-value by the add-one
/// convention, p = (1 + #{|b_r| >= |b_exp|}) / (1 + R_used); with
/// quantile_region the alpha/2 retainment-region variant is used
/// (p = 2 min(rank tail shares), capped at 1).
TestResult randomization_test(const DesignResult& design, const Matrix& X,
                              const ExperimentRecord& record, Index R,
                              double alpha, std::uint64_t seed,
                              bool quantile_region = false);

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> grid_p_values;  // aligned with the delta grid
};

/// Test-inversion interval: delta is retained when the shifted sharp null
/// (null responses y - delta w_exp reassigned as y - delta w_exp + delta w_rep)
/// keeps p > alpha. Returns the min and max retained grid point.
ConfidenceInterval confidence_interval(const DesignResult& design, const Matrix& X,
                                       const ExperimentRecord& record, Index R,
                                       double alpha, const Vector& delta_grid,
                                       std::uint64_t seed);

/// Default inversion grid: 201 points spanning estimate +- 5 null SEs.
Vector default_delta_grid(const TestResult& test);

}  // namespace rerand

#endif  // RERAND_INFERENCE_HPP
