#ifndef RERAND_SMOOTHING_HPP
#define RERAND_SMOOTHING_HPP

#include <optional>

#include "rerand/common.hpp"

namespace rerand {

struct SmoothFit {
  Vector fitted;
  double lambda = 0.0;
  double edf = 0.0;      // effective degrees of freedom tr(S_lambda)
  bool fallback = false; // centered moving average was used
};

/// Penalized natural cubic smoothing spline of q_values over a_values with
/// the penalty weight chosen by generalized cross-validation (or fixed to
/// 'lambda' when given). Duplicate abscissae are collapsed by averaging; an
/// ill-conditioned spline system falls back to a centered moving average of
/// window 5.
SmoothFit smooth_series_fit(const Vector& a_values, const Vector& q_values,
                            std::optional<double> lambda = std::nullopt);

Vector smooth_series(const Vector& a_values, const Vector& q_values);

}  // namespace rerand

#endif  // RERAND_SMOOTHING_HPP
