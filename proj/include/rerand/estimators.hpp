#ifndef RERAND_ESTIMATORS_HPP
#define RERAND_ESTIMATORS_HPP

#include "rerand/common.hpp"
#include "rerand/moments.hpp"

namespace rerand {

/// Half the difference of arm means; w'y/n under +-1 balanced coding.
double estimate_dm(const Vector& y, const Vector& w);

/// Coefficient of w in the least-squares fit of y on [w | X], evaluated via
/// the closed form w'(I-P)y / (n - w'Pw).
double estimate_lr(const Matrix& X, const Vector& y, const Vector& w);
double estimate_lr(const ProjectionCache& cache, const Vector& y, const Vector& w);

}  // namespace rerand

#endif  // RERAND_ESTIMATORS_HPP
