#include "rerand/estimators.hpp"

#include "rerand/design_space.hpp"

namespace rerand {

double estimate_dm(const Vector& y, const Vector& w) {
  require(y.size() == w.size(), "estimate_dm: y and w lengths differ");
  require_balanced(w, "estimate_dm");
  return w.dot(y) / static_cast<double>(w.size());
}

double estimate_lr(const ProjectionCache& cache, const Vector& y, const Vector& w) {
  require(y.size() == cache.n && w.size() == cache.n,
          "estimate_lr: dimension mismatch");
  const double n = static_cast<double>(cache.n);
  Vector pw = cache.X_perp * (cache.X_perp.transpose() * w);
  double denom = n - w.dot(pw);
  if (denom < 1e-8)
    throw numerical_error("estimate_lr: collinear design, w lies in the column "
                          "space of X (n - w'Pw = " + std::to_string(denom) + ")");
  return (w.dot(y) - pw.dot(y)) / denom;
}

double estimate_lr(const Matrix& X, const Vector& y, const Vector& w) {
  return estimate_lr(projection_cache(X), y, w);
}

}  // namespace rerand
