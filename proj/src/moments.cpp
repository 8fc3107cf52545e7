#include "rerand/moments.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <sstream>

namespace rerand {

ProjectionCache projection_cache(const Matrix& X) {
  const Index n = X.rows(), p = X.cols();
  require(n > 0 && p > 0, "projection_cache: covariate matrix is empty");
  require(p < n, "projection_cache: need p < n");
  require(n <= limits::subject_cap,
          "projection_cache: n exceeds the dense-moment cap " +
              std::to_string(limits::subject_cap));
  Matrix xtx = X.transpose() * X;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(xtx);
  const Vector& d = eig.eigenvalues();
  double dmax = d.maxCoeff();
  if (dmax <= 0.0 || d.minCoeff() / dmax < limits::rcond_min) {
    Eigen::ColPivHouseholderQR<Matrix> qr(X);
    qr.setThreshold(1e-10);
    const auto& perm = qr.colsPermutation().indices();
    std::ostringstream msg;
    msg << "singular design: X'X is numerically singular (rank " << qr.rank()
        << " of " << p << "); dependent columns {";
    for (Index k = qr.rank(); k < p; ++k) msg << (k > qr.rank() ? ", " : "") << perm[k] + 1;
    msg << "}";
    throw numerical_error(msg.str());
  }
  ProjectionCache cache;
  cache.n = n;
  cache.p = p;
  Matrix inv_sqrt = eig.eigenvectors() * d.cwiseInverse().cwiseSqrt().asDiagonal() *
                    eig.eigenvectors().transpose();
  cache.X_perp = X * inv_sqrt;
  cache.P = cache.X_perp * cache.X_perp.transpose();
  cache.P = 0.5 * (cache.P + cache.P.transpose()).eval();
  cache.I_minus_P = Matrix::Identity(n, n) - cache.P;
  return cache;
}

StrategyMoments make_moments(const Matrix& sigma_w, const Matrix& d, Index s) {
  require(s >= 1, "make_moments: s must be >= 1");
  require(sigma_w.rows() == sigma_w.cols() && d.rows() == d.cols() &&
              sigma_w.rows() == d.rows(),
          "make_moments: matrix dimensions differ");
  StrategyMoments m;
  m.sigma_w = sigma_w;
  m.d = d;
  m.s = s;
  m.sigma_sum = sigma_w * static_cast<double>(s);
  m.d_sum = d * static_cast<double>(s);
  return m;
}

void MomentAccumulator::add(const Vector& w) {
  require(w.size() == cache_->n, "moments: assignment length mismatch");
  double wpw = w.dot(cache_->P * w);
  sigma_sum_.selfadjointView<Eigen::Lower>().rankUpdate(w, 1.0);
  d_sum_.selfadjointView<Eigen::Lower>().rankUpdate(w, wpw);
  ++s_;
}

StrategyMoments MomentAccumulator::snapshot() const {
  require(s_ >= 1, "moments: empty accumulator");
  StrategyMoments m;
  m.s = s_;
  m.sigma_sum = sigma_sum_.selfadjointView<Eigen::Lower>();
  m.d_sum = d_sum_.selfadjointView<Eigen::Lower>();
  m.sigma_w = m.sigma_sum / static_cast<double>(s_);
  m.d = m.d_sum / static_cast<double>(s_);
  return m;
}

StrategyMoments moments_from_prefix(const RankedPool& ranked, Index s,
                                    const ProjectionCache& cache) {
  require(s >= 1 && s <= ranked.pool.size(),
          "moments_from_prefix: prefix length " + std::to_string(s) +
              " out of range 1.." + std::to_string(ranked.pool.size()));
  MomentAccumulator acc(cache);
  for (Index i = 0; i < s; ++i) acc.add(ranked.pool.assignments.col(i));
  return acc.snapshot();
}

StrategyMoments increment_moments(const StrategyMoments& m, const Vector& w,
                                  const ProjectionCache& cache) {
  require(w.size() == cache.n && m.sigma_w.rows() == cache.n,
          "increment_moments: dimension mismatch");
  double wpw = w.dot(cache.P * w);
  StrategyMoments out;
  out.s = m.s + 1;
  out.sigma_sum = m.sigma_sum + w * w.transpose();
  out.d_sum = m.d_sum + wpw * (w * w.transpose());
  out.sigma_w = out.sigma_sum / static_cast<double>(out.s);
  out.d = out.d_sum / static_cast<double>(out.s);
  return out;
}

CriterionMatrices criterion_matrices(const StrategyMoments& m,
                                     const ProjectionCache& cache) {
  require(m.sigma_w.rows() == cache.n, "criterion_matrices: dimension mismatch");
  const double n = static_cast<double>(cache.n);
  CriterionMatrices cm;
  cm.G = cache.I_minus_P * m.sigma_w * cache.I_minus_P;
  double scale = std::max(1.0, cm.G.cwiseAbs().maxCoeff());
  if ((cm.G - cm.G.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw numerical_error("criterion_matrices: G asymmetry exceeds 1e-8");
  cm.G = 0.5 * (cm.G + cm.G.transpose()).eval();
  cm.R = cm.G + (2.0 / n) * m.d;
  cm.R = 0.5 * (cm.R + cm.R.transpose()).eval();
  return cm;
}

}  // namespace rerand
