#include "rerand/smoothing.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

namespace rerand {

namespace {

Vector moving_average5(const Vector& y) {
  const Index m = y.size();
  Vector out(m);
  for (Index i = 0; i < m; ++i) {
    Index lo = std::max<Index>(0, i - 2), hi = std::min<Index>(m - 1, i + 2);
    out[i] = y.segment(lo, hi - lo + 1).mean();
  }
  return out;
}

/// Green-Silverman roughness penalty K = Q R^{-1} Q' for natural cubic
/// splines on strictly increasing knots.
Matrix penalty_matrix(const Vector& t) {
  const Index m = t.size();
  Matrix Q = Matrix::Zero(m, m - 2);
  Matrix R = Matrix::Zero(m - 2, m - 2);
  for (Index j = 1; j + 1 < m; ++j) {
    double h0 = t[j] - t[j - 1], h1 = t[j + 1] - t[j];
    Q(j - 1, j - 1) = 1.0 / h0;
    Q(j, j - 1) = -1.0 / h0 - 1.0 / h1;
    Q(j + 1, j - 1) = 1.0 / h1;
    R(j - 1, j - 1) = (h0 + h1) / 3.0;
    if (j + 2 < m) R(j - 1, j) = R(j, j - 1) = h1 / 6.0;
  }
  Eigen::LLT<Matrix> llt(R);
  if (llt.info() != Eigen::Success)
    throw numerical_error("smooth_series: spline system is ill-conditioned");
  return Q * llt.solve(Q.transpose());
}

}  // namespace

SmoothFit smooth_series_fit(const Vector& a_values, const Vector& q_values,
                            std::optional<double> lambda) {
  const Index m = a_values.size();
  require(m == q_values.size(), "smooth_series: series lengths differ");
  require(m >= 4, "smooth_series: need at least 4 points");
  for (Index i = 1; i < m; ++i)
    require(a_values[i] >= a_values[i - 1], "smooth_series: a_values must be ascending");

  // collapse duplicate abscissae by averaging
  std::vector<double> tu;
  std::vector<double> yu;
  std::vector<Index> map_to_unique(static_cast<size_t>(m));
  for (Index i = 0; i < m; ++i) {
    if (tu.empty() || a_values[i] > tu.back()) {
      tu.push_back(a_values[i]);
      yu.push_back(q_values[i]);
    } else {
      yu.back() += q_values[i];  // running sums, divided below
    }
    map_to_unique[static_cast<size_t>(i)] = static_cast<Index>(tu.size()) - 1;
  }
  {
    size_t at = 0;
    for (size_t u = 0; u < tu.size(); ++u) {
      size_t cnt = 0;
      while (at < static_cast<size_t>(m) && map_to_unique[at] == static_cast<Index>(u)) {
        ++cnt;
        ++at;
      }
      yu[u] /= static_cast<double>(cnt);
    }
  }
  const Index mu = static_cast<Index>(tu.size());

  SmoothFit fit;
  auto fall_back = [&]() {
    fit.fallback = true;
    fit.fitted = moving_average5(q_values);
    fit.edf = static_cast<double>(m);
    return fit;
  };
  if (mu < 4) return fall_back();

  Vector t = Eigen::Map<const Vector>(tu.data(), mu);
  Vector y = Eigen::Map<const Vector>(yu.data(), mu);

  Matrix K;
  try {
    K = penalty_matrix(t);
  } catch (const numerical_error&) {
    return fall_back();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (K + K.transpose()));
  if (eig.info() != Eigen::Success) return fall_back();
  Vector lam_k = eig.eigenvalues().cwiseMax(0.0);
  Vector yt = eig.eigenvectors().transpose() * y;

  auto fitted_for = [&](double lam) {
    Vector shrink = (1.0 + lam * lam_k.array()).inverse().matrix();
    return std::pair<Vector, double>(
        eig.eigenvectors() * shrink.cwiseProduct(yt), shrink.sum());
  };

  double chosen;
  if (lambda) {
    chosen = std::max(0.0, *lambda);
  } else {
    // GCV over a log-spaced grid anchored at the penalty spectrum scale
    std::vector<double> positive;
    for (Index i = 0; i < mu; ++i)
      if (lam_k[i] > 1e-12 * lam_k.maxCoeff()) positive.push_back(lam_k[i]);
    if (positive.empty()) return fall_back();
    std::nth_element(positive.begin(), positive.begin() + positive.size() / 2,
                     positive.end());
    double scale = 1.0 / positive[positive.size() / 2];
    double best_gcv = std::numeric_limits<double>::infinity();
    chosen = scale;
    for (int k = 0; k <= 160; ++k) {
      double lam = scale * std::pow(10.0, -8.0 + 0.1 * k);
      Vector shrink = (1.0 + lam * lam_k.array()).inverse().matrix();
      double rss = ((Vector::Ones(mu) - shrink).cwiseProduct(yt)).squaredNorm();
      double df = shrink.sum();
      double denom = static_cast<double>(mu) - df;
      if (denom < 1e-10) continue;
      double gcv = static_cast<double>(mu) * rss / (denom * denom);
      if (gcv < best_gcv) {
        best_gcv = gcv;
        chosen = lam;
      }
    }
  }

  auto [fitted_u, edf] = fitted_for(chosen);
  if (!fitted_u.allFinite()) return fall_back();
  fit.lambda = chosen;
  fit.edf = edf;
  fit.fitted.resize(m);
  for (Index i = 0; i < m; ++i) fit.fitted[i] = fitted_u[map_to_unique[static_cast<size_t>(i)]];
  return fit;
}

Vector smooth_series(const Vector& a_values, const Vector& q_values) {
  return smooth_series_fit(a_values, q_values).fitted;
}

}  // namespace rerand
