#include "rerand/balance.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "rerand/parallel.hpp"

namespace rerand {

namespace {

constexpr double exponent_cap = 700.0;  // exp(709) is the double overflow edge

/// (X'X)^{-1/2} X', failing with the offending column set when X is
/// numerically rank deficient.
Matrix whitened_transpose(const Matrix& X) {
  require(X.rows() > 0 && X.cols() > 0, "balance: covariate matrix is empty");
  require(X.cols() < X.rows(), "balance: need p < n for an invertible X'X");
  Matrix xtx = X.transpose() * X;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(xtx);
  const Vector& d = eig.eigenvalues();
  double dmax = d.maxCoeff();
  if (dmax <= 0.0 || d.minCoeff() / dmax < limits::rcond_min) {
    Eigen::ColPivHouseholderQR<Matrix> qr(X);
    qr.setThreshold(1e-10);
    Index rank = qr.rank();
    const auto& perm = qr.colsPermutation().indices();
    std::ostringstream msg;
    msg << "singular design: covariate matrix is numerically rank deficient"
        << " (rank " << rank << " of " << X.cols() << "); dependent columns {";
    for (Index k = rank; k < X.cols(); ++k)
      msg << (k > rank ? ", " : "") << perm[k] + 1;
    msg << "}";
    throw numerical_error(msg.str());
  }
  Matrix inv_sqrt = eig.eigenvectors() * d.cwiseInverse().cwiseSqrt().asDiagonal() *
                    eig.eigenvectors().transpose();
  return inv_sqrt * X.transpose();
}

}  // namespace

BalanceMetric BalanceMetric::parse(const std::string& flag) {
  BalanceMetric m;
  if (flag == "mahalanobis") {
    m.kind = Kind::mahalanobis;
    return m;
  }
  m.kind = Kind::kernel_quadratic;
  if (flag == "kernel-linear") {
    m.kernel.kind = KernelSpec::Kind::linear;
  } else if (flag == "kernel-exponential") {
    m.kernel.kind = KernelSpec::Kind::exponential;
  } else if (flag.rfind("kernel-gaussian", 0) == 0) {
    m.kernel.kind = KernelSpec::Kind::gaussian;
    if (flag.size() > 15) {
      require(flag[15] == ':', "unknown metric '" + flag + "'");
      try {
        m.kernel.bandwidth = std::stod(flag.substr(16));
      } catch (const std::exception&) {
        throw validation_error("metric: cannot parse gaussian bandwidth in '" + flag + "'");
      }
    }
  } else {
    throw validation_error(
        "unknown metric '" + flag +
        "' (expected mahalanobis|kernel-linear|kernel-exponential|kernel-gaussian[:bandwidth])");
  }
  return m;
}

std::string BalanceMetric::name() const {
  if (kind == Kind::mahalanobis) return "mahalanobis";
  switch (kernel.kind) {
    case KernelSpec::Kind::linear: return "kernel-linear";
    case KernelSpec::Kind::exponential: return "kernel-exponential";
    case KernelSpec::Kind::gaussian:
      if (kernel.bandwidth) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "kernel-gaussian:%.17g", *kernel.bandwidth);
        return buf;
      }
      return "kernel-gaussian";
  }
  return "?";
}

double mahalanobis_imbalance(const Matrix& X, const Vector& w) {
  require(X.rows() == w.size(), "mahalanobis_imbalance: X and w dimensions differ");
  require_balanced(w, "mahalanobis_imbalance");
  Matrix bt = whitened_transpose(X);
  return (bt * w).squaredNorm() / static_cast<double>(w.size());
}

double kernel_imbalance(const Matrix& K, const Vector& w) {
  require(K.rows() == K.cols(), "kernel_imbalance: gram matrix must be square");
  require(K.rows() == w.size(), "kernel_imbalance: gram and w dimensions differ");
  double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
  if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw validation_error("invalid gram matrix: not symmetric");
  double v = w.dot(K * w) / static_cast<double>(w.size());
  return std::max(0.0, v);
}

Matrix gram_matrix(const Matrix& X, const KernelSpec& kernel, Index* clamped) {
  const Index n = X.rows();
  require(n > 0, "gram_matrix: covariate matrix is empty");
  Matrix K(n, n);
  Index nclamped = 0;
  switch (kernel.kind) {
    case KernelSpec::Kind::linear:
      K = X * X.transpose();
      break;
    case KernelSpec::Kind::exponential: {
      Matrix inner = X * X.transpose();
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j <= i; ++j) {
          double e = inner(i, j);
          if (e > exponent_cap) {
            e = exponent_cap;
            ++nclamped;
          }
          K(i, j) = K(j, i) = std::exp(e);
        }
      break;
    }
    case KernelSpec::Kind::gaussian: {
      double bw;
      if (kernel.bandwidth) {
        bw = *kernel.bandwidth;
        require(bw > 0.0, "gram_matrix: gaussian bandwidth must be positive");
      } else {
        // median heuristic over pairwise squared distances
        std::vector<double> d2;
        d2.reserve(static_cast<size_t>(n) * (n - 1) / 2);
        for (Index i = 0; i < n; ++i)
          for (Index j = 0; j < i; ++j)
            d2.push_back((X.row(i) - X.row(j)).squaredNorm());
        if (d2.empty()) {
          bw = 1.0;
        } else {
          auto mid = d2.begin() + d2.size() / 2;
          std::nth_element(d2.begin(), mid, d2.end());
          bw = *mid;
        }
        if (bw <= 0.0)
          throw numerical_error("gram_matrix: median-heuristic bandwidth is zero "
                                "(duplicate rows dominate); pass an explicit bandwidth");
      }
      for (Index i = 0; i < n; ++i) {
        K(i, i) = 1.0;
        for (Index j = 0; j < i; ++j)
          K(i, j) = K(j, i) = std::exp(-(X.row(i) - X.row(j)).squaredNorm() / bw);
      }
      break;
    }
  }
  if (clamped) *clamped = nclamped;
  // clamping deliberately perturbs the kernel, so only unclamped matrices
  // carry the PSD guarantee worth asserting
  if (nclamped == 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(K, Eigen::EigenvaluesOnly);
    double lmax = std::max(1.0, eig.eigenvalues().maxCoeff());
    if (eig.eigenvalues().minCoeff() < -1e-8 * lmax)
      throw numerical_error("gram_matrix: kernel matrix is not positive semidefinite");
  }
  return K;
}

ImbalanceEvaluator::ImbalanceEvaluator(const Matrix& X, const BalanceMetric& metric)
    : kind_(metric.kind), n_(X.rows()) {
  if (kind_ == BalanceMetric::Kind::mahalanobis)
    whitened_t_ = whitened_transpose(X);
  else
    gram_ = gram_matrix(X, metric.kernel);
}

double ImbalanceEvaluator::operator()(const Vector& w) const {
  require(w.size() == n_, "imbalance: assignment length mismatch");
  if (kind_ == BalanceMetric::Kind::mahalanobis)
    return (whitened_t_ * w).squaredNorm() / static_cast<double>(n_);
  return std::max(0.0, w.dot(gram_ * w) / static_cast<double>(n_));
}

void ImbalanceEvaluator::set_state(const Vector& w) {
  state_w_ = w;
  if (kind_ == BalanceMetric::Kind::mahalanobis) {
    state_v_ = whitened_t_ * w;
    value_ = state_v_.squaredNorm() / static_cast<double>(n_);
  } else {
    state_kw_ = gram_ * w;
    value_ = std::max(0.0, w.dot(state_kw_) / static_cast<double>(n_));
  }
}

double ImbalanceEvaluator::state_swapped(Index i, Index j) const {
  // treated i (w_i = +1) exchanged with control j (w_j = -1)
  if (kind_ == BalanceMetric::Kind::mahalanobis) {
    Vector v = state_v_ - 2.0 * whitened_t_.col(i) + 2.0 * whitened_t_.col(j);
    return v.squaredNorm() / static_cast<double>(n_);
  }
  double raw = value_ * static_cast<double>(n_);
  raw += 2.0 * (-2.0 * state_kw_[i] + 2.0 * state_kw_[j]);
  raw += 4.0 * gram_(i, i) + 4.0 * gram_(j, j) - 8.0 * gram_(i, j);
  return std::max(0.0, raw / static_cast<double>(n_));
}

RankedPool rank_pool(const Matrix& X, const AssignmentPool& pool,
                     const BalanceMetric& metric) {
  require(pool.size() > 0, "rank_pool: pool is empty");
  require(X.rows() == pool.n, "rank_pool: X and pool dimensions differ");
  ImbalanceEvaluator eval(X, metric);

  Vector values(pool.size());
  parallel_for(pool.size(), [&](Index i) { values[i] = eval(pool.assignments.col(i)); });

  std::vector<Index> order(static_cast<size_t>(pool.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return values[a] < values[b]; });

  RankedPool ranked;
  ranked.pool = pool;
  ranked.pool.assignments.resize(pool.n, pool.size());
  ranked.pool.origin.resize(static_cast<size_t>(pool.size()));
  ranked.imbalances.resize(pool.size());
  for (Index k = 0; k < pool.size(); ++k) {
    ranked.pool.assignments.col(k) = pool.assignments.col(order[static_cast<size_t>(k)]);
    ranked.pool.origin[static_cast<size_t>(k)] =
        pool.origin[static_cast<size_t>(order[static_cast<size_t>(k)])];
    ranked.imbalances[k] = values[order[static_cast<size_t>(k)]];
  }
  return ranked;
}

}  // namespace rerand
