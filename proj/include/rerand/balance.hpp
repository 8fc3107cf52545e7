#ifndef RERAND_BALANCE_HPP
#define RERAND_BALANCE_HPP

#include <optional>
#include <string>

#include "rerand/common.hpp"
#include "rerand/design_space.hpp"

namespace rerand {

struct KernelSpec {
  enum class Kind { linear, exponential, gaussian };
  Kind kind = Kind::gaussian;
  /// Gaussian divisor of the squared distance; empty selects the median
  /// heuristic (median pairwise squared distance) at gram construction.
  std::optional<double> bandwidth;
};

struct BalanceMetric {
  enum class Kind { mahalanobis, kernel_quadratic };
  Kind kind = Kind::mahalanobis;
  KernelSpec kernel{};

  /// Parses mahalanobis|kernel-linear|kernel-exponential|kernel-gaussian[:bw].
  static BalanceMetric parse(const std::string& flag);
  std::string name() const;
};

/// (1/n) w' P w with P the projector onto the column space of X.
double mahalanobis_imbalance(const Matrix& X, const Vector& w);

/// (1/n) w' K w for a symmetric PSD gram matrix.
double kernel_imbalance(const Matrix& K, const Vector& w);

/// Gram matrix of the kernel on the rows of X. 'clamped' (optional) receives
/// the number of exponential-kernel entries clamped at the exponent cap.
Matrix gram_matrix(const Matrix& X, const KernelSpec& kernel, Index* clamped = nullptr);

/// Evaluates a balance metric repeatedly against one fixed X; precomputes the
/// whitened covariates (Mahalanobis) or the gram matrix (kernels) once.
/// state_swapped gives the value after exchanging treated i with control j in
/// O(p) / O(1) for the greedy descent.
class ImbalanceEvaluator {
 public:
  ImbalanceEvaluator(const Matrix& X, const BalanceMetric& metric);

  double operator()(const Vector& w) const;

  void set_state(const Vector& w);
  double state_value() const { return value_; }
  double state_swapped(Index i, Index j) const;

  Index n() const { return n_; }

 private:
  BalanceMetric::Kind kind_;
  Index n_ = 0;
  Matrix whitened_t_;  // p x n, (X'X)^{-1/2} X'
  Matrix gram_;
  Vector state_v_;   // whitened_t_ * w
  Vector state_kw_;  // gram_ * w
  Vector state_w_;
  double value_ = 0.0;
};

/// Pool sorted ascending by imbalance; ties keep original pool order.
struct RankedPool {
  AssignmentPool pool;
  Vector imbalances;
};

RankedPool rank_pool(const Matrix& X, const AssignmentPool& pool,
                     const BalanceMetric& metric);

}  // namespace rerand

#endif  // RERAND_BALANCE_HPP
