#ifndef RERAND_COMMON_HPP
#define RERAND_COMMON_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace rerand {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Bad inputs, contract violations, malformed files. CLI exit code 2.
struct validation_error : std::runtime_error {
  explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: singular designs, degenerate distributions,
/// non-converging iterations. CLI exit code 3.
struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

namespace limits {
inline constexpr Index enumeration_cap = 16;   // C(16,8) = 12870 vectors
inline constexpr Index subject_cap = 2000;     // dense n x n moment matrices
inline constexpr double rcond_min = 1e-12;     // singular-design threshold
}  // namespace limits

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw validation_error(msg);
}

}  // namespace rerand

#endif  // RERAND_COMMON_HPP
