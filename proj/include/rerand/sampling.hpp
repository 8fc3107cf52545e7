#ifndef RERAND_SAMPLING_HPP
#define RERAND_SAMPLING_HPP

#include <string>

#include "rerand/common.hpp"
#include "rerand/rng.hpp"

namespace rerand {

/// Distribution of the unobserved-covariate vector used by the exact
/// Monte Carlo tail strategy and the simulation harness.
struct ZSampler {
  enum class Family { gaussian, laplace, student_t, custom };

  Family family = Family::gaussian;
  double dof = 0.0;           // student_t only
  bool standardized = true;   // rescale to unit variance where defined
  Matrix table;               // custom: each row is one full z vector

  /// Parses "gaussian" | "laplace" | "t:<dof>".
  static ZSampler parse(const std::string& text);

  std::string name() const;

  /// Excess kurtosis of one coordinate; quiet NaN when undefined (t, dof <= 4).
  double excess_kurtosis() const;

  /// Fills z (length n) with one draw.
  void draw(Rng& rng, Eigen::Ref<Vector> z) const;

  void validate() const;
};

}  // namespace rerand

#endif  // RERAND_SAMPLING_HPP
