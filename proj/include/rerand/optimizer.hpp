#ifndef RERAND_OPTIMIZER_HPP
#define RERAND_OPTIMIZER_HPP

#include <string>
#include <vector>

#include "rerand/balance.hpp"
#include "rerand/common.hpp"
#include "rerand/design_space.hpp"
#include "rerand/tail.hpp"

namespace rerand {

struct SearchMode {
  enum class Kind { exhaustive, grid, binary };
  Kind kind = Kind::grid;
  Index grid_points = 64;  // grid: log-spaced prefix lengths, >= 2
  Index tolerance = 8;     // binary: final exact window width in prefix units, >= 1
  bool refine = true;      // grid: exhaustive refinement around the winner

  static SearchMode parse(const std::string& flag);  // exhaustive|grid:<k>|binary:<tol>
  std::string name() const;
  void validate() const;
};

struct TracePoint {
  Index s;
  double a;
  double q_raw;
  double q_smoothed = 0.0;
  bool has_smoothed = false;
};

/// Output of the threshold sweep: the chosen prefix (mirror-closed by
/// construction), its threshold, criterion value, and the full trace of
/// evaluated points, plus a config echo for the design artifact.
struct DesignResult {
  Index s_star = 0;
  double a_star = 0.0;
  double q_star = 0.0;
  Matrix w_star;  // n x s_star, ranked ascending by imbalance
  std::vector<AssignmentOrigin> w_star_origin;
  std::vector<TracePoint> trace;

  bool inference_fragile = false;   // s_star < 10 n
  double clamped_eigen_mass = 0.0;  // worst clamped share of sum|lambda|
  bool smoothed_selection = false;  // argmin taken on the smoothed trace

  // config echo
  Index n = 0, p = 0, pool_size = 0;
  std::string metric_name, tail_name, mode_name, generator;
  double q = 0.0;
  std::uint64_t pool_seed = 0, tail_seed = 0;
};

/// Reorders a ranked pool so each assignment is immediately followed by its
/// mirror. Mirror images tie bit-exactly on imbalance, so the order stays
/// non-decreasing and every even prefix is mirror-closed.
void group_mirror_pairs(RankedPool& ranked);

/// Algorithm: rank the (mirror-closed) pool by imbalance, keep mirror pairs
/// adjacent, sweep pair-aligned prefixes s = 2, 4, ..., S evaluating the tail
/// criterion, and return the minimizing prefix. Every candidate design
/// satisfies the mirror property.
DesignResult optimize(const Matrix& X, const AssignmentPool& pool,
                      const BalanceMetric& metric, const TailSpec& tail,
                      const SearchMode& mode);

/// CSV rows (s, a, Q_raw[, Q_smoothed]) in ascending s; bit-stable.
std::string sweep_trace_csv(const DesignResult& result);

}  // namespace rerand

#endif  // RERAND_OPTIMIZER_HPP
