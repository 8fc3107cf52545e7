#ifndef RERAND_DESIGN_SPACE_HPP
#define RERAND_DESIGN_SPACE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rerand/common.hpp"

namespace rerand {

struct BalanceMetric;

/// 'origin' distinguishes base draws from greedy-refined additions in an
/// augmented pool; provenance survives mirror closure and ranking.
enum class AssignmentOrigin : std::uint8_t { base = 0, greedy = 1 };

/// Ordered collection of forced-balance +-1 assignment vectors, stored as
/// columns of an n x S matrix.
struct AssignmentPool {
  Matrix assignments;
  Index n = 0;
  std::uint64_t seed = 0;
  bool mirror_closed = false;
  std::string generator = "bcrd";  // bcrd | bcrd+greedy | enumerated
  std::vector<AssignmentOrigin> origin;

  Index size() const { return assignments.cols(); }
  Vector assignment(Index i) const { return assignments.col(i); }
};

/// Checks entries in {-1,+1} and zero sum.
bool is_balanced(const Vector& w);
void require_balanced(const Vector& w, const std::string& where);

/// S draws from the balanced completely randomized design, deduplicated,
/// deterministic given (seed, draw index).
AssignmentPool sample_bcrd(Index n, Index S, std::uint64_t seed);

/// All C(n, n/2) balanced vectors in lexicographic order; brute-force oracle
/// for desk-scale n.
AssignmentPool enumerate_balanced(Index n, Index cap = limits::enumeration_cap);

/// Adds -w for every w missing its mirror; idempotent, deduplicates.
AssignmentPool mirror_close(const AssignmentPool& pool);

/// Repeatedly applies the treatment-control pair swap that most decreases
/// imbalance until no swap improves it. Ties break on the lexicographically
/// first (treated index, control index) pair, so descent is deterministic.
Vector greedy_pair_switch(const Matrix& X, const Vector& w,
                          const BalanceMetric& metric, Index max_iterations = 0);

/// Appends 'count' greedy-refined BCRD draws (tagged AssignmentOrigin::greedy)
/// to the pool and deduplicates.
AssignmentPool augment_greedy(const AssignmentPool& pool, const Matrix& X,
                              const BalanceMetric& metric, Index count,
                              std::uint64_t seed);

/// Canonical '+'/'-' line encoding of one assignment.
std::string format_assignment(const Vector& w);
Vector parse_assignment(const std::string& line);

}  // namespace rerand

#endif  // RERAND_DESIGN_SPACE_HPP
