#include "rerand/design_space.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "rerand/balance.hpp"
#include "rerand/rng.hpp"

namespace rerand {

bool is_balanced(const Vector& w) {
  double sum = 0.0;
  for (Index i = 0; i < w.size(); ++i) {
    if (w[i] != 1.0 && w[i] != -1.0) return false;
    sum += w[i];
  }
  return w.size() > 0 && sum == 0.0;
}

void require_balanced(const Vector& w, const std::string& where) {
  if (!is_balanced(w))
    throw validation_error(where + ": assignment is not a balanced +-1 vector");
}

std::string format_assignment(const Vector& w) {
  std::string s(static_cast<size_t>(w.size()), '-');
  for (Index i = 0; i < w.size(); ++i)
    if (w[i] > 0) s[static_cast<size_t>(i)] = '+';
  return s;
}

Vector parse_assignment(const std::string& line) {
  Vector w(static_cast<Index>(line.size()));
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '+') w[static_cast<Index>(i)] = 1.0;
    else if (line[i] == '-') w[static_cast<Index>(i)] = -1.0;
    else throw validation_error("assignment line: unexpected character '" +
                                std::string(1, line[i]) + "' at position " +
                                std::to_string(i + 1));
  }
  require_balanced(w, "assignment line");
  return w;
}

namespace {

void dedup_columns(Matrix& w_all, std::vector<AssignmentOrigin>& origin) {
  std::unordered_set<std::string> seen;
  Index kept = 0;
  for (Index i = 0; i < w_all.cols(); ++i) {
    if (seen.insert(format_assignment(w_all.col(i))).second) {
      if (kept != i) {
        w_all.col(kept) = w_all.col(i);
        origin[static_cast<size_t>(kept)] = origin[static_cast<size_t>(i)];
      }
      ++kept;
    }
  }
  w_all.conservativeResize(Eigen::NoChange, kept);
  origin.resize(static_cast<size_t>(kept));
}

}  // namespace

AssignmentPool sample_bcrd(Index n, Index S, std::uint64_t seed) {
  if (n < 2 || n % 2 != 0)
    throw validation_error("sample_bcrd: invalid dimension, n must be even and >= 2 (got " +
                           std::to_string(n) + ")");
  if (S < 1) throw validation_error("sample_bcrd: empty pool requested (S = 0)");

  AssignmentPool pool;
  pool.n = n;
  pool.seed = seed;
  pool.generator = "bcrd";
  pool.assignments.resize(n, S);
  for (Index i = 0; i < S; ++i) {
    Rng rng = Rng(seed).child(static_cast<std::uint64_t>(i));
    Vector w(n);
    w.head(n / 2).setConstant(1.0);
    w.tail(n / 2).setConstant(-1.0);
    for (Index k = n - 1; k > 0; --k) {
      Index j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(k + 1)));
      std::swap(w[k], w[j]);
    }
    pool.assignments.col(i) = w;
  }
  pool.origin.assign(static_cast<size_t>(S), AssignmentOrigin::base);
  dedup_columns(pool.assignments, pool.origin);
  return pool;
}

AssignmentPool enumerate_balanced(Index n, Index cap) {
  if (n < 2 || n % 2 != 0)
    throw validation_error("enumerate_balanced: invalid dimension, n must be even and >= 2");
  if (n > cap)
    throw validation_error("enumerate_balanced: n = " + std::to_string(n) +
                           " exceeds the enumeration cap " + std::to_string(cap));
  // count C(n, n/2)
  Index count = 1;
  for (Index i = 0; i < n / 2; ++i) count = count * (n - i) / (i + 1);

  AssignmentPool pool;
  pool.n = n;
  pool.generator = "enumerated";
  pool.mirror_closed = true;
  pool.assignments.resize(n, count);

  std::vector<Index> treated(static_cast<size_t>(n / 2));
  for (Index i = 0; i < n / 2; ++i) treated[static_cast<size_t>(i)] = i;
  Index col = 0;
  for (;;) {
    Vector w = Vector::Constant(n, -1.0);
    for (Index t : treated) w[t] = 1.0;
    pool.assignments.col(col++) = w;
    // next combination in lexicographic order
    Index k = n / 2;
    Index i = k - 1;
    while (i >= 0 && treated[static_cast<size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++treated[static_cast<size_t>(i)];
    for (Index j = i + 1; j < k; ++j)
      treated[static_cast<size_t>(j)] = treated[static_cast<size_t>(j - 1)] + 1;
  }
  pool.origin.assign(static_cast<size_t>(count), AssignmentOrigin::base);
  return pool;
}

AssignmentPool mirror_close(const AssignmentPool& pool) {
  AssignmentPool out = pool;
  dedup_columns(out.assignments, out.origin);
  std::unordered_set<std::string> have;
  for (Index i = 0; i < out.size(); ++i)
    have.insert(format_assignment(out.assignments.col(i)));

  std::vector<Index> missing;
  for (Index i = 0; i < out.size(); ++i) {
    std::string key = format_assignment(-out.assignments.col(i));
    if (have.insert(key).second) missing.push_back(i);
  }
  if (!missing.empty()) {
    Index base = out.size();
    out.assignments.conservativeResize(Eigen::NoChange, base + static_cast<Index>(missing.size()));
    for (size_t k = 0; k < missing.size(); ++k) {
      out.assignments.col(base + static_cast<Index>(k)) = -out.assignments.col(missing[k]).eval();
      out.origin.push_back(out.origin[static_cast<size_t>(missing[k])]);
    }
  }
  out.mirror_closed = true;
  return out;
}

Vector greedy_pair_switch(const Matrix& X, const Vector& w,
                          const BalanceMetric& metric, Index max_iterations) {
  require_balanced(w, "greedy_pair_switch");
  require(X.rows() == w.size(), "greedy_pair_switch: X and w dimensions differ");
  const Index n = w.size();
  if (max_iterations <= 0) max_iterations = n * n;

  ImbalanceEvaluator eval(X, metric);
  Vector current = w;
  for (Index iter = 0; iter < max_iterations; ++iter) {
    eval.set_state(current);
    double best = eval.state_value();
    Index best_i = -1, best_j = -1;
    for (Index i = 0; i < n; ++i) {
      if (current[i] != 1.0) continue;
      for (Index j = 0; j < n; ++j) {
        if (current[j] != -1.0) continue;
        double candidate = eval.state_swapped(i, j);
        if (candidate < best) {  // strict improvement, first best swap wins ties
          best = candidate;
          best_i = i;
          best_j = j;
        }
      }
    }
    if (best_i < 0) return current;
    current[best_i] = -1.0;
    current[best_j] = 1.0;
  }
  throw numerical_error("greedy_pair_switch: no fixed point within " +
                        std::to_string(max_iterations) + " iterations");
}

AssignmentPool augment_greedy(const AssignmentPool& pool, const Matrix& X,
                              const BalanceMetric& metric, Index count,
                              std::uint64_t seed) {
  require(count >= 0, "augment_greedy: count must be non-negative");
  if (count == 0) return pool;
  AssignmentPool out = pool;
  Index base = out.size();
  out.assignments.conservativeResize(Eigen::NoChange, base + count);
  for (Index k = 0; k < count; ++k) {
    Rng rng = Rng(seed).child(0x67726565ULL + static_cast<std::uint64_t>(k));
    Vector w(pool.n);
    w.head(pool.n / 2).setConstant(1.0);
    w.tail(pool.n / 2).setConstant(-1.0);
    for (Index i = pool.n - 1; i > 0; --i) {
      Index j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
      std::swap(w[i], w[j]);
    }
    out.assignments.col(base + k) = greedy_pair_switch(X, w, metric);
    out.origin.push_back(AssignmentOrigin::greedy);
  }
  dedup_columns(out.assignments, out.origin);
  out.generator = pool.generator + "+greedy";
  out.mirror_closed = false;
  return out;
}

}  // namespace rerand
