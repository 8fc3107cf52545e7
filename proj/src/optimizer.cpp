#include "rerand/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_map>

#include "rerand/smoothing.hpp"

namespace rerand {

SearchMode SearchMode::parse(const std::string& flag) {
  SearchMode m;
  if (flag == "exhaustive") {
    m.kind = Kind::exhaustive;
    return m;
  }
  auto parse_tail = [&](const std::string& text, const char* what) {
    try {
      long v = std::stol(text);
      require(v >= 1, std::string("search mode: ") + what + " must be >= 1");
      return static_cast<Index>(v);
    } catch (const validation_error&) {
      throw;
    } catch (const std::exception&) {
      throw validation_error("search mode: cannot parse '" + flag + "'");
    }
  };
  if (flag.rfind("grid", 0) == 0) {
    m.kind = Kind::grid;
    if (flag.size() > 4) {
      require(flag[4] == ':', "unknown search mode '" + flag + "'");
      m.grid_points = parse_tail(flag.substr(5), "grid point count");
    }
    m.validate();
    return m;
  }
  if (flag.rfind("binary", 0) == 0) {
    m.kind = Kind::binary;
    if (flag.size() > 6) {
      require(flag[6] == ':', "unknown search mode '" + flag + "'");
      m.tolerance = parse_tail(flag.substr(7), "binary tolerance");
    }
    m.validate();
    return m;
  }
  throw validation_error("unknown search mode '" + flag +
                         "' (expected exhaustive|grid:<points>|binary:<tolerance>)");
}

std::string SearchMode::name() const {
  switch (kind) {
    case Kind::exhaustive: return "exhaustive";
    case Kind::grid: return "grid:" + std::to_string(grid_points);
    case Kind::binary: return "binary:" + std::to_string(tolerance);
  }
  return "?";
}

void SearchMode::validate() const {
  if (kind == Kind::grid) require(grid_points >= 2, "search mode: grid needs >= 2 points");
  if (kind == Kind::binary) require(tolerance >= 1, "search mode: binary tolerance must be >= 1");
}

void group_mirror_pairs(RankedPool& ranked) {
  const Index S = ranked.pool.size();
  std::unordered_map<std::string, Index> where;
  where.reserve(static_cast<size_t>(S));
  for (Index i = 0; i < S; ++i)
    where.emplace(format_assignment(ranked.pool.assignments.col(i)), i);

  std::vector<Index> order;
  order.reserve(static_cast<size_t>(S));
  std::vector<bool> used(static_cast<size_t>(S), false);
  for (Index i = 0; i < S; ++i) {
    if (used[static_cast<size_t>(i)]) continue;
    auto it = where.find(format_assignment(-ranked.pool.assignments.col(i).eval()));
    if (it == where.end())
      throw validation_error("optimize: pool is not mirror-closed");
    if (used[static_cast<size_t>(it->second)])
      throw validation_error("optimize: pool holds duplicate assignments");
    used[static_cast<size_t>(i)] = true;
    used[static_cast<size_t>(it->second)] = true;
    order.push_back(i);
    order.push_back(it->second);
  }

  Matrix w(ranked.pool.n, S);
  Vector imb(S);
  std::vector<AssignmentOrigin> origin(static_cast<size_t>(S));
  for (Index k = 0; k < S; ++k) {
    w.col(k) = ranked.pool.assignments.col(order[static_cast<size_t>(k)]);
    imb[k] = ranked.imbalances[order[static_cast<size_t>(k)]];
    origin[static_cast<size_t>(k)] = ranked.pool.origin[static_cast<size_t>(order[static_cast<size_t>(k)])];
  }
  ranked.pool.assignments = std::move(w);
  ranked.imbalances = std::move(imb);
  ranked.pool.origin = std::move(origin);
}

namespace {

std::vector<Index> log_grid_pairs(Index npairs, Index points) {
  std::set<Index> ks;
  double lo = 0.0, hi = std::log(static_cast<double>(npairs));
  for (Index i = 0; i < points; ++i) {
    double t = (points == 1) ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    Index k = static_cast<Index>(std::llround(std::exp(t)));
    ks.insert(std::clamp<Index>(k, 1, npairs));
  }
  ks.insert(npairs);  // grid always includes s = S
  return {ks.begin(), ks.end()};
}

struct SweepEngine {
  const RankedPool& ranked;
  const ProjectionCache& cache;
  const TailSpec& tail;
  std::map<Index, double> values;  // pair count -> criterion
  double worst_clamped = 0.0;

  /// Evaluates the criterion at each pair count in ks (ascending) with one
  /// incremental accumulator pass.
  void sweep(const std::vector<Index>& ks) {
    std::vector<Index> todo;
    for (Index k : ks)
      if (!values.count(k)) todo.push_back(k);
    if (todo.empty()) return;
    MomentAccumulator acc(cache);
    Index at = 0;
    for (Index k : todo) {
      while (at < 2 * k) {
        acc.add(ranked.pool.assignments.col(at));
        ++at;
      }
      double clamped = 0.0;
      try {
        values[k] = tail_criterion(acc.snapshot(), cache, tail, &clamped);
      } catch (const validation_error& e) {
        throw validation_error("criterion failed at prefix s=" + std::to_string(2 * k) +
                               ": " + e.what());
      } catch (const numerical_error& e) {
        throw numerical_error("criterion failed at prefix s=" + std::to_string(2 * k) +
                              ": " + e.what());
      }
      worst_clamped = std::max(worst_clamped, clamped);
    }
  }

  double eval(Index k) {
    sweep({k});
    return values.at(k);
  }
};

}  // namespace

DesignResult optimize(const Matrix& X, const AssignmentPool& pool,
                      const BalanceMetric& metric, const TailSpec& tail,
                      const SearchMode& mode) {
  tail.validate();
  mode.validate();
  require(pool.size() >= 2, "optimize: pool must hold at least 2 assignments");
  require(X.rows() == pool.n, "optimize: X and pool dimensions differ");

  AssignmentPool closed = pool.mirror_closed ? pool : mirror_close(pool);
  ProjectionCache cache = projection_cache(X);
  RankedPool ranked = rank_pool(X, closed, metric);
  group_mirror_pairs(ranked);

  const Index S = ranked.pool.size();
  const Index npairs = S / 2;

  SweepEngine engine{ranked, cache, tail};

  if (mode.kind == SearchMode::Kind::exhaustive) {
    std::vector<Index> all(static_cast<size_t>(npairs));
    for (Index k = 1; k <= npairs; ++k) all[static_cast<size_t>(k - 1)] = k;
    engine.sweep(all);
  } else if (mode.kind == SearchMode::Kind::grid) {
    engine.sweep(log_grid_pairs(npairs, mode.grid_points));
  } else {
    // ternary search under the convexity conjecture, then an exact window,
    // cross-checked against the default grid
    Index tol_pairs = std::max<Index>(1, (mode.tolerance + 1) / 2);
    Index lo = 1, hi = npairs;
    while (hi - lo > std::max<Index>(2, tol_pairs)) {
      Index m1 = lo + (hi - lo) / 3;
      Index m2 = hi - (hi - lo) / 3;
      if (engine.eval(m1) < engine.eval(m2)) hi = m2; else lo = m1;
    }
    Index center = lo;
    double best = engine.eval(lo);
    for (Index k = lo; k <= hi; ++k)
      if (engine.eval(k) < best) { best = engine.eval(k); center = k; }
    std::vector<Index> window;
    for (Index k = std::max<Index>(1, center - tol_pairs);
         k <= std::min(npairs, center + tol_pairs); ++k)
      window.push_back(k);
    engine.sweep(window);
    engine.sweep(log_grid_pairs(npairs, 64));
  }

  // grid mode: exhaustive refinement between the winner's grid neighbours
  if (mode.kind == SearchMode::Kind::grid && mode.refine && npairs > 2) {
    Index best_k = engine.values.begin()->first;
    double best_v = engine.values.begin()->second;
    bool use_smoothed = tail.strategy == TailSpec::Strategy::exact_mc &&
                        tail.smoothing &&
                        static_cast<Index>(engine.values.size()) >= 4;
    if (use_smoothed) {
      Vector a(static_cast<Index>(engine.values.size())), v(static_cast<Index>(engine.values.size()));
      std::vector<Index> ks;
      Index i = 0;
      for (auto& [k, val] : engine.values) {
        ks.push_back(k);
        a[i] = ranked.imbalances[2 * k - 1];
        v[i] = val;
        ++i;
      }
      Vector sm = smooth_series(a, v);
      Index arg = 0;
      sm.minCoeff(&arg);
      best_k = ks[static_cast<size_t>(arg)];
    } else {
      for (auto& [k, val] : engine.values)
        if (val < best_v) { best_v = val; best_k = k; }
    }
    auto it = engine.values.find(best_k);
    Index lo = (it == engine.values.begin()) ? best_k : std::prev(it)->first;
    Index hi = (std::next(it) == engine.values.end()) ? best_k : std::next(it)->first;
    std::vector<Index> fill;
    for (Index k = lo; k <= hi; ++k) fill.push_back(k);
    engine.sweep(fill);
  }

  // assemble the trace in ascending s
  DesignResult result;
  const Index m = static_cast<Index>(engine.values.size());
  Vector a_axis(m), q_axis(m);
  {
    Index i = 0;
    for (auto& [k, val] : engine.values) {
      TracePoint pt;
      pt.s = 2 * k;
      pt.a = ranked.imbalances[2 * k - 1];
      pt.q_raw = val;
      result.trace.push_back(pt);
      a_axis[i] = pt.a;
      q_axis[i] = val;
      ++i;
    }
  }

  // criterion used for selection: smoothed for the exact strategy when asked
  Index arg = 0;
  if (tail.strategy == TailSpec::Strategy::exact_mc && tail.smoothing && m >= 4) {
    Vector sm = smooth_series(a_axis, q_axis);
    for (Index i = 0; i < m; ++i) {
      result.trace[static_cast<size_t>(i)].q_smoothed = sm[i];
      result.trace[static_cast<size_t>(i)].has_smoothed = true;
    }
    result.smoothed_selection = true;
    for (Index i = 1; i < m; ++i)
      if (sm[i] < sm[arg]) arg = i;
    result.q_star = sm[arg];
  } else {
    for (Index i = 1; i < m; ++i)
      if (q_axis[i] < q_axis[arg]) arg = i;
    result.q_star = q_axis[arg];
  }

  result.s_star = result.trace[static_cast<size_t>(arg)].s;
  result.a_star = result.trace[static_cast<size_t>(arg)].a;
  result.w_star = ranked.pool.assignments.leftCols(result.s_star);
  result.w_star_origin.assign(ranked.pool.origin.begin(),
                              ranked.pool.origin.begin() + result.s_star);
  result.inference_fragile = result.s_star < 10 * ranked.pool.n;
  result.clamped_eigen_mass = engine.worst_clamped;

  result.n = ranked.pool.n;
  result.p = X.cols();
  result.pool_size = S;
  result.metric_name = metric.name();
  result.tail_name = tail.name();
  result.mode_name = mode.name();
  result.generator = ranked.pool.generator;
  result.q = tail.q;
  result.pool_seed = pool.seed;
  result.tail_seed = tail.seed;
  return result;
}

std::string sweep_trace_csv(const DesignResult& result) {
  require(!result.trace.empty(), "sweep_trace_csv: empty trace");
  bool smoothed = result.trace.front().has_smoothed;
  std::string out = smoothed ? "s,a,Q_raw,Q_smoothed\n" : "s,a,Q_raw\n";
  char buf[128];
  for (const TracePoint& pt : result.trace) {
    if (smoothed)
      std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g\n",
                    static_cast<long long>(pt.s), pt.a, pt.q_raw, pt.q_smoothed);
    else
      std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g\n",
                    static_cast<long long>(pt.s), pt.a, pt.q_raw);
    out += buf;
  }
  return out;
}

}  // namespace rerand
