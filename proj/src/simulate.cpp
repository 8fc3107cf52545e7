#include "rerand/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "rerand/estimators.hpp"
#include "rerand/io.hpp"
#include "rerand/parallel.hpp"
#include "rerand/tail.hpp"

namespace rerand {

using nlohmann::json;

namespace {

// derived-stream tags
constexpr std::uint64_t stream_xcol = 0x01000000ULL;
constexpr std::uint64_t stream_beta = 0x02000000ULL;
constexpr std::uint64_t stream_pool = 0x03000000ULL;
constexpr std::uint64_t stream_z = 0x04000000ULL;
constexpr std::uint64_t stream_w = 0x05000000ULL;
constexpr std::uint64_t stream_zdet = 0x06000000ULL;
constexpr std::uint64_t stream_tail = 0x07000000ULL;

Matrix raw_design(Index n, Index p, std::uint64_t seed) {
  Matrix raw(n, p);
  for (Index j = 0; j < p; ++j) {
    Rng rng(derive_seed(seed, stream_xcol + static_cast<std::uint64_t>(j)));
    for (Index i = 0; i < n; ++i) raw(i, j) = rng.gaussian();
  }
  return raw;
}

Vector draw_beta(Index p, std::uint64_t seed) {
  Rng rng(derive_seed(seed, stream_beta));
  Vector beta(p);
  for (Index j = 0; j < p; ++j) beta[j] = rng.gaussian();
  return beta;
}

double sample_sd(const Vector& v) {
  double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() /
                   static_cast<double>(v.size() - 1));
}

Index even_count(double fraction, Index total) {
  Index k = 2 * static_cast<Index>(std::llround(fraction * static_cast<double>(total) / 2.0));
  return std::clamp<Index>(k, 2, total);
}

void write_text(const std::string& dir, const std::string& name,
                const std::string& content) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir + "/" + name, std::ios::binary);
  if (!out) throw validation_error("cannot write '" + dir + "/" + name + "'");
  out << content;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void SimConfig::validate() const {
  require(n >= 4 && n % 2 == 0, "sim config: n must be even and >= 4");
  require(p >= 1 && p < n, "sim config: need 1 <= p < n");
  require(S >= 100, "sim config: need S >= 100");
  require(q > 0.0 && q < 1.0, "sim config: q must lie in (0,1)");
  require(r2_target > 0.0 && r2_target < 1.0, "sim config: R2 target must lie in (0,1)");
  require(outer_draws >= 100 && inner_draws >= 100,
          "sim config: outer and inner draws must be >= 100");
  require(grid_points >= 2, "sim config: grid points must be >= 2");
  require(good_fraction > 0.0 && good_fraction <= 1.0 && bad_fraction > 0.0 &&
              bad_fraction <= 1.0,
          "sim config: strategy fractions must lie in (0,1]");
}

SimConfig SimConfig::paper_scale() {
  SimConfig c;
  c.n = 100;
  c.p = 10;
  c.S = 25000;
  c.outer_draws = 3000;
  c.inner_draws = 1000;
  return c;
}

SimConfig SimConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw validation_error(std::string("sim config: JSON parse error: ") + e.what());
  }
  SimConfig c;
  if (j.value("paper_scale", false)) c = paper_scale();
  try {
    if (j.contains("n")) c.n = j["n"].get<Index>();
    if (j.contains("p")) c.p = j["p"].get<Index>();
    if (j.contains("S")) c.S = j["S"].get<Index>();
    if (j.contains("q")) c.q = j["q"].get<double>();
    if (j.contains("beta_T")) c.beta_t = j["beta_T"].get<double>();
    if (j.contains("R2_target")) c.r2_target = j["R2_target"].get<double>();
    if (j.contains("z_dist")) c.z_family = ZSampler::parse(j["z_dist"].get<std::string>());
    if (j.contains("outer_draws")) c.outer_draws = j["outer_draws"].get<Index>();
    if (j.contains("inner_draws")) c.inner_draws = j["inner_draws"].get<Index>();
    if (j.contains("grid_points")) c.grid_points = j["grid_points"].get<Index>();
    if (j.contains("Nz")) c.n_z = j["Nz"].get<Index>();
    if (j.contains("good_fraction")) c.good_fraction = j["good_fraction"].get<double>();
    if (j.contains("bad_fraction")) c.bad_fraction = j["bad_fraction"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw validation_error(std::string("sim config: malformed field: ") + e.what());
  }
  c.validate();
  return c;
}

SimOutput run_strategy_comparison(const SimConfig& config) {
  config.validate();
  SimOutput out;
  out.config = config;

  CovariateTable table = standardize_covariates(raw_design(config.n, config.p, config.seed), {});
  const Matrix& X = table.standardized;
  Vector beta = draw_beta(config.p, config.seed);
  Vector xb = X * beta;
  double sigma_z = sample_sd(xb) * std::sqrt((1.0 - config.r2_target) / config.r2_target);

  AssignmentPool pool =
      sample_bcrd(config.n, config.S, derive_seed(config.seed, stream_pool));
  AssignmentPool closed = mirror_close(pool);

  BalanceMetric metric;  // mahalanobis
  TailSpec tail;
  tail.strategy = TailSpec::Strategy::normal_hbe;
  tail.q = config.q;
  SearchMode mode;
  mode.grid_points = config.grid_points;
  DesignResult opt = optimize(X, closed, metric, tail, mode);
  out.opt_s_star = opt.s_star;

  ProjectionCache cache = projection_cache(X);
  RankedPool ranked = rank_pool(X, closed, metric);
  group_mirror_pairs(ranked);
  const Index sc = ranked.pool.size();

  struct StrategySet {
    std::string name;
    Index begin, count;
  };
  std::vector<StrategySet> sets = {
      {"BCRD", 0, sc},
      {"GOOD", 0, even_count(config.good_fraction, sc)},
      {"OPT", 0, opt.s_star},
      {"DET", 0, 1},
      {"BAD", sc - even_count(config.bad_fraction, sc), even_count(config.bad_fraction, sc)},
  };

  // outer z draws are shared across the sampled strategies so the ordering
  // comparisons are paired
  Vector z_sum(config.outer_draws), z_sumsq(config.outer_draws);
  for (size_t k = 0; k < sets.size(); ++k) {
    const StrategySet& set = sets[k];
    StrategyStats stats;
    stats.name = set.name;
    const bool det = set.count == 1;
    const Index draws = det ? config.outer_draws * config.inner_draws : config.outer_draws;
    stats.mse_samples.resize(draws);
    parallel_for(draws, [&](Index t) {
      Vector z(config.n);
      if (det) {
        Rng zrng(derive_seed(derive_seed(config.seed, stream_zdet), static_cast<std::uint64_t>(t)));
        config.z_family.draw(zrng, z);
      } else {
        Rng zrng(derive_seed(derive_seed(config.seed, stream_z), static_cast<std::uint64_t>(t)));
        config.z_family.draw(zrng, z);
      }
      z *= sigma_z;
      if (k == 0) {
        z_sum[t] = z.sum();
        z_sumsq[t] = z.squaredNorm();
      }
      Vector y_base = xb + z;
      if (det) {
        Vector w = ranked.pool.assignments.col(0);
        double err = estimate_lr(cache, config.beta_t * w + y_base, w) - config.beta_t;
        stats.mse_samples[t] = err * err;
      } else {
        Rng wrng(derive_seed(derive_seed(config.seed, stream_w + static_cast<std::uint64_t>(k)),
                             static_cast<std::uint64_t>(t)));
        double acc = 0.0;
        for (Index j = 0; j < config.inner_draws; ++j) {
          Index idx = set.begin +
                      static_cast<Index>(wrng.below(static_cast<std::uint64_t>(set.count)));
          Vector w = ranked.pool.assignments.col(idx);
          double err = estimate_lr(cache, config.beta_t * w + y_base, w) - config.beta_t;
          acc += err * err;
        }
        stats.mse_samples[t] = acc / static_cast<double>(config.inner_draws);
      }
    });
    stats.mean = stats.mse_samples.mean();
    stats.tail_q = empirical_quantile(stats.mse_samples, config.q);
    out.strategies.push_back(std::move(stats));
  }

  double total = z_sum.sum();
  double count = static_cast<double>(config.outer_draws) * static_cast<double>(config.n);
  double mean_z = total / count;
  double var_z = (z_sumsq.sum() - count * mean_z * mean_z) / (count - 1.0);
  out.sd_ratio = std::sqrt(var_z) / sample_sd(xb);
  return out;
}

SimOutput run_tail_strategy_agreement(const SimConfig& config) {
  config.validate();
  SimOutput out;
  out.config = config;

  CovariateTable table = standardize_covariates(raw_design(config.n, config.p, config.seed), {});
  const Matrix& X = table.standardized;
  AssignmentPool closed = mirror_close(
      sample_bcrd(config.n, config.S, derive_seed(config.seed, stream_pool)));

  std::vector<TailSpec> specs;
  auto exact = [&](const char* dist, std::uint64_t k) {
    TailSpec t;
    t.strategy = TailSpec::Strategy::exact_mc;
    t.q = config.q;
    t.sampler = ZSampler::parse(dist);
    t.n_z = config.n_z;
    t.smoothing = true;
    t.seed = derive_seed(config.seed, stream_tail + k);
    return t;
  };
  specs.push_back(exact("gaussian", 0));
  specs.push_back(exact("laplace", 1));
  specs.push_back(exact("t:2", 2));
  {
    TailSpec t;
    t.strategy = TailSpec::Strategy::normal_hbe;
    t.q = config.q;
    specs.push_back(t);
  }
  for (double kappa : {0.0, 3.0}) {
    TailSpec t;
    t.strategy = TailSpec::Strategy::kurtosis_approx;
    t.q = config.q;
    t.kappa_z = kappa;
    specs.push_back(t);
  }
  std::vector<std::string> names = {"exact-gaussian", "exact-laplace", "exact-t2",
                                    "normal-hbe", "approx-kappa0", "approx-kappa3"};

  BalanceMetric metric;
  SearchMode mode;
  mode.grid_points = config.grid_points;
  mode.refine = false;  // keep every strategy on the identical grid

  for (size_t i = 0; i < specs.size(); ++i) {
    DesignResult res = optimize(X, closed, metric, specs[i], mode);
    TailTrace trace;
    trace.name = names[i];
    const Index m = static_cast<Index>(res.trace.size());
    trace.a.resize(m);
    trace.q_raw.resize(m);
    trace.q_selected.resize(m);
    for (Index t = 0; t < m; ++t) {
      const TracePoint& pt = res.trace[static_cast<size_t>(t)];
      trace.s.push_back(pt.s);
      trace.a[t] = pt.a;
      trace.q_raw[t] = pt.q_raw;
      trace.q_selected[t] = pt.has_smoothed ? pt.q_smoothed : pt.q_raw;
    }
    trace.q_normalized = trace.q_selected / trace.q_selected[m - 1];
    Index arg = 0;
    for (Index t = 1; t < m; ++t)
      if (trace.q_selected[t] < trace.q_selected[arg]) arg = t;
    trace.astar_index = arg;
    trace.a_star = trace.a[arg];
    out.traces.push_back(std::move(trace));
  }
  // all strategies rank the same pool, so the grids must agree
  for (size_t i = 1; i < out.traces.size(); ++i)
    require(out.traces[i].s == out.traces[0].s,
            "tail agreement: strategies evaluated different grids");
  return out;
}

SimOutput run_threshold_vs_p(const SimConfig& config,
                             const std::vector<Index>& p_list) {
  config.validate();
  require(!p_list.empty(), "threshold study: empty p list");
  Index p_max = *std::max_element(p_list.begin(), p_list.end());
  require(p_max < config.n, "threshold study: max p must be < n");

  SimOutput out;
  out.config = config;
  Matrix raw = raw_design(config.n, p_max, config.seed);
  AssignmentPool closed = mirror_close(
      sample_bcrd(config.n, config.S, derive_seed(config.seed, stream_pool)));

  BalanceMetric metric;
  TailSpec tail;
  tail.strategy = TailSpec::Strategy::normal_hbe;
  tail.q = config.q;
  SearchMode mode;
  mode.grid_points = config.grid_points;

  for (Index p : p_list) {
    ThresholdRow row;
    row.p = p;
    try {
      CovariateTable table = standardize_covariates(raw.leftCols(p), {});
      DesignResult res = optimize(table.standardized, closed, metric, tail, mode);
      row.s_star = res.s_star;
      row.a_star = res.a_star;
      row.quantile_rank =
          static_cast<double>(res.s_star) / static_cast<double>(res.pool_size);
      if (res.inference_fragile) row.note = "inference-fragile";
    } catch (const numerical_error& e) {
      row.ok = false;
      row.note = e.what();
    }
    out.threshold_rows.push_back(std::move(row));
  }
  return out;
}

void write_strategy_csv(const SimOutput& out, const std::string& dir) {
  std::string samples = "strategy,draw,mse\n";
  std::string summary = "strategy,draws,mean_mse,tail_q,q\n";
  for (const StrategyStats& s : out.strategies) {
    for (Index t = 0; t < s.mse_samples.size(); ++t)
      samples += s.name + "," + std::to_string(t) + "," + fmt(s.mse_samples[t]) + "\n";
    summary += s.name + "," + std::to_string(s.mse_samples.size()) + "," +
               fmt(s.mean) + "," + fmt(s.tail_q) + "," + fmt(out.config.q) + "\n";
  }
  write_text(dir, "strategy_mse_samples.csv", samples);
  write_text(dir, "strategy_summary.csv", summary);
}

void write_tail_csv(const SimOutput& out, const std::string& dir) {
  std::string traces = "strategy,s,a,Q_raw,Q_selected,Q_normalized\n";
  std::string astar = "strategy,grid_index,s_star,a_star\n";
  for (const TailTrace& tr : out.traces) {
    for (size_t i = 0; i < tr.s.size(); ++i)
      traces += tr.name + "," + std::to_string(tr.s[i]) + "," +
                fmt(tr.a[static_cast<Index>(i)]) + "," +
                fmt(tr.q_raw[static_cast<Index>(i)]) + "," +
                fmt(tr.q_selected[static_cast<Index>(i)]) + "," +
                fmt(tr.q_normalized[static_cast<Index>(i)]) + "\n";
    astar += tr.name + "," + std::to_string(tr.astar_index) + "," +
             std::to_string(tr.s[static_cast<size_t>(tr.astar_index)]) + "," +
             fmt(tr.a_star) + "\n";
  }
  write_text(dir, "tail_traces.csv", traces);
  write_text(dir, "tail_astar.csv", astar);
}

void write_threshold_csv(const SimOutput& out, const std::string& dir) {
  std::string rows = "p,s_star,a_star,quantile_rank,status,note\n";
  for (const ThresholdRow& r : out.threshold_rows)
    rows += std::to_string(r.p) + "," + std::to_string(r.s_star) + "," +
            fmt(r.a_star) + "," + fmt(r.quantile_rank) + "," +
            (r.ok ? "ok" : "error") + ",\"" + r.note + "\"\n";
  write_text(dir, "threshold_vs_p.csv", rows);
}

}  // namespace rerand
