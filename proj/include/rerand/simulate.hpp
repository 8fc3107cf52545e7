#ifndef RERAND_SIMULATE_HPP
#define RERAND_SIMULATE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rerand/common.hpp"
#include "rerand/optimizer.hpp"
#include "rerand/sampling.hpp"

namespace rerand {

struct SimConfig {
  Index n = 50;
  Index p = 5;
  Index S = 2000;
  double q = 0.95;
  double beta_t = 1.0;
  double r2_target = 0.1;  // Var(X beta) share; 0.1 gives the 3:1 sd ratio
  ZSampler z_family{};
  Index outer_draws = 500;
  Index inner_draws = 300;
  Index grid_points = 64;
  Index n_z = 10000;  // exact-MC tail draws in the agreement study
  double good_fraction = 0.2;
  double bad_fraction = 0.2;
  std::uint64_t seed = 42;

  static SimConfig from_json_text(const std::string& text);
  static SimConfig paper_scale();  // n=100 p=10 S=25000 outer=3000 inner=1000
  void validate() const;
};

struct StrategyStats {
  std::string name;
  Vector mse_samples;
  double mean = 0.0;
  double tail_q = 0.0;
};

struct TailTrace {
  std::string name;
  std::vector<Index> s;
  Vector a;
  Vector q_raw;
  Vector q_selected;    // smoothed for exact strategies, raw otherwise
  Vector q_normalized;  // q_selected / value at the full pool
  Index astar_index = 0;
  double a_star = 0.0;
};

struct ThresholdRow {
  Index p = 0;
  Index s_star = 0;
  double a_star = 0.0;
  double quantile_rank = 0.0;  // s_star / pool size
  bool ok = true;
  std::string note;
};

struct SimOutput {
  SimConfig config;
  std::vector<StrategyStats> strategies;
  std::vector<TailTrace> traces;
  std::vector<ThresholdRow> threshold_rows;
  double sd_ratio = 0.0;  // empirical sd(z) / sd(X beta)
  Index opt_s_star = 0;
};

/// Five designs from one ranked pool (BCRD / GOOD / OPT / DET / BAD), nested
/// Monte Carlo of the regression estimator's squared error. The DET design
/// has an exact inner expectation (one assignment), so its inner budget is
/// reallocated to outer draws for an equal evaluation budget per strategy.
SimOutput run_strategy_comparison(const SimConfig& config);

/// Criterion traces over one shared grid for the exact-MC (gaussian, laplace,
/// t:2), normal-HBE, and kurtosis (kappa = 0, 3) strategies, normalized to 1
/// at the full BCRD design.
SimOutput run_tail_strategy_agreement(const SimConfig& config);

/// Optimal threshold as a function of the covariate count.
SimOutput run_threshold_vs_p(const SimConfig& config,
                             const std::vector<Index>& p_list);

/// CSV emitters; column schemas are documented in the README.
void write_strategy_csv(const SimOutput& out, const std::string& dir);
void write_tail_csv(const SimOutput& out, const std::string& dir);
void write_threshold_csv(const SimOutput& out, const std::string& dir);

}  // namespace rerand

#endif  // RERAND_SIMULATE_HPP
