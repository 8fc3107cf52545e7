#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rerand/inference.hpp"
#include "rerand/io.hpp"
#include "rerand/simulate.hpp"

namespace {

using namespace rerand;

constexpr std::uint64_t stream_tail_seed = 0x7461696cULL;
constexpr std::uint64_t stream_assign = 0x61736e67ULL;

struct DesignArgs {
  std::string x_path, out_path = "design.json";
  bool header = false;
  Index S = 25000;
  std::string metric = "mahalanobis";
  std::string tail = "normal";
  double q = 0.95;
  double kappa = 0.0;
  std::string z_dist = "gaussian";
  Index n_z = 10000;
  bool no_smoothing = false;
  std::string mode = "grid:64";
  std::uint64_t seed = 42;
  Index greedy = 0;
};

int run_design(const DesignArgs& args) {
  CovariateTable table = ingest_covariates(args.x_path, args.header);
  BalanceMetric metric = BalanceMetric::parse(args.metric);
  if (metric.kind == BalanceMetric::Kind::kernel_quadratic &&
      metric.kernel.kind == KernelSpec::Kind::exponential) {
    Index clamped = 0;
    gram_matrix(table.standardized, metric.kernel, &clamped);
    if (clamped > 0)
      std::printf("warning: exponential kernel clamped %lld gram entries at the "
                  "exponent cap; consider rescaling the covariates\n",
                  static_cast<long long>(clamped));
  }
  AssignmentPool pool = sample_bcrd(table.standardized.rows(), args.S, args.seed);
  if (args.greedy > 0)
    pool = augment_greedy(pool, table.standardized, metric, args.greedy, args.seed);

  TailSpec tail = TailSpec::parse(args.tail);
  tail.q = args.q;
  tail.kappa_z = args.kappa;
  tail.sampler = ZSampler::parse(args.z_dist);
  tail.n_z = args.n_z;
  tail.smoothing = !args.no_smoothing;
  tail.seed = derive_seed(args.seed, stream_tail_seed);

  DesignResult result = optimize(table.standardized, pool, metric, tail,
                                 SearchMode::parse(args.mode));

  DesignArtifact artifact;
  artifact.created_at = iso_utc_now();
  artifact.covariates = table;
  artifact.covariates.raw.resize(0, 0);  // artifact stores the standardized table
  artifact.result = result;
  save_design(artifact, args.out_path);

  std::printf("design: n=%lld p=%lld pool=%lld (generator %s)\n",
              static_cast<long long>(result.n), static_cast<long long>(result.p),
              static_cast<long long>(result.pool_size), result.generator.c_str());
  std::printf("optimal threshold a*=%.10g at s*=%lld (Q*=%.10g, %s, %s)\n",
              result.a_star, static_cast<long long>(result.s_star), result.q_star,
              result.metric_name.c_str(), result.tail_name.c_str());
  if (result.inference_fragile)
    std::printf("warning: s* < 10 n; W* may be too small for accurate moment "
                "estimates and a well-resolved randomization test\n");
  if (result.clamped_eigen_mass > 1e-6)
    std::printf("warning: clamped negative eigenvalue mass %.3g during the sweep\n",
                result.clamped_eigen_mass);
  std::printf("wrote %s\n", args.out_path.c_str());
  return 0;
}

int run_assign(const std::string& design_path, std::uint64_t seed) {
  DesignArtifact artifact = load_design(design_path);
  Rng rng(derive_seed(seed, stream_assign));
  Index idx = static_cast<Index>(
      rng.below(static_cast<std::uint64_t>(artifact.result.s_star)));
  std::printf("%s\n", format_assignment(artifact.result.w_star.col(idx)).c_str());
  return 0;
}

struct TestArgs {
  std::string design_path, y_path, w_path;
  std::string estimator = "lr";
  Index R = 10000;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  bool ci = false;
  bool quantile_region = false;
};

int run_test(const TestArgs& args) {
  DesignArtifact artifact = load_design(args.design_path);
  ExperimentRecord record;
  record.y = load_vector(args.y_path);
  record.w_exp = load_assignment_file(args.w_path);
  if (args.estimator == "dm") record.estimator = ExperimentRecord::Estimator::dm;
  else if (args.estimator == "lr") record.estimator = ExperimentRecord::Estimator::lr;
  else throw validation_error("test: estimator must be dm or lr");

  const Matrix& X = artifact.covariates.standardized;
  TestResult result = randomization_test(artifact.result, X, record, args.R,
                                         args.alpha, args.seed, args.quantile_region);
  std::printf("estimate=%.10g\n", result.estimate);
  std::printf("p_value=%.10g\n", result.p_value);
  std::printf("replicates=%lld\n", static_cast<long long>(result.r_used));
  std::printf("reject_at_alpha=%s (alpha=%g)\n",
              result.p_value <= args.alpha ? "yes" : "no", args.alpha);
  if (args.ci) {
    ConfidenceInterval interval =
        confidence_interval(artifact.result, X, record, args.R, args.alpha,
                            default_delta_grid(result), args.seed);
    std::printf("ci_%g=[%.10g, %.10g]\n", 1.0 - args.alpha, interval.lo, interval.hi);
  }
  return 0;
}

struct SimulateArgs {
  std::string study;
  std::string config_path;
  std::string out_dir = "results";
  bool paper_scale = false;
  std::string p_list = "1,2,5,10,25";
  std::uint64_t seed = 0;
  bool seed_set = false;
};

int run_simulate(const SimulateArgs& args) {
  SimConfig config;
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path, std::ios::binary);
    if (!in) throw validation_error("cannot open sim config '" + args.config_path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    config = SimConfig::from_json_text(ss.str());
  } else if (args.paper_scale) {
    config = SimConfig::paper_scale();
  }
  if (args.seed_set) config.seed = args.seed;

  if (args.study == "strategy-comparison") {
    SimOutput out = run_strategy_comparison(config);
    write_strategy_csv(out, args.out_dir);
    std::printf("sd(z)/sd(X beta) = %.4f (target %.4f)\n", out.sd_ratio,
                std::sqrt((1.0 - config.r2_target) / config.r2_target));
    for (const StrategyStats& s : out.strategies)
      std::printf("%-5s mean MSE %.6g   %g-quantile %.6g\n", s.name.c_str(), s.mean,
                  config.q, s.tail_q);
  } else if (args.study == "tail-agreement") {
    SimOutput out = run_tail_strategy_agreement(config);
    write_tail_csv(out, args.out_dir);
    for (const TailTrace& tr : out.traces)
      std::printf("%-15s a* = %.6g at grid index %lld (s = %lld)\n", tr.name.c_str(),
                  tr.a_star, static_cast<long long>(tr.astar_index),
                  static_cast<long long>(tr.s[static_cast<size_t>(tr.astar_index)]));
  } else if (args.study == "threshold-vs-p") {
    std::vector<Index> p_list;
    std::stringstream ss(args.p_list);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) p_list.push_back(static_cast<Index>(std::stoll(tok)));
    SimOutput out = run_threshold_vs_p(config, p_list);
    write_threshold_csv(out, args.out_dir);
    for (const ThresholdRow& r : out.threshold_rows) {
      if (r.ok)
        std::printf("p=%-4lld a*=%.6g  s*=%lld  quantile rank %.4f %s\n",
                    static_cast<long long>(r.p), r.a_star,
                    static_cast<long long>(r.s_star), r.quantile_rank, r.note.c_str());
      else
        std::printf("p=%-4lld failed: %s\n", static_cast<long long>(r.p), r.note.c_str());
    }
  } else {
    throw validation_error("simulate: unknown study '" + args.study +
                           "' (expected strategy-comparison|tail-agreement|threshold-vs-p)");
  }
  std::printf("wrote CSV output under %s/\n", args.out_dir.c_str());
  return 0;
}

int run_validate(const std::string& design_path) {
  DesignArtifact artifact = load_design(design_path);
  std::vector<std::string> findings = validate_design(artifact);
  std::printf("validate: %s passes all structural and moment invariants\n",
              design_path.c_str());
  for (const std::string& f : findings) std::printf("note: %s\n", f.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal rerandomization threshold designs with randomization "
               "inference"};
  app.require_subcommand(1);

  DesignArgs design_args;
  CLI::App* design = app.add_subcommand(
      "design", "Sweep a BCRD pool for the MSE-tail-optimal threshold");
  design->add_option("--x", design_args.x_path, "covariate file (CSV)")->required();
  design->add_flag("--header", design_args.header, "first covariate row is a header");
  design->add_option("--S", design_args.S, "BCRD pool size");
  design->add_option("--metric", design_args.metric,
                     "mahalanobis|kernel-linear|kernel-exponential|kernel-gaussian[:bw]");
  design->add_option("--tail", design_args.tail, "exact|normal|approx");
  design->add_option("--q", design_args.q, "tail quantile");
  design->add_option("--kappa", design_args.kappa, "excess kurtosis (approx tail)");
  design->add_option("--z-dist", design_args.z_dist, "gaussian|laplace|t:<dof>");
  design->add_option("--Nz", design_args.n_z, "exact tail draw count");
  design->add_flag("--no-smoothing", design_args.no_smoothing,
                   "select on the raw exact-MC trace");
  design->add_option("--mode", design_args.mode, "exhaustive|grid:<points>|binary:<tol>");
  design->add_option("--seed", design_args.seed, "master seed");
  design->add_option("--greedy", design_args.greedy,
                     "append this many greedy-refined assignments to the pool");
  design->add_option("--out", design_args.out_path, "output design artifact");

  std::string assign_design;
  std::uint64_t assign_seed = 1;
  CLI::App* assign = app.add_subcommand("assign", "Sample one assignment from W*");
  assign->add_option("--design", assign_design, "design artifact")->required();
  assign->add_option("--seed", assign_seed, "sampling seed");

  TestArgs test_args;
  CLI::App* test = app.add_subcommand("test", "Randomization test over W*");
  test->add_option("--design", test_args.design_path, "design artifact")->required();
  test->add_option("--y", test_args.y_path, "response file, one value per line")->required();
  test->add_option("--w", test_args.w_path, "realized assignment file ('+'/'-')")->required();
  test->add_option("--estimator", test_args.estimator, "dm|lr");
  test->add_option("--R", test_args.R, "replicate cap");
  test->add_option("--alpha", test_args.alpha, "test level");
  test->add_option("--seed", test_args.seed, "replicate sampling seed");
  test->add_flag("--ci", test_args.ci, "also invert the test into a confidence interval");
  test->add_flag("--quantile-region", test_args.quantile_region,
                 "use the alpha/2:1-alpha/2 retainment-region convention");

  SimulateArgs sim_args;
  CLI::App* simulate = app.add_subcommand("simulate", "Desk-scale studies");
  simulate->add_option("study", sim_args.study,
                       "strategy-comparison|tail-agreement|threshold-vs-p")->required();
  simulate->add_option("--config", sim_args.config_path, "sim config JSON");
  simulate->add_option("--out-dir", sim_args.out_dir, "output directory");
  simulate->add_flag("--paper-scale", sim_args.paper_scale,
                     "n=100 p=10 S=25000 outer=3000 inner=1000");
  simulate->add_option("--p-list", sim_args.p_list, "threshold-vs-p covariate counts");
  simulate->add_option("--seed", sim_args.seed, "master seed")
      ->each([&](const std::string&) { sim_args.seed_set = true; });

  std::string validate_design_path;
  CLI::App* validate = app.add_subcommand("validate", "Check a design artifact's invariants");
  validate->add_option("--design", validate_design_path, "design artifact")->required();

  try {
    app.parse(argc, argv);
    if (design->parsed()) return run_design(design_args);
    if (assign->parsed()) return run_assign(assign_design, assign_seed);
    if (test->parsed()) return run_test(test_args);
    if (simulate->parsed()) return run_simulate(sim_args);
    if (validate->parsed()) return run_validate(validate_design_path);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const rerand::validation_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const rerand::numerical_error& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
