// Command-line front end: dataset generation/ingestion, single ranking runs,
// parameter sweeps and sample-size diagnostics. See README.md for the file
// formats and examples.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pairrank/pairrank.hpp"

#ifdef PAIRRANK_HAVE_LAPACKE
extern "C" void openblas_set_num_threads(int);
#endif

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitSolver = 4;

struct GlobalOpts {
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = available parallelism
  std::string log_level = "info";
  std::string out;
};

void info(const GlobalOpts& g, const std::string& msg) {
  if (g.log_level != "quiet") std::cerr << msg << '\n';
}

long parse_count(const std::string& text, long auto_value, const char* what) {
  if (text == "auto") return auto_value;
  long v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || v < 1)
    throw pairrank::DataError(std::string(what) + " must be a positive integer or 'auto'");
  return v;
}

struct SolverFlags {
  double lambda_l = 1e-2;
  double lambda_n = 1e2;
  bool use_noise_term = false;
  long max_iters = 2000;
  double tol = 1e-8;
  std::string step_rule = "fixed";
  double step_size = 0.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--lambda-L", lambda_l, "Trace-norm weight for the latent matrix");
    cmd->add_option("--lambda-N", lambda_n, "Trace-norm weight for the noise matrix");
    cmd->add_flag("--use-noise-term", use_noise_term, "Enable the sparse noise variable");
    cmd->add_option("--max-iters", max_iters, "Solver iteration cap");
    cmd->add_option("--tol", tol, "Relative objective-change stopping threshold");
    cmd->add_option("--step-rule", step_rule, "fixed or backtracking")
        ->check(CLI::IsMember({"fixed", "backtracking"}));
    cmd->add_option("--step-size", step_size, "Fixed step size (0 = auto)");
  }

  pairrank::ImcConfig config() const {
    pairrank::ImcConfig c;
    c.lambda_L = lambda_l;
    c.lambda_N = lambda_n;
    c.use_noise_term = use_noise_term;
    c.max_iters = static_cast<int>(max_iters);
    c.tol = tol;
    c.step_rule = step_rule == "backtracking" ? pairrank::StepRule::backtracking
                                              : pairrank::StepRule::fixed;
    c.step_size = step_size;
    return c;
  }
};

int cmd_generate(const GlobalOpts& g, int model, long n, long d, int rank_r,
                 const std::string& m_text, const std::string& k_text,
                 const std::string& scheme_name, const std::string& link_name,
                 const std::string& orders_path, const std::string& features_path) {
  using namespace pairrank;
  fs::path out_dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
  fs::create_directories(out_dir);

  std::optional<FeatureSet> features;
  std::optional<PreferenceMatrix> truth;
  if (!orders_path.empty()) {
    if (features_path.empty())
      throw DataError("--from-orders requires --features with the item feature file");
    features = read_features(features_path);
    auto orders = read_orders(orders_path);
    ComparisonDataset all = orders_to_comparisons(orders, *features);
    truth = empirical_preference(all).p_hat;
    n = features->items();
    d = features->dim();
    info(g, "aggregated " + std::to_string(orders.size()) + " orders over " + std::to_string(n) +
                " items");
  } else {
    SyntheticInstance instance = generate_synthetic(
        synthetic_model_from_int(model), static_cast<int>(n), static_cast<int>(d), rank_r,
        g.seed, LinkFunction::from_name(link_name));
    features = std::move(instance.features);
    truth = std::move(instance.preference);
  }

  const long m = parse_count(m_text, auto_pairs(n, d), "--m");
  const long k = parse_count(k_text, auto_comparisons(n, d), "--K");
  auto support = sample_support(static_cast<int>(n), m, support_scheme_from_name(scheme_name),
                                derive_seed(g.seed, 1));
  ComparisonDataset data =
      sample_comparisons(*truth, *features, support, k, derive_seed(g.seed, 2));

  write_features(out_dir / "features.csv", *features);
  write_comparisons(out_dir / "comparisons.csv", data);
  write_preference(out_dir / "truth_p.csv", *truth);
  info(g, "wrote features.csv, comparisons.csv, truth_p.csv to " + out_dir.string() + " (n=" +
              std::to_string(n) + ", d=" + std::to_string(d) + ", m=" + std::to_string(m) +
              ", K=" + std::to_string(k) + ")");
  return 0;
}

int cmd_rank(const GlobalOpts& g, const std::string& features_path,
             const std::string& comparisons_path, const std::string& truth_path,
             const std::string& algo, const std::string& link_name, long rank_r, double clamp,
             const SolverFlags& solver, const std::string& trace_path, bool timing,
             const std::string& out_path, const std::string& report_path) {
  using namespace pairrank;
  FeatureSet features = read_features(features_path);
  ComparisonDataset data = read_comparisons(comparisons_path, std::move(features));

  IprConfig config;
  config.psi = LinkFunction::from_name(link_name);
  config.imc = solver.config();
  if (rank_r > 0) config.target_rank = static_cast<int>(rank_r);
  if (clamp > 0.0) config.clamp = clamp;

  const bool use_features = algo == "ipr";
  auto t0 = std::chrono::steady_clock::now();
  RankResult result = use_features ? ipr(data, config) : lrpr_baseline(data, config);
  auto t1 = std::chrono::steady_clock::now();
  const double wall_ms =
      timing ? std::chrono::duration<double, std::milli>(t1 - t0).count() : 0.0;

  fs::path ranking_path = out_path.empty() ? fs::path("ranking.txt") : fs::path(out_path);
  write_ranking(ranking_path, result.ranking);
  info(g, "wrote " + ranking_path.string());

  if (!trace_path.empty()) {
    write_trace(trace_path, result.objective_trace);
    info(g, "wrote " + trace_path);
  }

  if (!report_path.empty()) {
    ObservedPreference observed = empirical_preference(data);
    double p_min = 1.0;
    const double c = auto_clamp(data, config);
    for (auto [i, j] : observed.support) {
      p_min = std::min(p_min, std::clamp(observed.p_hat(i, j), c, 1.0 - c));
      p_min = std::min(p_min, std::clamp(observed.p_hat(j, i), c, 1.0 - c));
    }
    ordered_json report;
    report["algorithm"] = algo;
    report["n"] = data.items();
    report["d"] = data.dim();
    report["m"] = data.pairs();
    report["K_max"] = data.max_trials();
    report["link"] = link_name;
    report["features_used"] = result.features_used;
    report["lambda_L"] = solver.lambda_l;
    report["lambda_N"] = solver.lambda_n;
    report["use_noise_term"] = solver.use_noise_term;
    report["step_rule"] = solver.step_rule;
    report["tol"] = solver.tol;
    report["clamp"] = c;
    report["target_rank"] = rank_r > 0 ? ordered_json(rank_r) : ordered_json(nullptr);
    report["solver_iterations"] = result.solver_iterations;
    report["final_objective"] = result.final_objective;
    report["kappa"] = data.features().kappa();
    report["p_min_empirical"] = p_min;
    if (!truth_path.empty()) {
      PreferenceMatrix truth = read_preference(truth_path);
      report["dist"] = dist(result.ranking, truth);
    } else {
      report["dist"] = ordered_json(nullptr);
    }
    report["wall_ms"] = wall_ms;
    pairrank::detail::write_text(report_path, report.dump(2) + "\n");
    info(g, "wrote " + std::string(report_path));
  }
  return 0;
}

int cmd_eval(const std::string& ranking_path, const std::string& truth_path) {
  using namespace pairrank;
  Ranking sigma = read_ranking(ranking_path);
  PreferenceMatrix truth = read_preference(truth_path);
  if (sigma.items() != truth.items())
    throw DataError("ranking and ground-truth matrix cover different item sets");
  std::printf("%.6f\n", dist(sigma, truth));
  return 0;
}

int cmd_diagnose(const std::string& features_path, const std::string& comparisons_path,
                 const std::string& truth_path, const std::string& link_name, double clamp,
                 double epsilon, double gamma, double c2) {
  using namespace pairrank;
  FeatureSet features = read_features(features_path);
  ComparisonDataset data = read_comparisons(comparisons_path, std::move(features));
  IprConfig config;
  config.psi = LinkFunction::from_name(link_name);
  if (clamp > 0.0) config.clamp = clamp;
  std::optional<PreferenceMatrix> truth;
  if (!truth_path.empty()) truth = read_preference(truth_path);

  Diagnostics diag = compute_diagnostics(data, config, truth, epsilon, gamma, c2);
  ordered_json out;
  out["n"] = data.items();
  out["d"] = data.dim();
  out["m"] = data.pairs();
  out["K_max"] = data.max_trials();
  out["P_min"] = diag.p_min;
  out["Delta"] = diag.delta_margin;
  out["Delta_source"] = diag.delta_is_empirical ? "empirical" : "truth";
  out["kappa"] = diag.kappa;
  out["gamma"] = diag.gamma;
  out["epsilon"] = diag.epsilon;
  out["C2"] = diag.c2;
  out["L_lipschitz"] = diag.lipschitz;
  out["m_required"] = diag.m_required;
  // identical bound in its proof-level form (failure probability 2/n^3)
  out["m_required_proof_form"] = pairs_required_at_failure_prob(
      data.dim(), diag.kappa, diag.delta_margin, epsilon, gamma,
      2.0 / std::pow(static_cast<double>(data.items()), 3), c2);
  out["K_required"] = diag.k_required;
  out["K_required_at_m"] = diag.k_required_at_m;
  out["tau"] = diag.tau;
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_sweep(const GlobalOpts& g, const std::string& spec_path, const std::string& out_path,
              bool timing) {
  using namespace pairrank;
  std::ifstream in{fs::path(spec_path)};
  if (!in) throw DataError("cannot open sweep spec " + spec_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad sweep spec JSON: " + std::string(e.what()));
  }

  SweepSpec spec;
  try {
    spec.vary = sweep_variable_from_name(j.at("vary").get<std::string>());
    for (const auto& v : j.at("values")) spec.values.push_back(v.get<long>());
    const auto& fixed = j.at("fixed");
    spec.n = fixed.at("n").get<long>();
    spec.d = fixed.at("d").get<long>();
    // m and K follow the caption formulas per run unless pinned to integers
    auto fix_count = [&](const char* key, long& slot, bool& auto_flag) {
      if (!fixed.contains(key) ||
          (fixed[key].is_string() && fixed[key].get<std::string>() == "auto"))
        return;
      slot = fixed[key].is_string()
                 ? parse_count(fixed[key].get<std::string>(), 0, key)
                 : fixed[key].get<long>();
      auto_flag = false;
    };
    fix_count("m", spec.m, spec.auto_m);
    fix_count("K", spec.K, spec.auto_K);
    for (const auto& m : j.at("models"))
      spec.models.push_back(synthetic_model_from_int(m.get<int>()));
    for (const auto& s : j.at("seeds")) spec.seeds.push_back(s.get<std::uint64_t>());
    for (const auto& a : j.at("algorithms")) spec.algorithms.push_back(a.get<std::string>());
    if (j.contains("rank_r")) spec.rank_r = j["rank_r"].get<int>();
    if (j.contains("scheme"))
      spec.scheme = support_scheme_from_name(j["scheme"].get<std::string>());
    if (j.contains("link"))
      spec.config.psi = LinkFunction::from_name(j["link"].get<std::string>());
    if (j.contains("solver")) {
      const auto& s = j["solver"];
      if (s.contains("lambda_L")) spec.config.imc.lambda_L = s["lambda_L"].get<double>();
      if (s.contains("lambda_N")) spec.config.imc.lambda_N = s["lambda_N"].get<double>();
      if (s.contains("use_noise_term"))
        spec.config.imc.use_noise_term = s["use_noise_term"].get<bool>();
      if (s.contains("max_iters")) spec.config.imc.max_iters = s["max_iters"].get<int>();
      if (s.contains("tol")) spec.config.imc.tol = s["tol"].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad sweep spec: " + std::string(e.what()));
  }

  info(g, "running sweep: " + std::to_string(spec.models.size()) + " models x " +
              std::to_string(spec.values.size()) + " values x " +
              std::to_string(spec.seeds.size()) + " seeds");
  auto rows = run_sweep(spec, g.threads, timing);
  fs::path out = out_path.empty() ? fs::path("metrics.csv") : fs::path(out_path);
  pairrank::detail::write_text(out, metrics_to_csv(rows));
  info(g, "wrote " + out.string() + " (" + std::to_string(rows.size()) + " rows)");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef PAIRRANK_HAVE_LAPACKE
  openblas_set_num_threads(1);  // run-level parallelism happens in the sweep pool
#endif

  CLI::App app{"pairrank: ranking items from pairwise comparisons with feature side information"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts g;
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--threads", g.threads, "Worker threads for sweeps (0 = all cores)");
  app.add_option("--log-level", g.log_level, "quiet, info or debug")
      ->check(CLI::IsMember({"quiet", "info", "debug"}));
  app.add_option("--out", g.out, "Output directory or file (command dependent)");

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset or ingest order data");
  int model = 1;
  long n = 100, d = 10;
  int rank_r = 2;
  std::string m_text = "auto", k_text = "auto", scheme = "uniform", gen_link = "logit";
  std::string orders_path, gen_features_path;
  gen->add_option("--model", model, "Synthetic model: 1 (W=0), 2 (general W), 3 (low-rank W)")
      ->check(CLI::Range(1, 3));
  gen->add_option("--n", n, "Number of items");
  gen->add_option("--d", d, "Feature dimension");
  gen->add_option("--rank-r", rank_r, "Rank of W for model 3");
  gen->add_option("--m", m_text, "Pairs to compare (integer or 'auto' = ceil(d^2 log n))");
  gen->add_option("--K", k_text,
                  "Comparisons per pair (integer or 'auto' = 50 ceil(d^2 log^2 n / n^2))");
  gen->add_option("--scheme", scheme, "Support sampling: uniform or bernoulli")
      ->check(CLI::IsMember({"uniform", "bernoulli"}));
  gen->add_option("--link", gen_link, "Link function of the generative model")
      ->check(CLI::IsMember({"logit", "probit"}));
  gen->add_option("--from-orders", orders_path,
                  "Build the ground truth from an orders CSV instead of a synthetic model");
  gen->add_option("--features", gen_features_path, "Feature CSV (required with --from-orders)");

  // rank
  auto* rank = app.add_subcommand("rank", "Rank the items of a dataset");
  std::string features_path, comparisons_path, algo, rank_link = "logit";
  long trunc_rank = 0;
  double clamp = 0.0;
  SolverFlags solver;
  std::string trace_path, report_path;
  bool timing = false;
  std::string rank_truth;
  rank->add_option("--features", features_path, "Feature CSV")->required();
  rank->add_option("--comparisons", comparisons_path, "Comparisons CSV")->required();
  rank->add_option("--truth", rank_truth,
                   "Ground-truth matrix; adds the achieved dist to the report");
  rank->add_option("--algo", algo, "ipr (uses features) or lrpr (feature-free baseline)")
      ->required()
      ->check(CLI::IsMember({"ipr", "lrpr"}));
  rank->add_option("--link", rank_link, "Link function")
      ->check(CLI::IsMember({"logit", "probit"}));
  rank->add_option("--rank-r", trunc_rank, "Truncate the completed matrix to this rank (0 = off)");
  rank->add_option("--clamp", clamp, "Probability clamp (0 = auto, 1/(2 K_max))");
  solver.attach(rank);
  rank->add_option("--trace", trace_path, "Write the solver objective trace CSV here");
  rank->add_flag("--timing", timing, "Record wall time in the report (breaks reproducibility)");
  rank->add_option("--report", report_path, "Write a JSON run report here");

  // eval
  auto* eval = app.add_subcommand("eval", "Distance between a ranking and a ground-truth matrix");
  std::string eval_ranking, eval_truth;
  eval->add_option("--ranking", eval_ranking, "Ranking file")->required();
  eval->add_option("--truth", eval_truth, "Ground-truth preference matrix CSV")->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run a benchmark grid from a JSON spec");
  std::string spec_path;
  bool sweep_timing = false;
  sweep->add_option("--spec", spec_path, "Sweep spec JSON")->required();
  sweep->add_flag("--timing", sweep_timing, "Record wall times (breaks reproducibility)");

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "Report sample-size bounds for a dataset");
  std::string diag_features, diag_comparisons, diag_truth, diag_link = "logit";
  double diag_clamp = 0.0, epsilon = 0.1, gamma = 5.0, c2 = 1.0;
  diag->add_option("--features", diag_features, "Feature CSV")->required();
  diag->add_option("--comparisons", diag_comparisons, "Comparisons CSV")->required();
  diag->add_option("--truth", diag_truth, "Optional ground-truth matrix for the exact margin");
  diag->add_option("--link", diag_link, "Link function")
      ->check(CLI::IsMember({"logit", "probit"}));
  diag->add_option("--clamp", diag_clamp, "Probability clamp (0 = auto)");
  diag->add_option("--epsilon", epsilon, "Target ranking accuracy");
  diag->add_option("--gamma", gamma, "Approximation constant of the aggregation step");
  diag->add_option("--c2", c2, "Unspecified universal constant (reported as given)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed())
      return cmd_generate(g, model, n, d, rank_r, m_text, k_text, scheme, gen_link, orders_path,
                          gen_features_path);
    if (rank->parsed())
      return cmd_rank(g, features_path, comparisons_path, rank_truth, algo, rank_link,
                      trunc_rank, clamp, solver, trace_path, timing, g.out, report_path);
    if (eval->parsed()) return cmd_eval(eval_ranking, eval_truth);
    if (sweep->parsed()) return cmd_sweep(g, spec_path, g.out, sweep_timing);
    if (diag->parsed())
      return cmd_diagnose(diag_features, diag_comparisons, diag_truth, diag_link, diag_clamp,
                          epsilon, gamma, c2);
  } catch (const pairrank::SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const pairrank::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
