// Acceptance suite: one check per release criterion, each printed as a
// single pass/fail line. Run it via ctest or directly:
//
//   ./acceptance --cli ./tools/pairrank
//
// The --cli flag points at the command-line binary, which the determinism
// criterion invokes.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "pairrank/pairrank.hpp"

#ifdef PAIRRANK_HAVE_LAPACKE
extern "C" void openblas_set_num_threads(int);
#endif

namespace fs = std::filesystem;
using namespace pairrank;

namespace {

std::string g_cli_path;

std::vector<std::pair<int, int>> all_pairs(int n) {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out.emplace_back(i, j);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Failure {
  std::string detail;
};

void require(bool ok, const std::string& detail) {
  if (!ok) throw Failure{detail};
}

// --- 1. link correctness ----------------------------------------------------

void check_links() {
  for (auto link : {LinkFunction::logit(), LinkFunction::probit()}) {
    for (int k = 1; k <= 99; ++k) {
      double p = 0.01 * k;
      double err = std::abs(link.inverse(link.forward(p)) - p);
      require(err < 1e-12, std::string(link.name()) + " roundtrip error " +
                               std::to_string(err) + " at p=" + std::to_string(p));
    }
  }
  double err = std::abs(LinkFunction::logit().forward(0.75) - std::log(3.0));
  require(err < 1e-12, "logit(3/4) deviates from ln 3 by " + std::to_string(err));
}

// --- 2. agreement of the two closed forms ------------------------------------

void check_model_equivalence() {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    int d = 2 + static_cast<int>(seed % 7);
    int n = 12 + static_cast<int>((5 * seed) % 29);
    auto model = static_cast<SyntheticModel>(1 + seed % 3);
    auto inst = generate_synthetic(model, n, d, std::max(1, d / 2), seed);
    LatentSkew skew = latent_skew(inst.params, inst.features);
    const Eigen::MatrixXd& a = inst.features.A();
    auto p2 = inverse_link(Eigen::MatrixXd(a.transpose() * skew.L * a), inst.params.psi);
    double rel = (p2.entries() - inst.preference.entries()).norm() /
                 inst.preference.entries().norm();
    require(rel < 1e-8, "seed " + std::to_string(seed) + ": relative error " +
                            std::to_string(rel));
  }
}

// --- 3. rank bounds of the special cases -------------------------------------

void check_rank_bounds() {
  const int n = 50;
  auto features = FeatureSet::identity(n);
  auto rank_of = [&](const Eigen::VectorXd& w, const Eigen::MatrixXd& big_w) {
    FlrParams params{w, big_w, LinkFunction::logit()};
    return numerical_rank(link_scale_matrix(params, features), 1e-8);
  };
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    Eigen::VectorXd x(n), y(n), w(n);
    for (int i = 0; i < n; ++i) {
      x(i) = rng.normal();
      y(i) = rng.normal();
      w(i) = rng.uniform01();
    }
    Eigen::MatrixXd outer = x * y.transpose();

    int r_a = rank_of(Eigen::VectorXd::Zero(n), outer);
    require(r_a <= 2, "rank-one W with w=0 gave rank " + std::to_string(r_a));

    int r_b = rank_of(w, outer);
    require(r_b <= 4, "rank-one W with w!=0 gave rank " + std::to_string(r_b));

    Eigen::MatrixXd sym(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) sym(i, j) = rng.normal();
    sym = (sym + sym.transpose()).eval();
    int r_c = rank_of(w, sym);
    require(r_c <= 2, "symmetric W gave rank " + std::to_string(r_c));

    const int r = 3;
    Eigen::MatrixXd gx(n, r), gy(n, r);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < r; ++j) {
        gx(i, j) = rng.normal();
        gy(i, j) = rng.normal();
      }
    Eigen::MatrixXd qx = Eigen::HouseholderQR<Eigen::MatrixXd>(gx).householderQ() *
                         Eigen::MatrixXd::Identity(n, r);
    Eigen::MatrixXd qy = Eigen::HouseholderQR<Eigen::MatrixXd>(gy).householderQ() *
                         Eigen::MatrixXd::Identity(n, r);
    Eigen::VectorXd lam(r);
    for (int j = 0; j < r; ++j) lam(j) = 1.0 + rng.uniform01();
    int r_d = rank_of(w, qx * lam.asDiagonal() * qy.transpose() + sym);
    require(r_d <= 2 * r + 2, "low-rank-plus-symmetric W gave rank " + std::to_string(r_d));
  }
}

// --- 4. planted solver recovery ----------------------------------------------

void check_solver_recovery() {
  // d = 10, n = 60, low-rank planted skew matrix. A real skew-symmetric
  // matrix has even rank, so the planted target uses two spectral pairs
  // (rank 4), the nearest realizable rank to the nominal 3.
  const int d = 10, n = 60;
  Rng rng(2024);
  Eigen::MatrixXd f(d, n);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < n; ++j) f(i, j) = rng.uniform01();
  FeatureSet features = FeatureSet(f).conditioned();

  Eigen::MatrixXd raw(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) raw(i, j) = rng.normal();
  Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(raw).householderQ();
  Eigen::MatrixXd l_star = Eigen::MatrixXd::Zero(d, d);
  for (int b = 0; b < 2; ++b) {
    double weight = 1.0 + rng.uniform01();
    l_star += weight * (q.col(2 * b) * q.col(2 * b + 1).transpose() -
                        q.col(2 * b + 1) * q.col(2 * b).transpose());
  }

  ImcProblem problem{
      Eigen::MatrixXd(features.A().transpose() * l_star * features.A()),
      all_pairs(n), features.A()};
  ImcConfig config;
  config.lambda_L = 1e-6;
  config.max_iters = 500;
  ImcSolution sol = solve_imc(problem, config);

  double rel = (sol.Z_L - l_star).norm() / l_star.norm();
  require(rel < 1e-3, "recovery error " + std::to_string(rel));
  require(sol.iterations_used <= 500, "used too many iterations");
  for (std::size_t k = 1; k < sol.objective_trace.size(); ++k)
    require(sol.objective_trace[k] <= sol.objective_trace[k - 1] + 1e-12,
            "objective increased at iteration " + std::to_string(k));
}

// --- 5. end-to-end exact recovery ---------------------------------------------

void check_exact_recovery() {
  std::string dists;
  int exact = 0;
  double min_margin = 1e300;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto inst = generate_synthetic(SyntheticModel::model1, 100, 10, 2, seed);
    auto data = sample_comparisons(inst.preference, inst.features, all_pairs(100), 100000,
                                   derive_seed(seed, 2));
    RankResult res = ipr(data, IprConfig{});
    double d = dist(res.ranking, inst.preference);
    dists += (dists.empty() ? "" : ", ") + fmt_double(d);
    if (d == 0.0) ++exact;
    for (int i = 0; i < 100; ++i)
      for (int j = i + 1; j < 100; ++j)
        min_margin = std::min(min_margin,
                              std::abs(IprConfig{}.psi.forward(inst.preference(i, j))));
  }
  if (exact < 5) {
    // context for the failure: what the sample-size bounds say exact
    // recovery (epsilon below one pair flip) would take on these instances
    double k_needed = comparisons_per_pair_required(4950.0, 4.0, 100.0,
                                        noise_tolerance(100.0, min_margin, 1.0 / 4950.0, 5.0));
    require(false, "dist(IPR, P) = 0 for only " + std::to_string(exact) + "/5 seeds (dists: " +
                       dists + "; min link margin " + fmt_double(min_margin) +
                       ", so the noise bound needs K ~ " + fmt_double(k_needed) +
                       " per pair at full observation vs the 1e5 specified)");
  }
}

// --- 6. sample-efficiency trend -----------------------------------------------

void check_sample_efficiency() {
  SweepSpec spec;
  spec.vary = SweepVariable::m;
  spec.n = 500;
  spec.d = 20;
  spec.values = {auto_pairs(spec.n, spec.d)};
  spec.K = auto_comparisons(spec.n, spec.d);
  spec.models = {SyntheticModel::model1, SyntheticModel::model2, SyntheticModel::model3};
  spec.seeds = {1, 2, 3, 4, 5};
  spec.algorithms = {"IPR", "LRPR"};
  // Both algorithms share this solver budget. The feature-free baseline never
  // reaches the relative-change tolerance at n = 500; its distance is flat
  // from ~200 iterations on (0.455 at 200 vs 0.440 at 2000 on seed 1), so
  // 600 keeps the comparison faithful at a fraction of the cost.
  spec.config.imc.max_iters = 600;

  auto rows = run_sweep(spec, 0, false);
  for (auto model : {1, 2, 3}) {
    double mean_ipr = -1.0, mean_lrpr = -1.0;
    for (const auto& row : rows) {
      if (row.model != model || row.seed != "mean") continue;
      require(row.error.empty(), "model " + std::to_string(model) + " failed: " + row.error);
      (row.algorithm == "IPR" ? mean_ipr : mean_lrpr) = row.dist;
    }
    require(mean_ipr >= 0.0 && mean_lrpr >= 0.0, "missing aggregate rows");
    require(mean_ipr < mean_lrpr,
            "model " + std::to_string(model) + ": mean dist IPR=" + fmt_double(mean_ipr) +
                " not below LRPR=" + fmt_double(mean_lrpr));
    std::printf("       model %d: mean dist IPR %.4f vs LRPR %.4f\n", model, mean_ipr,
                mean_lrpr);
  }
}

// --- 7. copeland approximation quality -----------------------------------------

void check_copeland() {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 7;
    Eigen::MatrixXd p = Eigen::MatrixXd::Constant(n, n, 0.5);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        double v = rng.uniform01();
        p(i, j) = v;
        p(j, i) = 1.0 - v;
      }
    double ratio = approximation_ratio(PreferenceMatrix::from_matrix(p));
    require(ratio <= 5.0, "approximation ratio " + std::to_string(ratio));
  }
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    int n = 8 + static_cast<int>((seed * 17) % 193);  // up to 200
    Rng score_rng(seed);
    Eigen::MatrixXd p = Eigen::MatrixXd::Constant(n, n, 0.5);
    std::vector<double> s(n);
    for (auto& v : s) v = score_rng.uniform(0.5, 4.0);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        double v = s[i] / (s[i] + s[j]);
        p(i, j) = v;
        p(j, i) = 1.0 - v;
      }
    double d = dist(copeland(PreferenceMatrix::from_matrix(p)),
                    PreferenceMatrix::from_matrix(p));
    require(d == 0.0, "copeland missed a strict transitive order (n=" + std::to_string(n) +
                          ", dist=" + fmt_double(d) + ")");
  }
}

// --- 8. finite-sample noise ----------------------------------------------------

void check_noise_bound() {
  const int n = 50;
  auto inst = generate_synthetic(SyntheticModel::model1, n, 5, 2, 11);
  auto support = sample_support(n, 200, SupportScheme::uniform_without_replacement, 1);
  double p_min = 1.0;
  for (auto [i, j] : support)
    p_min = std::min({p_min, inst.preference(i, j), inst.preference(j, i)});
  const auto psi = LinkFunction::logit();
  const double lips = psi.lipschitz_on(p_min / 2.0, 1.0 - p_min / 2.0);
  const double tau = 5.0;
  const long k = static_cast<long>(
      std::ceil(comparisons_per_pair_required(static_cast<double>(support.size()), lips, n, tau)));
  double freq = noise_event_frequency(inst.preference, support, k, psi, tau, 100, 33);
  std::printf("       K = %ld, frequency = %.2f\n", k, freq);
  require(freq >= 0.95, "||N||_F <= tau held in only " + fmt_double(100.0 * freq) +
                            "/100 trials");
}

// --- 9. determinism and file formats --------------------------------------------

int run_cli(const std::string& args) {
  std::string cmd = g_cli_path + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return status;
}

void check_determinism() {
  require(!g_cli_path.empty(), "pass --cli <path-to-pairrank-binary>");
  fs::path tmp = fs::temp_directory_path() / "pairrank_acceptance";
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  // byte-identical dataset generation
  for (const char* sub : {"a", "b"}) {
    int rc = run_cli("--seed 5 --out " + (tmp / sub).string() +
                     " generate --model 3 --n 30 --d 4 --m 60 --K 25");
    require(rc == 0, "generate exited with " + std::to_string(rc));
  }
  for (const char* file : {"features.csv", "comparisons.csv", "truth_p.csv"})
    require(slurp(tmp / "a" / file) == slurp(tmp / "b" / file),
            std::string(file) + " differs between identical runs");

  // byte-identical ranking and report
  for (const char* sub : {"r1", "r2"}) {
    fs::create_directories(tmp / sub);
    int rc = run_cli("--out " + (tmp / sub / "ranking.txt").string() + " rank --features " +
                     (tmp / "a" / "features.csv").string() + " --comparisons " +
                     (tmp / "a" / "comparisons.csv").string() + " --algo ipr --report " +
                     (tmp / sub / "report.json").string());
    require(rc == 0, "rank exited with " + std::to_string(rc));
  }
  require(slurp(tmp / "r1" / "ranking.txt") == slurp(tmp / "r2" / "ranking.txt"),
          "rankings differ between identical runs");
  require(slurp(tmp / "r1" / "report.json") == slurp(tmp / "r2" / "report.json"),
          "reports differ between identical runs");

  // the written formats parse back to identical bytes
  FeatureSet features = read_features(tmp / "a" / "features.csv");
  ComparisonDataset data = read_comparisons(tmp / "a" / "comparisons.csv", features);
  fs::path rewrite = tmp / "rewrite";
  fs::create_directories(rewrite);
  write_features(rewrite / "features.csv", features);
  write_comparisons(rewrite / "comparisons.csv", data);
  write_preference(rewrite / "truth_p.csv", read_preference(tmp / "a" / "truth_p.csv"));
  for (const char* file : {"features.csv", "comparisons.csv", "truth_p.csv"})
    require(slurp(tmp / "a" / file) == slurp(rewrite / file),
            std::string(file) + " does not round-trip bit-exactly");
  Ranking ranking = read_ranking(tmp / "r1" / "ranking.txt");
  write_ranking(rewrite / "ranking.txt", ranking);
  require(slurp(tmp / "r1" / "ranking.txt") == slurp(rewrite / "ranking.txt"),
          "ranking file does not round-trip");

  // eval agrees with the library distance
  {
    int rc = std::system((g_cli_path + " eval --ranking " + (tmp / "r1" / "ranking.txt").string() +
                          " --truth " + (tmp / "a" / "truth_p.csv").string() + " > " +
                          (tmp / "eval.txt").string() + " 2>/dev/null")
                             .c_str());
    require(rc == 0, "eval exited with " + std::to_string(rc));
    double printed = std::stod(slurp(tmp / "eval.txt"));
    double expected = dist(ranking, read_preference(tmp / "a" / "truth_p.csv"));
    require(std::abs(printed - expected) < 5e-7, "eval printed " + slurp(tmp / "eval.txt"));
  }

  // sweeps: identical bytes across runs, means equal seed averages
  {
    std::ofstream spec(tmp / "sweep.json");
    spec << R"({"vary":"m","values":[20,40],"fixed":{"n":16,"d":3,"K":20},)"
         << R"("models":[1],"seeds":[1,2,3],"algorithms":["IPR","LRPR"]})";
  }
  for (const char* name : {"m1.csv", "m2.csv"}) {
    int rc = run_cli("--out " + (tmp / name).string() + " sweep --spec " +
                     (tmp / "sweep.json").string());
    require(rc == 0, "sweep exited with " + std::to_string(rc));
  }
  require(slurp(tmp / "m1.csv") == slurp(tmp / "m2.csv"), "sweep outputs differ across runs");
  auto rows = metrics_from_csv(slurp(tmp / "m1.csv"));
  require(metrics_to_csv(rows) == slurp(tmp / "m1.csv"), "metrics CSV does not round-trip");
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].seed != "mean") continue;
    double sum = 0.0;
    int count = 0;
    for (std::size_t b = k; b-- > 0;) {
      if (rows[b].seed == "mean") break;
      if (rows[b].algorithm != rows[k].algorithm || rows[b].m != rows[k].m ||
          rows[b].model != rows[k].model)
        break;
      sum += rows[b].dist;
      ++count;
    }
    require(count == 3, "mean row without its seed rows");
    require(std::abs(rows[k].dist - sum / count) <= 1e-12,
            "mean row deviates from the seed average");
  }

  // survey-style ingestion: orders -> ground truth -> sampled comparisons,
  // then both algorithms produce valid permutations over the ten items
  {
    fs::path data_dir{PAIRRANK_DATA_DIR};
    int rc = run_cli("--seed 9 --out " + (tmp / "survey").string() +
                     " generate --from-orders " + (data_dir / "sushi_like/orders.csv").string() +
                     " --features " + (data_dir / "sushi_like/features.csv").string() +
                     " --m 20 --K 10");
    require(rc == 0, "generate --from-orders exited with " + std::to_string(rc));
    for (const char* algo : {"ipr", "lrpr"}) {
      fs::path out = tmp / (std::string("survey_ranking_") + algo + ".txt");
      rc = run_cli("--out " + out.string() + " rank --features " +
                   (tmp / "survey/features.csv").string() + " --comparisons " +
                   (tmp / "survey/comparisons.csv").string() + " --algo " + algo + " --trace " +
                   (tmp / "survey/trace.csv").string());
      require(rc == 0, std::string(algo) + " on survey data exited with " + std::to_string(rc));
      require(read_ranking(out).items() == 10, "survey ranking is not a 10-item permutation");
    }
    std::string trace = slurp(tmp / "survey/trace.csv");
    require(trace.rfind("iteration,objective\n", 0) == 0, "trace CSV missing its header");
  }

  // usage errors exit 2; unreadable data exits 3
  int rc = run_cli("rank --algo nonsense");
  require(WIFEXITED(rc) && WEXITSTATUS(rc) == 2,
          "usage error should exit 2, got " + std::to_string(WEXITSTATUS(rc)));
  rc = run_cli("rank --features " + (tmp / "no_such.csv").string() + " --comparisons " +
               (tmp / "no_such.csv").string() + " --algo ipr");
  require(WIFEXITED(rc) && WEXITSTATUS(rc) == 3,
          "data error should exit 3, got " + std::to_string(WEXITSTATUS(rc)));
}

struct Criterion {
  const char* name;
  std::function<void()> fn;
};

}  // namespace

int main(int argc, char** argv) {
#ifdef PAIRRANK_HAVE_LAPACKE
  openblas_set_num_threads(1);
#endif
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--cli") g_cli_path = argv[i + 1];

  const std::vector<Criterion> criteria = {
      {"link correctness", check_links},
      {"model equivalence (energy form vs factored form)", check_model_equivalence},
      {"link-scale rank bounds for the special cases", check_rank_bounds},
      {"planted-model solver recovery", check_solver_recovery},
      {"end-to-end exact recovery on dense data", check_exact_recovery},
      {"sample-efficiency trend (IPR vs LRPR)", check_sample_efficiency},
      {"copeland approximation quality", check_copeland},
      {"finite-sample noise bound", check_noise_bound},
      {"determinism and file formats", check_determinism},
  };

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
      criteria[k].fn();
    } catch (const Failure& f) {
      ok = false;
      detail = f.detail;
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %zu. %s (%.2f s)%s%s\n", ok ? "PASS" : "FAIL", k + 1, criteria[k].name,
                secs, detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  if (failures) std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  else std::printf("all %zu criteria passed\n", criteria.size());
  return failures;
}
