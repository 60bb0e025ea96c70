#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "pairrank/io.hpp"
#include "pairrank/pipeline.hpp"

namespace pairrank {

enum class SweepVariable { m, K, d };

inline SweepVariable sweep_variable_from_name(std::string_view name) {
  if (name == "m") return SweepVariable::m;
  if (name == "K") return SweepVariable::K;
  if (name == "d") return SweepVariable::d;
  throw DataError("sweep variable must be one of m, K, d");
}

/// One benchmark grid: vary a single problem parameter over `values` while
/// holding the others at their `fixed` settings, for every model, seed and
/// algorithm requested. With auto_m / auto_K set, the sample sizes follow the
/// caption formulas per run, so a d-sweep scales m and K with each d.
struct SweepSpec {
  SweepVariable vary = SweepVariable::m;
  std::vector<long> values;
  long n = 500, d = 20, m = 0, K = 0;  // fixed values; the varied one is ignored
  bool auto_m = true, auto_K = true;   // derive m / K from (n, d) unless given
  std::vector<SyntheticModel> models;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> algorithms;  // subset of {"IPR", "LRPR"}
  int rank_r = 2;
  SupportScheme scheme = SupportScheme::uniform_without_replacement;
  IprConfig config;

  void validate() const {
    if (values.empty()) throw DataError("sweep values must be nonempty");
    for (long v : values)
      if (v < 1) throw DataError("sweep values must be positive");
    if (models.empty() || seeds.empty() || algorithms.empty())
      throw DataError("sweep needs at least one model, seed and algorithm");
    for (const auto& a : algorithms)
      if (a != "IPR" && a != "LRPR") throw DataError("algorithm must be IPR or LRPR");
    if (!auto_m && vary != SweepVariable::m && m < 1)
      throw DataError("fixed m must be positive");
    if (!auto_K && vary != SweepVariable::K && K < 1)
      throw DataError("fixed K must be positive");
  }
};

/// Caption-formula defaults: m = ceil(d^2 log n), K = 50 ceil(d^2 log^2 n / n^2),
/// natural logarithm.
inline long auto_pairs(long n, long d) {
  return static_cast<long>(std::ceil(static_cast<double>(d) * d * std::log(static_cast<double>(n))));
}

inline long auto_comparisons(long n, long d) {
  const double ln = std::log(static_cast<double>(n));
  return 50 * static_cast<long>(std::ceil(static_cast<double>(d) * d * ln * ln /
                                          (static_cast<double>(n) * n)));
}

namespace detail {

struct SweepJob {
  SyntheticModel model;
  long value = 0;  // the varied parameter's value
  std::uint64_t seed = 0;
  long n = 0, d = 0, m = 0, K = 0;
};

}  // namespace detail

/// Runs the grid over a bounded pool of worker threads (one independent,
/// deterministic job per (model, value, seed); both algorithms share the
/// job's dataset). Rows come back in spec order regardless of scheduling:
/// model -> algorithm -> value -> seed, followed by one seed="mean" row per
/// (model, algorithm, value). Wall times are recorded only when `timing` is
/// set, keeping default outputs reproducible byte for byte. Failures become
/// rows with dist = NaN and the message in the error column.
inline std::vector<MetricsRow> run_sweep(const SweepSpec& spec, int threads, bool timing) {
  spec.validate();
  std::vector<detail::SweepJob> jobs;
  for (auto model : spec.models)
    for (long value : spec.values)
      for (auto seed : spec.seeds) {
        detail::SweepJob job{model, value, seed, spec.n, spec.d, spec.m, spec.K};
        if (spec.vary == SweepVariable::d) job.d = value;
        if (spec.auto_m) job.m = auto_pairs(job.n, job.d);
        if (spec.auto_K) job.K = auto_comparisons(job.n, job.d);
        if (spec.vary == SweepVariable::m) job.m = value;
        if (spec.vary == SweepVariable::K) job.K = value;
        jobs.push_back(job);
      }

  struct JobResult {
    double dist_ipr = std::nan("");
    double dist_lrpr = std::nan("");
    double iters_ipr = 0.0, iters_lrpr = 0.0;
    double ms_ipr = 0.0, ms_lrpr = 0.0;
    std::string error_ipr, error_lrpr;
  };
  std::vector<JobResult> results(jobs.size());

  const bool want_ipr =
      std::find(spec.algorithms.begin(), spec.algorithms.end(), "IPR") != spec.algorithms.end();
  const bool want_lrpr =
      std::find(spec.algorithms.begin(), spec.algorithms.end(), "LRPR") != spec.algorithms.end();

  auto run_job = [&](std::size_t idx) {
    const auto& job = jobs[idx];
    JobResult& out = results[idx];
    try {
      SyntheticInstance instance =
          generate_synthetic(job.model, static_cast<int>(job.n), static_cast<int>(job.d),
                             spec.rank_r, job.seed, spec.config.psi);
      auto support = sample_support(static_cast<int>(job.n), job.m, spec.scheme,
                                    derive_seed(job.seed, 1));
      ComparisonDataset data = sample_comparisons(instance.preference, instance.features, support,
                                                  job.K, derive_seed(job.seed, 2));
      auto run_algo = [&](bool use_features, double& dist_out, double& iters_out,
                          double& ms_out, std::string& err_out) {
        try {
          auto t0 = std::chrono::steady_clock::now();
          RankResult result = use_features ? ipr(data, spec.config)
                                           : lrpr_baseline(data, spec.config);
          auto t1 = std::chrono::steady_clock::now();
          dist_out = dist(result.ranking, instance.preference);
          iters_out = result.solver_iterations;
          if (timing) ms_out = std::chrono::duration<double, std::milli>(t1 - t0).count();
        } catch (const std::exception& e) {
          err_out = e.what();
        }
      };
      if (want_ipr) run_algo(true, out.dist_ipr, out.iters_ipr, out.ms_ipr, out.error_ipr);
      if (want_lrpr) run_algo(false, out.dist_lrpr, out.iters_lrpr, out.ms_lrpr, out.error_lrpr);
    } catch (const std::exception& e) {
      out.error_ipr = out.error_lrpr = e.what();
    }
  };

  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) run_job(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= jobs.size()) return;
          run_job(i);
        }
      });
    for (auto& t : pool) t.join();
  }

  auto sanitized = [](std::string msg) {
    for (auto& c : msg)
      if (c == ',' || c == '\n') c = ';';
    return msg;
  };

  std::vector<MetricsRow> rows;
  auto job_index = [&](SyntheticModel model, long value, std::uint64_t seed) {
    std::size_t mi = 0, vi = 0, si = 0;
    for (std::size_t k = 0; k < spec.models.size(); ++k)
      if (spec.models[k] == model) mi = k;
    for (std::size_t k = 0; k < spec.values.size(); ++k)
      if (spec.values[k] == value) vi = k;
    for (std::size_t k = 0; k < spec.seeds.size(); ++k)
      if (spec.seeds[k] == seed) si = k;
    return (mi * spec.values.size() + vi) * spec.seeds.size() + si;
  };

  for (auto model : spec.models) {
    for (const auto& algo : spec.algorithms) {
      const bool is_ipr = algo == "IPR";
      for (long value : spec.values) {
        double dist_sum = 0.0, iter_sum = 0.0, ms_sum = 0.0;
        for (auto seed : spec.seeds) {
          const auto& job = jobs[job_index(model, value, seed)];
          const auto& res = results[job_index(model, value, seed)];
          MetricsRow row;
          row.algorithm = algo;
          row.model = static_cast<int>(model);
          row.n = job.n;
          row.d = job.d;
          row.m = job.m;
          row.K = job.K;
          row.seed = fmt_long(static_cast<long>(seed));
          row.dist = is_ipr ? res.dist_ipr : res.dist_lrpr;
          row.solver_iters = is_ipr ? res.iters_ipr : res.iters_lrpr;
          row.wall_ms = is_ipr ? res.ms_ipr : res.ms_lrpr;
          row.error = sanitized(is_ipr ? res.error_ipr : res.error_lrpr);
          dist_sum += row.dist;
          iter_sum += row.solver_iters;
          ms_sum += row.wall_ms;
          rows.push_back(std::move(row));
        }
        const double count = static_cast<double>(spec.seeds.size());
        MetricsRow mean = rows.back();
        mean.seed = "mean";
        mean.dist = dist_sum / count;
        mean.solver_iters = iter_sum / count;
        mean.wall_ms = ms_sum / count;
        mean.error.clear();
        rows.push_back(std::move(mean));
      }
    }
  }
  return rows;
}

}  // namespace pairrank
