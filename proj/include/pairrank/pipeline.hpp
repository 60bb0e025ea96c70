#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "pairrank/flrmodel.hpp"
#include "pairrank/imcsolve.hpp"
#include "pairrank/rankagg.hpp"

namespace pairrank {

/// End-to-end ranking configuration. When target_rank is absent the spectral
/// truncation of the completed matrix is skipped (the default; truncation
/// needs the true rank, which is rarely known). When clamp is absent it
/// defaults to min(1/(2 K_max), 1/4) so that empirical probabilities of 0 or
/// 1 map to finite link values without distorting interior grid points.
struct IprConfig {
  LinkFunction psi = LinkFunction::logit();
  std::optional<int> target_rank;
  ImcConfig imc;
  std::optional<double> clamp;
};

struct RankResult {
  Ranking ranking;
  PreferenceMatrix completed;  // Q, a valid preference matrix
  Eigen::MatrixXd latent;      // the solver's Z_L estimate (untruncated)
  int solver_iterations = 0;
  double final_objective = 0.0;
  bool features_used = true;
  std::vector<double> objective_trace;
};

inline double auto_clamp(const ComparisonDataset& data, const IprConfig& config) {
  if (config.clamp) {
    if (!(*config.clamp > 0.0 && *config.clamp < 0.5))
      throw DataError("clamp must be in (0, 1/2)");
    return *config.clamp;
  }
  return std::min(0.25, 1.0 / (2.0 * static_cast<double>(data.max_trials())));
}

namespace detail {

inline RankResult run_completion(const ComparisonDataset& data, const IprConfig& config,
                                 Eigen::MatrixXd a, bool features_used) {
  ObservedPreference observed = empirical_preference(data);
  const double clamp = auto_clamp(data, config);
  Eigen::MatrixXd target = apply_link(observed.p_hat, config.psi, clamp);
  ImcProblem problem{std::move(target), observed.support, std::move(a)};
  ImcSolution sol = solve_imc(problem, config.imc);
  Eigen::MatrixXd completed = std::move(sol.completed);
  if (config.target_rank) completed = truncate_rank(completed, *config.target_rank);
  PreferenceMatrix q = inverse_link(completed, config.psi);
  Ranking sigma = copeland(q);
  return RankResult{std::move(sigma),          std::move(q),
                    std::move(sol.Z_L),        sol.iterations_used,
                    sol.objective_trace.back(), features_used,
                    std::move(sol.objective_trace)};
}

}  // namespace detail

/// Inductive pairwise ranking: empirical preference matrix -> link transform
/// with clamping -> inductive completion against A = Sigma V^T from the SVD
/// of the features -> optional rank truncation -> inverse link -> Copeland.
inline RankResult ipr(const ComparisonDataset& data, const IprConfig& config) {
  return detail::run_completion(data, config, data.features().A(), true);
}

/// Feature-free low-rank baseline: the identical pipeline with A = I, i.e.
/// plain trace-norm completion of the link-transformed empirical matrix.
inline RankResult lrpr_baseline(const ComparisonDataset& data, const IprConfig& config) {
  const int n = data.items();
  return detail::run_completion(data, config, Eigen::MatrixXd::Identity(n, n), false);
}

/// Inductive prediction for an item that was not in the training set: the
/// probability that it beats each training item, from its feature vector
/// alone. In the feature SVD basis an item's coordinates are a_i = U^T f_i,
/// so the link-scale score against item j is (U^T f_new)^T Z_L a_j. Uses the
/// untruncated latent estimate; requires a feature-based fit (not the
/// identity-feature baseline).
inline Eigen::VectorXd predict_new_item(const RankResult& result, const FeatureSet& features,
                                        const Eigen::VectorXd& f_new, const LinkFunction& psi) {
  if (!result.features_used)
    throw DataError("prediction for unseen items needs a feature-based fit");
  if (f_new.size() != features.dim()) throw DataError("new feature vector has the wrong size");
  Eigen::VectorXd a_new = features.U().transpose() * f_new;
  // the model's latent is skew; using the skew part keeps predictions
  // consistent with the symmetrization the inverse link applies
  Eigen::MatrixXd l_skew = 0.5 * (result.latent - result.latent.transpose());
  // scores_j = a_j^T L^T a_new = a_new^T L a_j = psi(P_new,j)
  Eigen::VectorXd scores = features.A().transpose() * (l_skew.transpose() * a_new);
  Eigen::VectorXd out(features.items());
  for (int j = 0; j < features.items(); ++j) out(j) = psi.inverse(scores(j));
  return out;
}

struct SampleSizeBounds {
  double m_required;
  double k_required;
};

/// Sample-size bounds used as runtime diagnostics (reporting only; the
/// unspecified universal constant is exposed as C2 with default 1):
///   m > 48 C2^2 d^2 log(n) (1+gamma)^2 / (kappa^8 eps^2 Delta^4)
///   K >= 16 (1+gamma) m L^2 log(n) / (n^2 Delta^2 eps), evaluated at
///   m = m_required.
inline SampleSizeBounds sample_size_requirements(double n, double d, double kappa,
                                                 double delta_margin, double epsilon,
                                                 double gamma, double lipschitz,
                                                 double c2 = 1.0) {
  if (n <= 1.0 || d <= 0.0 || kappa <= 0.0 || delta_margin <= 0.0 || epsilon <= 0.0 ||
      gamma <= 0.0 || lipschitz <= 0.0 || c2 <= 0.0)
    throw DataError("sample_size_requirements needs positive inputs");
  const double m = 48.0 * c2 * c2 * d * d * std::log(n) * (1.0 + gamma) * (1.0 + gamma) /
                   (std::pow(kappa, 8) * epsilon * epsilon * std::pow(delta_margin, 4));
  const double k = 16.0 * (1.0 + gamma) * m * lipschitz * lipschitz * std::log(n) /
                   (n * n * delta_margin * delta_margin * epsilon);
  return SampleSizeBounds{m, k};
}

/// The same pair bound in its proof-level form, 16 C2^2 d^2 log(2/delta) ...
/// with failure probability delta. At delta = 2/n^3 this equals the bound
/// above exactly (log(2/delta) = 3 log n); keeping both forms makes that easy
/// to check.
inline double pairs_required_at_failure_prob(double d, double kappa, double delta_margin,
                                             double epsilon, double gamma, double failure_prob,
                                             double c2 = 1.0) {
  return 16.0 * c2 * c2 * d * d * std::log(2.0 / failure_prob) * (1.0 + gamma) * (1.0 + gamma) /
         (std::pow(kappa, 8) * epsilon * epsilon * std::pow(delta_margin, 4));
}

/// Noise threshold tau = n sqrt(eps/(1+gamma)) Delta / 4 under which the
/// link-scale sampling noise must stay for the recovery argument.
inline double noise_tolerance(double n, double delta_margin, double epsilon, double gamma) {
  return n * std::sqrt(epsilon / (1.0 + gamma)) * delta_margin / 4.0;
}

/// Comparisons per pair needed to keep the sampling noise under tau:
/// K >= m L^2 log(n) / tau^2.
inline double comparisons_per_pair_required(double m, double lipschitz, double n, double tau) {
  return m * lipschitz * lipschitz * std::log(n) / (tau * tau);
}

/// Simulates the finite-sample noise event: draws K comparisons per supported
/// pair from P, forms N_ij = psi(clamped P-hat_ij) - psi(P_ij) over the
/// canonical support (m entries, matching ||N||_F <= sqrt(m) ||N||_inf), and
/// returns the fraction of trials with ||N||_F <= tau.
inline double noise_event_frequency(const PreferenceMatrix& p,
                                    const std::vector<std::pair<int, int>>& support, long k,
                                    const LinkFunction& psi, double tau, int trials,
                                    std::uint64_t seed) {
  if (trials < 1) throw DataError("need at least one trial");
  if (k < 1) throw DataError("need at least one comparison per pair");
  const double clamp = std::min(0.25, 1.0 / (2.0 * static_cast<double>(k)));
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    double sq = 0.0;
    for (auto [i, j] : support) {
      double p_hat = static_cast<double>(rng.binomial(k, p(i, j))) / static_cast<double>(k);
      double noise = psi.forward(std::clamp(p_hat, clamp, 1.0 - clamp)) - psi.forward(p(i, j));
      sq += noise * noise;
    }
    if (std::sqrt(sq) <= tau) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

/// Instance diagnostics around the sample-size bounds. Delta needs the true
/// preference matrix; without one it is computed from the clamped empirical
/// matrix and flagged as empirical.
struct Diagnostics {
  double p_min = 0.0;       // min off-diagonal empirical probability on the support (clamped)
  double delta_margin = 0.0;
  bool delta_is_empirical = false;
  double kappa = 0.0;
  double gamma = 0.0;
  double epsilon = 0.0;
  double c2 = 0.0;
  double lipschitz = 0.0;   // max |psi'| on [P_min/2, 1 - P_min/2]
  double m_required = 0.0;
  double k_required = 0.0;  // at m = m_required
  double k_required_at_m = 0.0;  // at the dataset's actual m
  double tau = 0.0;
};

inline Diagnostics compute_diagnostics(const ComparisonDataset& data, const IprConfig& config,
                                       const std::optional<PreferenceMatrix>& truth,
                                       double epsilon = 0.1, double gamma = 5.0,
                                       double c2 = 1.0) {
  if (!(epsilon > 0.0) || !(gamma > 0.0) || !(c2 > 0.0))
    throw DataError("epsilon, gamma and C2 must be positive");
  Diagnostics diag;
  diag.gamma = gamma;
  diag.epsilon = epsilon;
  diag.c2 = c2;
  diag.kappa = data.features().kappa();

  const double clamp = auto_clamp(data, config);
  ObservedPreference observed = empirical_preference(data);
  double p_min = 1.0;
  for (auto [i, j] : observed.support) {
    p_min = std::min(p_min, std::clamp(observed.p_hat(i, j), clamp, 1.0 - clamp));
    p_min = std::min(p_min, std::clamp(observed.p_hat(j, i), clamp, 1.0 - clamp));
  }
  diag.p_min = p_min;
  diag.lipschitz = config.psi.lipschitz_on(p_min / 2.0, 1.0 - p_min / 2.0);

  double margin = std::numeric_limits<double>::infinity();
  const double psi_half = config.psi.forward(0.5);
  if (truth) {
    for (int i = 0; i < truth->items(); ++i)
      for (int j = 0; j < truth->items(); ++j) {
        if (i == j) continue;
        double p = std::clamp((*truth)(i, j), clamp, 1.0 - clamp);
        margin = std::min(margin, std::abs(config.psi.forward(p) - psi_half));
      }
    diag.delta_is_empirical = false;
  } else {
    for (auto [i, j] : observed.support) {
      double p = std::clamp(observed.p_hat(i, j), clamp, 1.0 - clamp);
      margin = std::min(margin, std::abs(config.psi.forward(p) - psi_half));
    }
    diag.delta_is_empirical = true;
  }
  diag.delta_margin = margin;

  const double n = static_cast<double>(data.items());
  if (margin > 0.0) {
    SampleSizeBounds bounds = sample_size_requirements(n, data.dim(), diag.kappa, margin,
                                                       epsilon, gamma, diag.lipschitz, c2);
    diag.m_required = bounds.m_required;
    diag.k_required = bounds.k_required;
    diag.tau = noise_tolerance(n, margin, epsilon, gamma);
    diag.k_required_at_m = comparisons_per_pair_required(static_cast<double>(data.pairs()),
                                                         diag.lipschitz, n, diag.tau);
  } else {
    diag.m_required = std::numeric_limits<double>::infinity();
    diag.k_required = std::numeric_limits<double>::infinity();
    diag.k_required_at_m = std::numeric_limits<double>::infinity();
    diag.tau = 0.0;
  }
  return diag;
}

}  // namespace pairrank
