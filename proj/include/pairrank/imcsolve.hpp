#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "pairrank/linalg.hpp"
#include "pairrank/prefcore.hpp"

namespace pairrank {

namespace detail {

// Rebuild U * max(s - threshold, 0) * V^T from the components that survive
// the shrinkage; the rest contribute nothing.
inline Eigen::MatrixXd shrink_reconstruct(const Svd& svd, double threshold) {
  Eigen::Index r = 0;
  while (r < svd.s.size() && svd.s(r) > threshold) ++r;
  if (r == 0) return Eigen::MatrixXd::Zero(svd.U.rows(), svd.V.rows());
  Eigen::VectorXd kept = svd.s.head(r).array() - threshold;
  return svd.U.leftCols(r) * kept.asDiagonal() * svd.V.leftCols(r).transpose();
}

}  // namespace detail

/// Singular-value soft-thresholding, the proximal operator of the trace norm:
/// U * max(Sigma - threshold, 0) * V^T.
inline Eigen::MatrixXd svt(const Eigen::MatrixXd& m, double threshold) {
  if (threshold < 0.0) throw DataError("svt threshold must be >= 0");
  if (threshold == 0.0) return m;
  return detail::shrink_reconstruct(thin_svd(m), threshold);
}

/// Best rank-r approximation in Frobenius norm.
inline Eigen::MatrixXd truncate_rank(const Eigen::MatrixXd& m, int r) {
  const auto k = std::min(m.rows(), m.cols());
  if (r < 1 || r > k) throw DataError("rank must be in [1, min(rows, cols)]");
  if (r == k) return m;
  Svd svd = thin_svd(m);
  Eigen::VectorXd s = svd.s;
  for (Eigen::Index i = r; i < s.size(); ++i) s(i) = 0.0;
  return svd.U * s.asDiagonal() * svd.V.transpose();
}

/// A partially observed n x n target to be explained as A^T Z_L A (plus an
/// optional sparse noise term on the observed entries). The mask is the
/// support set symmetrized: an observed pair (i,j) exposes both (i,j) and
/// (j,i); the diagonal is never observed.
struct ImcProblem {
  Eigen::MatrixXd target;                    // n x n, meaningful on the mask only
  std::vector<std::pair<int, int>> support;  // canonical i < j pairs
  Eigen::MatrixXd A;                         // d x n orthogonalized features

  void validate() const {
    if (target.rows() != target.cols()) throw DataError("target must be square");
    if (A.cols() != target.rows()) throw DataError("feature/target size mismatch");
    if (support.empty()) throw DataError("mask must be nonempty");
    for (auto [i, j] : support)
      if (i < 0 || j <= i || j >= target.cols()) throw DataError("bad support pair");
  }
};

enum class StepRule { fixed, backtracking };

struct ImcConfig {
  double lambda_L = 1e-2;
  double lambda_N = 1e2;
  int max_iters = 2000;
  double tol = 1e-8;   // relative objective-change stopping threshold
  StepRule step_rule = StepRule::fixed;
  bool use_noise_term = false;
  double step_size = 0.0;  // 0 = auto (see solve_imc)

  void validate() const {
    if (!(lambda_L > 0.0)) throw DataError("lambda_L must be > 0");
    if (lambda_N < 0.0) throw DataError("lambda_N must be >= 0");
    if (!(tol > 0.0)) throw DataError("tol must be > 0");
    if (max_iters < 1) throw DataError("max_iters must be >= 1");
  }
};

struct ImcSolution {
  Eigen::MatrixXd Z_L;  // d x d
  Eigen::MatrixXd Z_N;  // n x n, zero when the noise term is disabled
  Eigen::MatrixXd completed;  // A^T Z_L A + Z_N
  std::vector<double> objective_trace;  // value at the start plus one per iteration
  int iterations_used = 0;
};

namespace detail {

// Residual target - A^T Z_L A - Z_N on the symmetrized mask, zero elsewhere.
inline Eigen::MatrixXd masked_residual(const ImcProblem& p, const Eigen::MatrixXd& fit) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(p.target.rows(), p.target.cols());
  for (auto [i, j] : p.support) {
    r(i, j) = p.target(i, j) - fit(i, j);
    r(j, i) = p.target(j, i) - fit(j, i);
  }
  return r;
}

inline double nuclear_norm(const Eigen::MatrixXd& m) { return thin_svd(m).s.sum(); }

}  // namespace detail

/// The exact objective
///   || R_mask(target - A^T Z_L A - Z_N) ||_F^2
///     + lambda_L ||Z_L||_* + lambda_N ||Z_N||_*
/// (the lambda_N term only when the noise variable is enabled).
inline double imc_objective(const ImcProblem& problem, const Eigen::MatrixXd& z_l,
                            const Eigen::MatrixXd& z_n, const ImcConfig& config) {
  const bool identity = problem.A.rows() == problem.A.cols() &&
                        problem.A.isIdentity(0.0);
  Eigen::MatrixXd fit =
      identity ? z_l : Eigen::MatrixXd(problem.A.transpose() * z_l * problem.A);
  if (z_n.size() > 0) fit += z_n;
  double obj = detail::masked_residual(problem, fit).squaredNorm() +
               config.lambda_L * detail::nuclear_norm(z_l);
  if (config.use_noise_term && z_n.size() > 0)
    obj += config.lambda_N * detail::nuclear_norm(z_n);
  return obj;
}

/// Proximal-gradient solver for the trace-norm regularized completion: a
/// gradient step on the smooth residual followed by singular-value
/// soft-thresholding of Z_L at step*lambda_L (and of the mask-restricted Z_N
/// at step*lambda_N when enabled), starting from zero.
///
/// The default fixed step is 1/(2 ||A||_2^4), the inverse Lipschitz constant
/// of the residual gradient, which makes the fixed-step trace non-increasing
/// as well; with the noise term enabled the joint constant 2(||A||_2^2 + 1)^2
/// is used instead. Backtracking halves the step until an Armijo decrease of
/// the objective holds. Stops when the relative objective change drops below
/// tol or after max_iters iterations.
inline ImcSolution solve_imc(const ImcProblem& problem, const ImcConfig& config) {
  problem.validate();
  config.validate();
  const int n = static_cast<int>(problem.target.rows());
  const int d = static_cast<int>(problem.A.rows());
  const bool identity = d == n && problem.A.isIdentity(0.0);
  const bool noise = config.use_noise_term;

  double a_norm = identity ? 1.0 : spectral_norm(problem.A);
  double lipschitz = noise ? 2.0 * std::pow(a_norm * a_norm + 1.0, 2)
                           : 2.0 * std::pow(a_norm, 4);
  double step = config.step_size > 0.0 ? config.step_size : 1.0 / lipschitz;

  Eigen::MatrixXd z_l = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd z_n = noise ? Eigen::MatrixXd::Zero(n, n) : Eigen::MatrixXd();

  auto fit_of = [&](const Eigen::MatrixXd& zl, const Eigen::MatrixXd& zn) {
    Eigen::MatrixXd fit =
        identity ? zl : Eigen::MatrixXd(problem.A.transpose() * zl * problem.A);
    if (noise) fit += zn;
    return fit;
  };

  Eigen::MatrixXd residual = detail::masked_residual(problem, fit_of(z_l, z_n));
  double objective = residual.squaredNorm();
  ImcSolution sol;
  sol.objective_trace.push_back(objective);

  // Proximal step at a given step size; returns the candidate state and its
  // objective. The Z_N prox keeps only masked entries, matching the noise
  // variable's role of absorbing per-observation outliers.
  auto prox_step = [&](double tau, Eigen::MatrixXd& zl_out, Eigen::MatrixXd& zn_out,
                       double& nuc_l_out, double& nuc_n_out, Eigen::MatrixXd& res_out,
                       double& obj_out) {
    Eigen::MatrixXd grad_l =
        identity ? residual : Eigen::MatrixXd(problem.A * residual * problem.A.transpose());
    Eigen::MatrixXd y_l = z_l + 2.0 * tau * grad_l;
    Svd svd = thin_svd(y_l);
    zl_out = detail::shrink_reconstruct(svd, tau * config.lambda_L);
    nuc_l_out = (svd.s.array() - tau * config.lambda_L).max(0.0).sum();
    if (noise) {
      Eigen::MatrixXd y_n = z_n + 2.0 * tau * residual;
      Eigen::MatrixXd zn_full = svt(y_n, tau * config.lambda_N);
      zn_out = Eigen::MatrixXd::Zero(n, n);
      for (auto [i, j] : problem.support) {
        zn_out(i, j) = zn_full(i, j);
        zn_out(j, i) = zn_full(j, i);
      }
      nuc_n_out = detail::nuclear_norm(zn_out);
    }
    res_out = detail::masked_residual(problem, fit_of(zl_out, zn_out));
    obj_out = res_out.squaredNorm() + config.lambda_L * nuc_l_out +
              (noise ? config.lambda_N * nuc_n_out : 0.0);
  };

  int bad_streak = 0;
  for (int iter = 0; iter < config.max_iters; ++iter) {
    Eigen::MatrixXd zl_next, zn_next, res_next;
    double nuc_l_next = 0.0, nuc_n_next = 0.0, obj_next = 0.0;

    if (config.step_rule == StepRule::backtracking) {
      double tau = step;
      bool accepted = false;
      for (int halvings = 0; halvings < 60; ++halvings) {
        prox_step(tau, zl_next, zn_next, nuc_l_next, nuc_n_next, res_next, obj_next);
        double move = (zl_next - z_l).squaredNorm() + (noise ? (zn_next - z_n).squaredNorm() : 0.0);
        if (obj_next <= objective - 1e-4 * move / tau + 1e-12 * std::max(1.0, objective)) {
          accepted = true;
          break;
        }
        tau *= 0.5;
      }
      if (!accepted) throw SolverError("backtracking failed to find a descent step");
      step = std::min(tau * 2.0, 1.0 / lipschitz * 1024.0);
    } else {
      prox_step(step, zl_next, zn_next, nuc_l_next, nuc_n_next, res_next, obj_next);
      if (obj_next > objective + 1e-12 * std::max(1.0, objective)) {
        if (++bad_streak >= 10)
          throw SolverError(
              "objective increased for 10 consecutive steps; "
              "retry with the backtracking step rule or a smaller step");
      } else {
        bad_streak = 0;
      }
    }
    if (!std::isfinite(obj_next)) throw SolverError("objective is not finite");

    double change = std::abs(objective - obj_next);
    z_l = std::move(zl_next);
    if (noise) z_n = std::move(zn_next);
    residual = std::move(res_next);
    objective = obj_next;
    sol.objective_trace.push_back(objective);
    sol.iterations_used = iter + 1;
    if (change < config.tol * std::max(std::abs(objective), 1e-30)) break;
  }

  sol.completed = fit_of(z_l, z_n);
  sol.Z_L = std::move(z_l);
  sol.Z_N = noise ? std::move(z_n) : Eigen::MatrixXd::Zero(n, n);
  if (!sol.completed.allFinite()) throw SolverError("completed matrix is not finite");
  return sol;
}

}  // namespace pairrank
