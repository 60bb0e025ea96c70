#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#ifdef PAIRRANK_HAVE_LAPACKE
#include <lapacke.h>
#endif

namespace pairrank {

/// Thin SVD, M = U * diag(s) * V^T with s sorted descending.
struct Svd {
  Eigen::MatrixXd U;
  Eigen::VectorXd s;
  Eigen::MatrixXd V;
};

/// Dense thin SVD. Uses LAPACK dgesdd when available (the Eigen fallback is
/// several times slower at the matrix sizes the solver runs at).
inline Svd thin_svd(const Eigen::MatrixXd& m) {
  const auto rows = m.rows(), cols = m.cols();
  const auto k = std::min(rows, cols);
#ifdef PAIRRANK_HAVE_LAPACKE
  if (k > 16) {
    Svd out;
    Eigen::MatrixXd work = m;  // dgesdd destroys its input
    out.U.resize(rows, k);
    out.s.resize(k);
    Eigen::MatrixXd vt(k, cols);
    int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'S', static_cast<lapack_int>(rows),
                              static_cast<lapack_int>(cols), work.data(),
                              static_cast<lapack_int>(rows), out.s.data(), out.U.data(),
                              static_cast<lapack_int>(rows), vt.data(),
                              static_cast<lapack_int>(k));
    if (info == 0) {
      out.V = vt.transpose();
      return out;
    }
    // fall through to the Eigen path on (rare) non-convergence
  }
#endif
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return Svd{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

inline double spectral_norm(const Eigen::MatrixXd& m) {
  Svd svd = thin_svd(m);
  return svd.s.size() > 0 ? svd.s(0) : 0.0;
}

/// Number of singular values above rel_threshold * sigma_max.
inline int numerical_rank(const Eigen::MatrixXd& m, double rel_threshold = 1e-8) {
  Svd svd = thin_svd(m);
  if (svd.s.size() == 0 || svd.s(0) <= 0.0) return 0;
  const double cut = rel_threshold * svd.s(0);
  int r = 0;
  for (Eigen::Index i = 0; i < svd.s.size(); ++i)
    if (svd.s(i) > cut) ++r;
  return r;
}

inline Eigen::MatrixXd symmetric_part(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

inline Eigen::MatrixXd skew_part(const Eigen::MatrixXd& m) {
  return 0.5 * (m - m.transpose());
}

}  // namespace pairrank
