#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "pairrank/linalg.hpp"
#include "pairrank/prefcore.hpp"
#include "pairrank/rng.hpp"

namespace pairrank {

/// Ground-truth parameters of the bilinear energy model: the energy of item i
/// against item j is E_ij = f_i^T w + f_i^T W f_j, and lower energy wins.
struct FlrParams {
  Eigen::VectorXd w;        // d
  Eigen::MatrixXd W;        // d x d
  LinkFunction psi = LinkFunction::logit();
};

/// Item features F (d x n, one column per item) together with the SVD-derived
/// quantities the completion step works with: the orthogonalized features
/// A = Sigma * V^T and the inverse condition number kappa.
class FeatureSet {
 public:
  explicit FeatureSet(Eigen::MatrixXd f) : f_(std::move(f)) {
    if (f_.rows() < 1 || f_.cols() < 1) throw DataError("feature matrix is empty");
    if (f_.rows() > f_.cols())
      throw DataError("feature dimension exceeds item count; features cannot be full rank");
    Svd svd = thin_svd(f_);
    if (svd.s(svd.s.size() - 1) <= 1e-10 * svd.s(0)) throw DataError("features not full rank");
    u_ = std::move(svd.U);
    sigma_ = std::move(svd.s);
    a_ = sigma_.asDiagonal() * svd.V.transpose();
  }

  static FeatureSet identity(int n) { return FeatureSet(Eigen::MatrixXd::Identity(n, n)); }

  int dim() const { return static_cast<int>(f_.rows()); }
  int items() const { return static_cast<int>(f_.cols()); }
  const Eigen::MatrixXd& F() const { return f_; }
  const Eigen::MatrixXd& A() const { return a_; }   // d x n
  const Eigen::MatrixXd& U() const { return u_; }   // d x d
  const Eigen::VectorXd& singular_values() const { return sigma_; }
  double kappa() const { return sigma_(sigma_.size() - 1) / sigma_(0); }

  /// Same column/row spaces with every singular value set to 1 (kappa = 1).
  FeatureSet conditioned() const {
    Svd svd = thin_svd(f_);
    return FeatureSet(svd.U * svd.V.transpose());
  }

 private:
  Eigen::MatrixXd f_;
  Eigen::MatrixXd u_;
  Eigen::MatrixXd a_;
  Eigen::VectorXd sigma_;
};

/// Outcomes of pairwise comparisons over a support set of item pairs.
/// Pairs are canonical (i < j), sorted and duplicate-free; wins[k] counts the
/// wins of the smaller index i out of trials[k] comparisons of support[k].
/// Trials may differ per pair (survey data); synthetic data uses a constant.
class ComparisonDataset {
 public:
  ComparisonDataset(FeatureSet features, std::vector<std::pair<int, int>> support,
                    std::vector<long> wins, std::vector<long> trials)
      : features_(std::move(features)),
        support_(std::move(support)),
        wins_(std::move(wins)),
        trials_(std::move(trials)) {
    const int n = features_.items();
    if (support_.size() != wins_.size() || support_.size() != trials_.size())
      throw DataError("comparison arrays have mismatched lengths");
    std::vector<std::size_t> idx(support_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return support_[a] < support_[b]; });
    apply_permutation(idx);
    for (std::size_t k = 0; k < support_.size(); ++k) {
      auto [i, j] = support_[k];
      if (i < 0 || j < 0 || i >= n || j >= n || i >= j)
        throw DataError("support pairs must be canonical (i < j) and within range");
      if (k > 0 && support_[k - 1] == support_[k]) throw DataError("duplicate support pair");
      if (trials_[k] < 1 || wins_[k] < 0 || wins_[k] > trials_[k])
        throw DataError("win counts must satisfy 0 <= wins <= trials >= 1");
    }
  }

  const FeatureSet& features() const { return features_; }
  int items() const { return features_.items(); }
  int dim() const { return features_.dim(); }
  std::size_t pairs() const { return support_.size(); }
  const std::vector<std::pair<int, int>>& support() const { return support_; }
  const std::vector<long>& wins() const { return wins_; }
  const std::vector<long>& trials() const { return trials_; }

  long max_trials() const {
    long m = 1;
    for (long t : trials_) m = std::max(m, t);
    return m;
  }

 private:
  void apply_permutation(const std::vector<std::size_t>& idx) {
    std::vector<std::pair<int, int>> s(idx.size());
    std::vector<long> w(idx.size()), t(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      s[k] = support_[idx[k]];
      w[k] = wins_[idx[k]];
      t[k] = trials_[idx[k]];
    }
    support_ = std::move(s);
    wins_ = std::move(w);
    trials_ = std::move(t);
  }

  FeatureSet features_;
  std::vector<std::pair<int, int>> support_;
  std::vector<long> wins_;
  std::vector<long> trials_;
};

/// d x d skew-symmetric latent matrix L with psi(P) = A^T L A.
struct LatentSkew {
  Eigen::MatrixXd L;
};

/// Pairwise energies E_ij = f_i^T w + f_i^T W f_j.
inline Eigen::MatrixXd energy_matrix(const FlrParams& params, const FeatureSet& features) {
  if (params.w.size() != features.dim() || params.W.rows() != features.dim() ||
      params.W.cols() != features.dim())
    throw DataError("parameter and feature dimensions disagree");
  const Eigen::VectorXd g = features.F().transpose() * params.w;            // n
  const Eigen::MatrixXd b = features.F().transpose() * params.W * features.F();  // n x n
  return g.replicate(1, features.items()) + b;
}

/// psi(P) in closed form: the exact skew matrix of energy differences
/// E_ji - E_ij, free of any clamping or probability round-trip.
inline Eigen::MatrixXd link_scale_matrix(const FlrParams& params, const FeatureSet& features) {
  Eigen::MatrixXd e = energy_matrix(params, features);
  return (e.transpose() - e).eval();
}

/// The generative preference matrix: P_ij = psi^{-1}(E_ji - E_ij), which for
/// the logit link is exactly e^{-E_ij} / (e^{-E_ij} + e^{-E_ji}). Computed
/// through the single stable expression and complement-exact by construction.
inline PreferenceMatrix flr_preference_matrix(const FlrParams& params,
                                              const FeatureSet& features) {
  const Eigen::MatrixXd m = link_scale_matrix(params, features);
  const int n = features.items();
  Eigen::MatrixXd p(n, n);
  for (int i = 0; i < n; ++i) {
    p(i, i) = 0.5;
    for (int j = i + 1; j < n; ++j) {
      double v = params.psi.inverse(m(i, j));
      p(i, j) = v;
      p(j, i) = 1.0 - v;
    }
  }
  return PreferenceMatrix::from_matrix(std::move(p));
}

/// Recovers the d x d latent skew matrix from psi(P) by pseudoinverse:
/// L = (A^T)^+ psi(P) A^+ = Sigma^{-1} V^T psi(P) V Sigma^{-1}, then exact
/// skew-symmetrization. When the all-ones vector lies in the row space of F
/// (synthetic features guarantee this), A^T L A reconstructs psi(P) exactly.
inline LatentSkew latent_skew(const FlrParams& params, const FeatureSet& features) {
  const Eigen::MatrixXd m = link_scale_matrix(params, features);
  Svd svd = thin_svd(features.F());
  const Eigen::MatrixXd vs = svd.V * svd.s.cwiseInverse().asDiagonal();  // n x d = A^+
  Eigen::MatrixXd l = vs.transpose() * m * vs;
  l = 0.5 * (l - l.transpose().eval());
  return LatentSkew{std::move(l)};
}

enum class SyntheticModel { model1 = 1, model2 = 2, model3 = 3 };

inline SyntheticModel synthetic_model_from_int(int m) {
  if (m < 1 || m > 3) throw DataError("model must be 1, 2 or 3");
  return static_cast<SyntheticModel>(m);
}

struct SyntheticInstance {
  FlrParams params;
  FeatureSet features;
  PreferenceMatrix preference;
};

/// Random problem instances. w_i ~ U(0,1) always; model 1 sets W = 0, model 2
/// draws W_ij ~ U(0,1), model 3 draws the same W and keeps only its top
/// rank_r singular values. Features are drawn F_ij ~ U(0,1) with the first
/// row replaced by a constant: the all-ones direction must lie in the row
/// space of F for psi(P) = A^T L A to be attainable at all (with w != 0 the
/// unary energy term lives along it). The matrix is then conditioned by
/// setting every singular value to 1, so kappa(F) = 1.
inline SyntheticInstance generate_synthetic(SyntheticModel model, int n, int d, int rank_r,
                                            std::uint64_t seed,
                                            LinkFunction psi = LinkFunction::logit()) {
  if (n < 2 || d < 1 || d > n) throw DataError("need n >= 2 and 1 <= d <= n");
  if (model == SyntheticModel::model3 && (rank_r < 1 || rank_r >= d))
    throw DataError("model 3 needs 1 <= rank_r < d");
  Rng rng(seed);

  Eigen::VectorXd w(d);
  for (int i = 0; i < d; ++i) w(i) = rng.uniform01();

  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(d, d);
  if (model != SyntheticModel::model1) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) W(i, j) = rng.uniform01();
    if (model == SyntheticModel::model3) {
      Svd svd = thin_svd(W);
      Eigen::VectorXd s = svd.s;
      for (int k = rank_r; k < d; ++k) s(k) = 0.0;
      W = svd.U * s.asDiagonal() * svd.V.transpose();
    }
  }

  Eigen::MatrixXd F(d, n);
  F.row(0).setOnes();
  for (int i = 1; i < d; ++i)
    for (int j = 0; j < n; ++j) F(i, j) = rng.uniform01();
  FeatureSet features = FeatureSet(std::move(F)).conditioned();

  FlrParams params{std::move(w), std::move(W), psi};
  PreferenceMatrix preference = flr_preference_matrix(params, features);
  return SyntheticInstance{std::move(params), std::move(features), std::move(preference)};
}

enum class SupportScheme { uniform_without_replacement, bernoulli };

inline SupportScheme support_scheme_from_name(std::string_view name) {
  if (name == "uniform") return SupportScheme::uniform_without_replacement;
  if (name == "bernoulli") return SupportScheme::bernoulli;
  throw DataError("unknown sampling scheme: " + std::string(name));
}

/// Samples a support set of canonical item pairs. Uniform: exactly m pairs
/// without replacement. Bernoulli: each pair kept independently with
/// probability m / (n choose 2), so |support| is m only in expectation.
inline std::vector<std::pair<int, int>> sample_support(int n, long m, SupportScheme scheme,
                                                       std::uint64_t seed) {
  if (n < 2) throw DataError("need n >= 2");
  const long total = static_cast<long>(n) * (n - 1) / 2;
  if (m < 1 || m > total) throw DataError("m must be in [1, n(n-1)/2]");
  Rng rng(seed);
  std::vector<std::pair<int, int>> out;
  if (scheme == SupportScheme::bernoulli) {
    const double rate = static_cast<double>(m) / static_cast<double>(total);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.bernoulli(rate)) out.emplace_back(i, j);
  } else {
    std::vector<long> ids(total);
    std::iota(ids.begin(), ids.end(), 0L);
    for (long k = 0; k < m; ++k) {
      long pick = k + static_cast<long>(rng.next_below(static_cast<std::uint64_t>(total - k)));
      std::swap(ids[k], ids[pick]);
    }
    ids.resize(m);
    std::sort(ids.begin(), ids.end());
    out.reserve(m);
    for (long id : ids) {
      // invert id = i*n - i(i+1)/2 + (j - i - 1)
      int i = 0;
      long off = id;
      while (off >= n - 1 - i) {
        off -= n - 1 - i;
        ++i;
      }
      out.emplace_back(i, i + 1 + static_cast<int>(off));
    }
  }
  return out;
}

/// Draws Binomial(K, P_ij) wins for every supported pair.
inline ComparisonDataset sample_comparisons(const PreferenceMatrix& p, const FeatureSet& features,
                                            const std::vector<std::pair<int, int>>& support,
                                            long k, std::uint64_t seed) {
  if (k < 1) throw DataError("need at least one comparison per pair");
  if (features.items() != p.items()) throw DataError("feature/preference size mismatch");
  Rng rng(seed);
  std::vector<long> wins(support.size()), trials(support.size(), k);
  for (std::size_t idx = 0; idx < support.size(); ++idx) {
    auto [i, j] = support[idx];
    wins[idx] = rng.binomial(k, p(i, j));
  }
  return ComparisonDataset(features, support, std::move(wins), std::move(trials));
}

/// Empirical preference matrix: wins/trials on the support, the exact
/// complement on mirrored entries, and 1/2 on the diagonal and everywhere
/// unobserved.
struct ObservedPreference {
  PreferenceMatrix p_hat;
  std::vector<std::pair<int, int>> support;

  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask() const {
    const int n = p_hat.items();
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> m(n, n);
    m.setConstant(false);
    for (auto [i, j] : support) {
      m(i, j) = true;
      m(j, i) = true;
    }
    return m;
  }
};

inline ObservedPreference empirical_preference(const ComparisonDataset& data) {
  const int n = data.items();
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(n, n, 0.5);
  for (std::size_t k = 0; k < data.pairs(); ++k) {
    auto [i, j] = data.support()[k];
    double frac = static_cast<double>(data.wins()[k]) / static_cast<double>(data.trials()[k]);
    p(i, j) = frac;
    p(j, i) = 1.0 - frac;
  }
  return ObservedPreference{PreferenceMatrix::from_matrix(std::move(p)), data.support()};
}

/// Aggregates per-user item orderings (full or partial, best first) into
/// pairwise counts: every pair appearing in a user's order credits one win to
/// the earlier item, and a pair's trial count is the number of users who
/// ordered it.
inline ComparisonDataset orders_to_comparisons(const std::vector<std::vector<int>>& orders,
                                               const FeatureSet& features) {
  const int n = features.items();
  std::map<std::pair<int, int>, std::pair<long, long>> acc;  // (i,j) -> (wins_i, trials)
  for (const auto& order : orders) {
    std::vector<char> seen(n, 0);
    for (int item : order) {
      if (item < 0 || item >= n) throw DataError("order mentions an unknown item");
      if (seen[item]) throw DataError("order lists an item twice");
      seen[item] = 1;
    }
    for (std::size_t a = 0; a < order.size(); ++a)
      for (std::size_t b = a + 1; b < order.size(); ++b) {
        int i = order[a], j = order[b];
        bool i_won = i < j;
        auto key = std::minmax(i, j);
        auto& [wins, trials] = acc[{key.first, key.second}];
        wins += i_won ? 1 : 0;
        trials += 1;
      }
  }
  if (acc.empty()) throw DataError("orders contain no comparable pairs");
  std::vector<std::pair<int, int>> support;
  std::vector<long> wins, trials;
  for (const auto& [pair, counts] : acc) {
    support.push_back(pair);
    wins.push_back(counts.first);
    trials.push_back(counts.second);
  }
  return ComparisonDataset(features, std::move(support), std::move(wins), std::move(trials));
}

}  // namespace pairrank
