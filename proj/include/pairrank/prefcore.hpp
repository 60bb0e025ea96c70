#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pairrank/gauss.hpp"

namespace pairrank {

/// Bad or inconsistent input data (files, dimensions, invariant violations).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The optimizer failed (divergence, non-finite objective).
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class LinkKind { logit, probit };

/// Strictly increasing bijection [0,1] -> R applied entry-wise to preference
/// probabilities. logit(x) = log(x/(1-x)); probit(x) = Phi^{-1}(x).
class LinkFunction {
 public:
  static LinkFunction logit() { return LinkFunction(LinkKind::logit); }
  static LinkFunction probit() { return LinkFunction(LinkKind::probit); }

  static LinkFunction from_name(std::string_view name) {
    if (name == "logit") return logit();
    if (name == "probit") return probit();
    throw DataError("unknown link function: " + std::string(name));
  }

  LinkKind kind() const { return kind_; }
  const char* name() const { return kind_ == LinkKind::logit ? "logit" : "probit"; }

  double forward(double p) const {
    assert(p > 0.0 && p < 1.0);
    if (kind_ == LinkKind::logit) return std::log(p / (1.0 - p));
    return norm_inv_cdf(p);
  }

  double inverse(double x) const {
    if (kind_ == LinkKind::logit) return 1.0 / (1.0 + std::exp(-x));
    return norm_cdf(x);
  }

  /// d/dp forward(p); grows monotonically toward both endpoints.
  double derivative(double p) const {
    assert(p > 0.0 && p < 1.0);
    if (kind_ == LinkKind::logit) return 1.0 / (p * (1.0 - p));
    return 1.0 / norm_pdf(norm_inv_cdf(p));
  }

  /// Largest |forward'| on [lo, hi]; attained at whichever endpoint is
  /// farther from 1/2.
  double lipschitz_on(double lo, double hi) const {
    double edge = std::abs(lo - 0.5) > std::abs(hi - 0.5) ? lo : hi;
    return derivative(edge);
  }

 private:
  explicit LinkFunction(LinkKind k) : kind_(k) {}
  LinkKind kind_;
};

/// n x n matrix of win probabilities: P(i,j) is the probability that item i
/// beats item j. Construction validates P_ij + P_ji = 1 (within 1e-12) and a
/// 1/2 diagonal, then canonicalizes so both invariants hold exactly: the
/// upper triangle is kept and the lower triangle is stored as its exact
/// complement.
class PreferenceMatrix {
 public:
  static PreferenceMatrix from_matrix(Eigen::MatrixXd entries) {
    if (entries.rows() != entries.cols() || entries.rows() < 1)
      throw DataError("preference matrix must be square and non-empty");
    const auto n = entries.rows();
    constexpr double tol = 1e-12;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(entries(i, i) - 0.5) > tol)
        throw DataError("preference matrix diagonal must be 1/2");
      entries(i, i) = 0.5;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        double p = entries(i, j);
        if (!(p >= -tol && p <= 1.0 + tol) || !std::isfinite(entries(j, i)))
          throw DataError("preference matrix entries must lie in [0,1]");
        if (std::abs(p + entries(j, i) - 1.0) > tol)
          throw DataError("preference matrix must satisfy P_ij + P_ji = 1");
        p = std::clamp(p, 0.0, 1.0);
        entries(i, j) = p;
        entries(j, i) = 1.0 - p;
      }
    }
    return PreferenceMatrix(std::move(entries));
  }

  /// All entries 1/2 (no strict preferences).
  static PreferenceMatrix all_ties(int n) {
    return PreferenceMatrix(Eigen::MatrixXd::Constant(n, n, 0.5));
  }

  int items() const { return static_cast<int>(entries_.rows()); }
  double operator()(int i, int j) const { return entries_(i, j); }
  const Eigen::MatrixXd& entries() const { return entries_; }

  /// Same preferences with items relabeled: perm[i] is the new label of
  /// item i.
  PreferenceMatrix relabeled(const std::vector<int>& perm) const {
    const int n = items();
    Eigen::MatrixXd out(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out(perm[i], perm[j]) = entries_(i, j);
    return PreferenceMatrix(std::move(out));
  }

 private:
  explicit PreferenceMatrix(Eigen::MatrixXd m) : entries_(std::move(m)) {}
  Eigen::MatrixXd entries_;
};

/// Permutation of the items. position(i) is the rank slot of item i and
/// smaller means better: position(i) < position(j) reads "i is ranked above
/// j". This convention is fixed here once and used everywhere.
class Ranking {
 public:
  static Ranking from_positions(std::vector<int> positions) {
    check_bijection(positions);
    return Ranking(std::move(positions));
  }

  /// order[k] = the item occupying rank slot k.
  static Ranking from_order(const std::vector<int>& order) {
    std::vector<int> positions(order.size());
    check_bijection(order);
    for (std::size_t k = 0; k < order.size(); ++k) positions[order[k]] = static_cast<int>(k);
    return Ranking(std::move(positions));
  }

  static Ranking identity(int n) {
    std::vector<int> pos(n);
    std::iota(pos.begin(), pos.end(), 0);
    return Ranking(std::move(pos));
  }

  int items() const { return static_cast<int>(positions_.size()); }
  int position(int item) const { return positions_[item]; }
  const std::vector<int>& positions() const { return positions_; }

  std::vector<int> order() const {
    std::vector<int> ord(positions_.size());
    for (std::size_t i = 0; i < positions_.size(); ++i) ord[positions_[i]] = static_cast<int>(i);
    return ord;
  }

  Ranking reversed() const {
    const int n = items();
    std::vector<int> pos(positions_);
    for (auto& p : pos) p = n - 1 - p;
    return Ranking(std::move(pos));
  }

  bool operator==(const Ranking& other) const = default;

 private:
  explicit Ranking(std::vector<int> pos) : positions_(std::move(pos)) {}

  static void check_bijection(const std::vector<int>& v) {
    if (v.empty()) throw DataError("ranking must be non-empty");
    std::vector<char> seen(v.size(), 0);
    for (int x : v) {
      if (x < 0 || x >= static_cast<int>(v.size()) || seen[x])
        throw DataError("ranking is not a permutation of 0..n-1");
      seen[x] = 1;
    }
  }

  std::vector<int> positions_;
};

/// Entry-wise link transform of a preference matrix with probabilities first
/// clipped into [clamp, 1-clamp]; clamp must lie in (0, 1/2). The output is
/// skew-symmetric up to floating-point rounding because the input rows/columns
/// are exact complements.
inline Eigen::MatrixXd apply_link(const PreferenceMatrix& p, const LinkFunction& psi,
                                  double clamp) {
  if (!(clamp > 0.0 && clamp < 0.5)) throw DataError("clamp must be in (0, 1/2)");
  const int n = p.items();
  Eigen::MatrixXd out(n, n);
  for (int i = 0; i < n; ++i) {
    out(i, i) = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      double v = psi.forward(std::clamp(p(i, j), clamp, 1.0 - clamp));
      assert(std::isfinite(v));
      out(i, j) = v;
    }
  }
  return out;
}

/// Entry-wise inverse link of a (nearly) skew-symmetric matrix. The input is
/// first symmetrized to (M - M^T)/2; the result satisfies the
/// PreferenceMatrix invariants exactly (diagonal 1/2, exact complements).
inline PreferenceMatrix inverse_link(const Eigen::MatrixXd& m, const LinkFunction& psi) {
  if (m.rows() != m.cols()) throw DataError("inverse_link requires a square matrix");
  const auto n = m.rows();
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i, i) = 0.5;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double x = 0.5 * (m(i, j) - m(j, i));
      double p = psi.inverse(x);
      out(i, j) = p;
      out(j, i) = 1.0 - p;
    }
  }
  return PreferenceMatrix::from_matrix(std::move(out));
}

/// Fraction of strictly-ordered pairs on which sigma and P disagree: pairs
/// with P_ij = 1/2 never count, so the value lies in [0, 1].
inline double dist(const Ranking& sigma, const PreferenceMatrix& p) {
  const int n = p.items();
  if (n < 2) throw DataError("dist requires at least two items");
  if (sigma.items() != n) throw DataError("ranking and preference matrix sizes differ");
  long disagreements = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (p(i, j) > 0.5 && sigma.position(i) > sigma.position(j)) ++disagreements;
      if (p(j, i) > 0.5 && sigma.position(j) > sigma.position(i)) ++disagreements;
    }
  }
  return static_cast<double>(disagreements) / (0.5 * n * (n - 1));
}

/// True iff P_ij > 1/2 and P_jk > 1/2 always imply P_ik > 1/2.
inline bool is_stochastic_transitive(const PreferenceMatrix& p) {
  const int n = p.items();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (!(p(i, j) > 0.5)) continue;
      for (int k = 0; k < n; ++k)
        if (p(j, k) > 0.5 && !(p(i, k) > 0.5)) return false;
    }
  return true;
}

}  // namespace pairrank
