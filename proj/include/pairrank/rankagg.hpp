#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "pairrank/prefcore.hpp"

namespace pairrank {

/// Per-item win counts of the thresholded matrix: v_i = #{j : M_ij > 1/2}.
/// Entries exactly 1/2 (including the diagonal) do not count.
struct CopelandScores {
  std::vector<int> v;
};

inline CopelandScores copeland_scores(const PreferenceMatrix& m) {
  const int n = m.items();
  CopelandScores scores;
  scores.v.assign(n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (m(i, j) > 0.5) ++scores.v[i];
  return scores;
}

/// Copeland ranking: items sorted by descending win count, ties broken by
/// ascending item index (stable, deterministic).
inline Ranking copeland(const PreferenceMatrix& m) {
  CopelandScores scores = copeland_scores(m);
  std::vector<int> order(scores.v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores.v[a] > scores.v[b]; });
  return Ranking::from_order(order);
}

struct BruteForceResult {
  Ranking ranking;
  double min_dist;
};

/// Exhaustive minimizer of dist over all n! permutations; the first
/// lexicographic order attaining the minimum wins. Refuses n > 10.
inline BruteForceResult brute_force_optimal(const PreferenceMatrix& p) {
  const int n = p.items();
  if (n < 2) throw DataError("brute force needs at least two items");
  if (n > 10) throw DataError("brute force search is limited to n <= 10");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> best_order = order;
  double best = std::numeric_limits<double>::infinity();
  do {
    double d = dist(Ranking::from_order(order), p);
    if (d < best - 1e-15) {
      best = d;
      best_order = order;
    }
  } while (std::next_permutation(order.begin(), order.end()));
  return BruteForceResult{Ranking::from_order(best_order), best};
}

/// dist(copeland(P), P) / min_sigma dist(sigma, P). A zero optimum counts as
/// ratio 1 when Copeland also achieves zero and +infinity otherwise.
inline double approximation_ratio(const PreferenceMatrix& p) {
  const double cope = dist(copeland(p), p);
  const double best = brute_force_optimal(p).min_dist;
  if (best == 0.0)
    return cope == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return cope / best;
}

}  // namespace pairrank
