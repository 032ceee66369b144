#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "mtscluster/cluster.hpp"
#include "mtscluster/dtw.hpp"
#include "mtscluster/errors.hpp"
#include "mtscluster/matrix.hpp"
#include "mtscluster/parallel.hpp"
#include "mtscluster/rng.hpp"

namespace mtscluster {

/// Intrinsic quality of one partition. pc/pe/xb are present for fuzzy
/// partitions only.
struct QualityReport {
  double silhouette_mean = 0.0;
  std::vector<double> silhouette_per_individual;
  std::optional<double> pc;
  std::optional<double> pe;
  std::optional<double> xb;
  int k_effective = 0;
};

/// Stability of a method across repeated seeded runs.
struct StabilityReport {
  double instability = 0.0;
  int n_runs = 0;
  std::vector<double> silhouette_distribution;
  std::vector<std::uint64_t> seeds;
  Matrix pairwise_disagreements;
  /// Runs whose mean disagreement against all others exceeds 3x the median
  /// pair disagreement.
  std::vector<bool> outlier_runs;
};

/// Silhouette coefficient over a distance matrix. a(i) is the mean distance
/// to the other members of i's cluster, b(i) the smallest mean distance to
/// another populated cluster; s(i) = (b-a)/max(a,b). Singletons score 0.
inline QualityReport silhouette(const DistanceMatrix& dm, const HardPartition& hp) {
  const std::size_t n = dm.n();
  if (hp.labels.size() != n) throw input_error("silhouette: label count mismatch");
  std::vector<int> counts(hp.k, 0);
  for (int l : hp.labels) ++counts[l];
  int populated = 0;
  for (int c : counts)
    if (c > 0) ++populated;
  if (populated < 2)
    throw degenerate_error("silhouette undefined: fewer than 2 populated clusters");

  QualityReport report;
  report.k_effective = populated;
  report.silhouette_per_individual.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int own = hp.labels[i];
    if (counts[own] == 1) {
      report.silhouette_per_individual[i] = 0.0;
      continue;
    }
    std::vector<double> sums(hp.k, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sums[hp.labels[j]] += dm.d(i, j);
    const double a = sums[own] / static_cast<double>(counts[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < hp.k; ++c) {
      if (c == own || counts[c] == 0) continue;
      b = std::min(b, sums[c] / static_cast<double>(counts[c]));
    }
    const double denom = std::max(a, b);
    report.silhouette_per_individual[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  double mean = 0.0;
  for (double s : report.silhouette_per_individual) mean += s;
  report.silhouette_mean = mean / static_cast<double>(n);
  return report;
}

/// PC = (1/N) sum u^2; 1 on crisp partitions, 1/k on uniform ones.
inline double partition_coefficient(const FuzzyPartition& fp) {
  const auto& u = fp.memberships;
  double s = 0.0;
  for (double v : u.data()) s += v * v;
  return s / static_cast<double>(u.rows());
}

/// PE = -(1/N) sum u ln u with 0 ln 0 = 0; 0 on crisp partitions, ln k on
/// uniform ones.
inline double partition_entropy(const FuzzyPartition& fp) {
  const auto& u = fp.memberships;
  double s = 0.0;
  for (double v : u.data())
    if (v > 0.0) s += v * std::log(v);
  return -s / static_cast<double>(u.rows());
}

/// Xie-Beni index from explicit representative distances:
/// XB = sum_i sum_c u_ic^m d(i, rep_c)^2 / (N min_{c!=c'} d(rep_c, rep_c')^2).
/// Lower is better; scale-free in the distances.
inline double xie_beni(const FuzzyPartition& fp, const Matrix& point_to_rep,
                       const Matrix& rep_to_rep) {
  const std::size_t n = fp.memberships.rows();
  const std::size_t k = fp.memberships.cols();
  if (point_to_rep.rows() != n || point_to_rep.cols() != k)
    throw input_error("xie_beni: point-to-representative matrix shape mismatch");
  double num = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c) {
      const double d = point_to_rep(i, c);
      num += std::pow(fp.memberships(i, c), fp.fuzzifier) * d * d;
    }
  double min_sep = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t c2 = c + 1; c2 < k; ++c2)
      min_sep = std::min(min_sep, rep_to_rep(c, c2) * rep_to_rep(c, c2));
  if (!(min_sep > 0.0))
    throw degenerate_error("xie_beni: degenerate separation (coincident representatives)");
  return num / (static_cast<double>(n) * min_sep);
}

/// Xie-Beni for medoid-based partitions: representative distances are columns
/// of the existing distance matrix.
inline double xie_beni_medoids(const FuzzyPartition& fp, const DistanceMatrix& dm) {
  if (fp.medoids.empty()) throw input_error("xie_beni: partition has no medoids");
  const std::size_t n = dm.n();
  const std::size_t k = fp.medoids.size();
  Matrix p2r(n, k);
  Matrix r2r(k, k, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c) p2r(i, c) = dm.d(i, fp.medoids[c]);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t c2 = 0; c2 < k; ++c2) r2r(c, c2) = dm.d(fp.medoids[c], fp.medoids[c2]);
  return xie_beni(fp, p2r, r2r);
}

namespace detail {

/// Maximum assignment value on a square score matrix via the Hungarian
/// algorithm with potentials (O(k^3)).
inline double hungarian_max(const Matrix& score) {
  const int n = static_cast<int>(score.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      int j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -score(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) total += score(match[j] - 1, j - 1);
  return total;
}

inline double best_agreement_exhaustive(const Matrix& confusion) {
  const int k = static_cast<int>(confusion.rows());
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    double agree = 0.0;
    for (int c = 0; c < k; ++c) agree += confusion(c, perm[c]);
    best = std::max(best, agree);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace detail

/// Up to this k, label matching enumerates all permutations; beyond it the
/// Hungarian assignment takes over. Both give the same optimum.
inline constexpr int kExhaustivePermutationLimit = 8;

/// Minimal fraction of individuals whose labels differ between two runs,
/// minimized over all relabelings of one side.
inline double label_disagreement(const std::vector<int>& a, const std::vector<int>& b,
                                 int k, bool force_hungarian = false) {
  if (a.size() != b.size())
    throw input_error("label_disagreement: partition sizes differ");
  if (a.empty()) throw input_error("label_disagreement: empty partitions");
  Matrix confusion(k, k, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0 || a[i] >= k || b[i] < 0 || b[i] >= k)
      throw input_error("label_disagreement: label out of range");
    confusion(a[i], b[i]) += 1.0;
  }
  const double agreement = (k <= kExhaustivePermutationLimit && !force_hungarian)
                               ? detail::best_agreement_exhaustive(confusion)
                               : detail::hungarian_max(confusion);
  return 1.0 - agreement / static_cast<double>(a.size());
}

/// Mean pairwise label disagreement across runs of one method on identical
/// inputs; 0 means every pair of runs agrees up to relabeling.
inline StabilityReport instability(const std::vector<HardPartition>& runs) {
  if (runs.size() < 2) throw input_error("instability: need at least 2 runs");
  const std::size_t n = runs.front().labels.size();
  const int k = runs.front().k;
  for (const auto& r : runs) {
    if (r.labels.size() != n) throw input_error("instability: run sizes differ");
    if (r.k != k) throw input_error("instability: run k differs");
  }
  StabilityReport report;
  report.n_runs = static_cast<int>(runs.size());
  report.pairwise_disagreements = Matrix(runs.size(), runs.size(), 0.0);
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t r = 0; r < runs.size(); ++r)
    for (std::size_t r2 = r + 1; r2 < runs.size(); ++r2) {
      const double d = label_disagreement(runs[r].labels, runs[r2].labels, k);
      report.pairwise_disagreements(r, r2) = d;
      report.pairwise_disagreements(r2, r) = d;
      sum += d;
      ++pairs;
    }
  report.instability = sum / static_cast<double>(pairs);

  std::vector<double> all_pairs;
  all_pairs.reserve(pairs);
  for (std::size_t r = 0; r < runs.size(); ++r)
    for (std::size_t r2 = r + 1; r2 < runs.size(); ++r2)
      all_pairs.push_back(report.pairwise_disagreements(r, r2));
  std::sort(all_pairs.begin(), all_pairs.end());
  const double median = all_pairs.size() % 2 == 1
                            ? all_pairs[all_pairs.size() / 2]
                            : 0.5 * (all_pairs[all_pairs.size() / 2 - 1] +
                                     all_pairs[all_pairs.size() / 2]);
  report.outlier_runs.assign(runs.size(), false);
  for (std::size_t r = 0; r < runs.size(); ++r) {
    double contribution = 0.0;
    for (std::size_t r2 = 0; r2 < runs.size(); ++r2)
      if (r2 != r) contribution += report.pairwise_disagreements(r, r2);
    contribution /= static_cast<double>(runs.size() - 1);
    if (contribution > 3.0 * median) report.outlier_runs[r] = true;
  }
  return report;
}

/// Repeats a seed-sensitive clustering method n_runs times with seeds derived
/// from the master seed, then reports instability and the silhouette
/// distribution of the hardened runs. Replicas execute concurrently with
/// deterministic per-replica streams.
inline StabilityReport stability_suite(
    const std::function<HardPartition(std::uint64_t seed)>& run_method,
    const DistanceMatrix& dm, int n_runs, std::uint64_t master_seed) {
  if (n_runs < 2) throw input_error("stability_suite: need at least 2 runs");
  std::vector<HardPartition> partitions(n_runs);
  std::vector<double> silhouettes(n_runs);
  std::vector<std::uint64_t> seeds(n_runs);
  for (int r = 0; r < n_runs; ++r) seeds[r] = derive_seed(master_seed, r);
  parallel_for(static_cast<std::size_t>(n_runs), [&](std::size_t r) {
    partitions[r] = run_method(seeds[r]);
    silhouettes[r] = silhouette(dm, partitions[r]).silhouette_mean;
  });
  StabilityReport report = instability(partitions);
  report.silhouette_distribution = std::move(silhouettes);
  report.seeds = std::move(seeds);
  return report;
}

}  // namespace mtscluster
