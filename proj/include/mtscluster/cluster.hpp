#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "mtscluster/dtw.hpp"
#include "mtscluster/ema.hpp"
#include "mtscluster/errors.hpp"
#include "mtscluster/gak.hpp"
#include "mtscluster/matrix.hpp"
#include "mtscluster/rng.hpp"

namespace mtscluster {

enum class Linkage { average, complete, single };
enum class InitMethod { random_partition, kmeanspp };

inline const char* to_string(Linkage l) {
  switch (l) {
    case Linkage::average: return "average";
    case Linkage::complete: return "complete";
    default: return "single";
  }
}

inline Linkage linkage_from_string(const std::string& s) {
  if (s == "average") return Linkage::average;
  if (s == "complete") return Linkage::complete;
  if (s == "single") return Linkage::single;
  throw input_error("unknown linkage '" + s + "'");
}

struct ClusterConfig {
  int k = 2;
  int max_iter = 100;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  double fuzzifier = 2.0;  // fuzzy methods only
  Linkage linkage = Linkage::average;  // hierarchical only
  InitMethod init = InitMethod::random_partition;

  void validate(std::size_t n, int min_k = 2) const {
    if (k < min_k || static_cast<std::size_t>(k) > n)
      throw input_error("cluster: k=" + std::to_string(k) + " outside [" +
                        std::to_string(min_k) + ", N=" + std::to_string(n) + "]");
    if (max_iter < 1) throw input_error("cluster: max_iter must be >= 1");
    if (!(tol > 0.0)) throw input_error("cluster: tol must be positive");
    if (!(fuzzifier > 1.0)) throw input_error("cluster: fuzzifier must be > 1");
  }
};

/// Hard assignment of every individual to one of k clusters. Empty clusters
/// stay visible: k_effective counts populated ones and empty_clusters flags
/// the rest. representatives holds medoid indices where the method has them;
/// barycenters holds synthetic centroid series where the method builds them.
struct HardPartition {
  std::vector<int> labels;
  int k = 0;
  std::vector<int> representatives;
  std::vector<Matrix> barycenters;
  double objective = 0.0;
  int n_iter = 0;
  bool converged = false;
  std::vector<double> objective_trace;
  std::vector<bool> empty_clusters;
  int k_effective = 0;
};

/// Row-stochastic N x k membership matrix plus the representatives that
/// produced it (medoids for k-medoids, barycenters for c-means).
struct FuzzyPartition {
  Matrix memberships;
  double fuzzifier = 2.0;
  std::vector<int> medoids;
  std::vector<Matrix> barycenters;
  double objective = 0.0;
  int n_iter = 0;
  bool converged = false;
  std::vector<double> objective_trace;
  std::vector<bool> empty_clusters;
  int k_effective = 0;
};

namespace detail {

/// Convergence test on the objective: relative change below tol, with an
/// absolute floor of tol for objectives near zero.
inline bool objective_stalled(double prev, double current, double tol) {
  return std::abs(prev - current) < tol * std::max(1.0, std::abs(prev));
}

/// Objective traces must never increase; the iteration schemes guarantee it
/// mathematically, so any rise beyond fp slack is a bug worth failing loudly.
inline void check_trace_monotone(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    const double slack = 1e-9 * std::max(1.0, std::abs(trace[i - 1]));
    if (trace[i] > trace[i - 1] + slack)
      throw numerical_error("objective trace increased at iteration " +
                            std::to_string(i) + ": " + std::to_string(trace[i - 1]) +
                            " -> " + std::to_string(trace[i]));
  }
}

inline void mark_populated(HardPartition& p) {
  std::vector<int> counts(p.k, 0);
  for (int l : p.labels) ++counts[l];
  p.empty_clusters.assign(p.k, false);
  p.k_effective = 0;
  for (int c = 0; c < p.k; ++c) {
    if (counts[c] == 0)
      p.empty_clusters[c] = true;
    else
      ++p.k_effective;
  }
}

/// Initial labels: a shuffled prefix pins one point per cluster, the rest are
/// uniform, so no cluster starts empty and the result is seed-deterministic.
inline std::vector<int> random_partition_labels(std::size_t n, int k, Rng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  shuffle(perm, rng);
  std::vector<int> labels(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    labels[perm[i]] = i < static_cast<std::size_t>(k)
                          ? static_cast<int>(i)
                          : static_cast<int>(uniform_index(rng, k));
  return labels;
}

/// k-means++-style seeding over a precomputed squared-distance matrix:
/// first seed uniform, later seeds proportional to the squared distance to
/// the nearest chosen seed.
inline std::vector<std::size_t> kmeanspp_seeds(const Matrix& sq_dist, int k,
                                               Rng& rng) {
  const std::size_t n = sq_dist.rows();
  std::vector<std::size_t> seeds;
  seeds.push_back(uniform_index(rng, n));
  std::vector<double> best(n);
  while (seeds.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double b = std::numeric_limits<double>::infinity();
      for (std::size_t s : seeds) b = std::min(b, sq_dist(i, s));
      best[i] = b;
      total += b;
    }
    if (total > 0.0) {
      seeds.push_back(weighted_index(rng, best));
    } else {
      // all candidates coincide with a seed; take the lowest unchosen index
      std::size_t pick = 0;
      while (std::find(seeds.begin(), seeds.end(), pick) != seeds.end()) ++pick;
      seeds.push_back(pick);
    }
  }
  return seeds;
}

inline EmaSeries series_from_matrix(Matrix values, std::string id = "barycenter") {
  EmaSeries s;
  s.individual_id = std::move(id);
  s.timestamps.resize(values.rows());
  std::iota(s.timestamps.begin(), s.timestamps.end(), 0.0);
  s.values = std::move(values);
  return s;
}

/// Linear interpolation along the row index, used to bring a DBA seed to the
/// target barycenter length.
inline Matrix resample_rows(const Matrix& src, std::size_t target) {
  if (src.rows() == target) return src;
  Matrix out(target, src.cols());
  if (src.rows() == 1) {
    for (std::size_t t = 0; t < target; ++t)
      for (std::size_t v = 0; v < src.cols(); ++v) out(t, v) = src(0, v);
    return out;
  }
  for (std::size_t t = 0; t < target; ++t) {
    const double pos = target == 1
                           ? 0.0
                           : static_cast<double>(t) *
                                 static_cast<double>(src.rows() - 1) /
                                 static_cast<double>(target - 1);
    const std::size_t lo = std::min(static_cast<std::size_t>(pos), src.rows() - 2);
    const double w = pos - static_cast<double>(lo);
    for (std::size_t v = 0; v < src.cols(); ++v)
      out(t, v) = (1.0 - w) * src(lo, v) + w * src(lo + 1, v);
  }
  return out;
}

inline std::size_t median_length(const EmaDataset& ds,
                                 const std::vector<std::size_t>& members) {
  std::vector<std::size_t> lengths;
  lengths.reserve(members.size());
  for (std::size_t i : members) lengths.push_back(ds.series[i].length());
  std::sort(lengths.begin(), lengths.end());
  return lengths[(lengths.size() - 1) / 2];  // lower median, keeps it integral
}

/// Weighted medoid: the individual minimizing the weighted sum of squared
/// distances to all others. Ties go to the lowest index.
inline std::size_t weighted_medoid(const Matrix& dist,
                                   const std::vector<std::size_t>& candidates,
                                   const std::vector<std::size_t>& over,
                                   const std::vector<double>& weights) {
  std::size_t best = candidates.front();
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t j : candidates) {
    double cost = 0.0;
    for (std::size_t idx = 0; idx < over.size(); ++idx) {
      const double d = dist(over[idx], j);
      cost += weights[idx] * d * d;
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = j;
    }
  }
  return best;
}

/// One DBA pass: align every member to the barycenter, then replace each
/// barycenter sample by the weighted mean of the member samples aligned to it.
inline Matrix dba_update(const EmaDataset& ds, const std::vector<std::size_t>& members,
                         const std::vector<double>& weights, const Matrix& barycenter,
                         const DtwConfig& dcfg) {
  const std::size_t tb = barycenter.rows();
  const std::size_t v = barycenter.cols();
  Matrix accum(tb, v, 0.0);
  std::vector<double> wsum(tb, 0.0);
  const EmaSeries bary = series_from_matrix(barycenter);
  for (std::size_t idx = 0; idx < members.size(); ++idx) {
    const double w = weights[idx];
    if (w <= 0.0) continue;
    const auto& s = ds.series[members[idx]];
    const auto path = dtw_with_path(s, bary, dcfg).path;
    for (const auto& [si, bj] : path) {
      for (std::size_t c = 0; c < v; ++c) accum(bj, c) += w * s.values(si, c);
      wsum[bj] += w;
    }
  }
  Matrix out = barycenter;
  for (std::size_t t = 0; t < tb; ++t) {
    if (wsum[t] <= 0.0) continue;
    for (std::size_t c = 0; c < v; ++c) out(t, c) = accum(t, c) / wsum[t];
  }
  return out;
}

inline constexpr int kDbaInnerIterations = 10;

/// DTW barycenter averaging: fixed-length barycenter refined by repeated
/// alignment-and-average passes.
inline Matrix dba(const EmaDataset& ds, const std::vector<std::size_t>& members,
                  const std::vector<double>& weights, Matrix init,
                  const DtwConfig& dcfg, int n_iter = kDbaInnerIterations) {
  Matrix bary = std::move(init);
  for (int it = 0; it < n_iter; ++it)
    bary = dba_update(ds, members, weights, bary, dcfg);
  return bary;
}

}  // namespace detail

/// Shared fuzzy membership update: u[i][c] = 1 / sum_c' (d_ic/d_ic')^(2/(m-1)).
/// A zero distance pins the full membership on the lowest such cluster.
inline Matrix fuzzy_memberships(const Matrix& dist, double m) {
  const std::size_t n = dist.rows();
  const std::size_t k = dist.cols();
  const double p = 2.0 / (m - 1.0);
  Matrix u(n, k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t zero_at = k;
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (dist(i, c) == 0.0 && zero_at == k) zero_at = c;
      dmin = std::min(dmin, dist(i, c));
    }
    if (zero_at < k) {
      u(i, zero_at) = 1.0;
      continue;
    }
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double r = std::pow(dmin / dist(i, c), p);
      u(i, c) = r;
      total += r;
    }
    for (std::size_t c = 0; c < k; ++c) u(i, c) /= total;
  }
  return u;
}

/// Per-row argmax of the memberships; ties break to the lowest cluster index.
inline HardPartition harden(const FuzzyPartition& fp) {
  HardPartition hp;
  hp.k = static_cast<int>(fp.memberships.cols());
  hp.labels.resize(fp.memberships.rows());
  for (std::size_t i = 0; i < fp.memberships.rows(); ++i) {
    int best = 0;
    for (int c = 1; c < hp.k; ++c)
      if (fp.memberships(i, c) > fp.memberships(i, best)) best = c;
    hp.labels[i] = best;
  }
  hp.representatives = fp.medoids;
  hp.barycenters = fp.barycenters;
  hp.objective = fp.objective;
  hp.n_iter = fp.n_iter;
  hp.converged = fp.converged;
  hp.objective_trace = fp.objective_trace;
  detail::mark_populated(hp);
  return hp;
}

/// Objective recomputation helpers; also used by tests for the relabeling
/// invariance checks.
inline double kmeans_dtw_objective(const EmaDataset& ds, const std::vector<int>& labels,
                                   const std::vector<Matrix>& barycenters,
                                   const DtwConfig& dcfg) {
  double obj = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i)
    obj += dtw(ds.series[i], detail::series_from_matrix(barycenters[labels[i]]), dcfg);
  return obj;
}

inline double kernel_kmeans_objective(const KernelMatrix& km,
                                      const std::vector<int>& labels, int k) {
  const std::size_t n = km.n();
  std::vector<double> size(k, 0.0), within(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) ++size[labels[i]];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (labels[i] == labels[j]) within[labels[i]] += km.k(i, j);
  double obj = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int c = labels[i];
    double col = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (labels[j] == c) col += km.k(i, j);
    obj += km.k(i, i) - 2.0 * col / size[c] + within[c] / (size[c] * size[c]);
  }
  return obj;
}

inline double fkm_objective(const DistanceMatrix& dm, const Matrix& memberships,
                            const std::vector<int>& medoids, double m) {
  double obj = 0.0;
  for (std::size_t i = 0; i < memberships.rows(); ++i)
    for (std::size_t c = 0; c < memberships.cols(); ++c) {
      const double d = dm.d(i, medoids[c]);
      obj += std::pow(memberships(i, c), m) * d * d;
    }
  return obj;
}

/// Lloyd-style k-means under DTW with DBA barycenters. Each barycenter update
/// runs DBA from the cluster medoid and is kept only if it does not worsen
/// the cluster cost, so the objective trace is non-increasing. An emptied
/// cluster is reseeded with the point farthest from its assigned barycenter.
inline HardPartition kmeans_dtw(const EmaDataset& ds, const DtwConfig& dcfg,
                                const ClusterConfig& ccfg,
                                const DistanceMatrix* pairwise = nullptr) {
  ds.validate();
  ccfg.validate(ds.size());
  if (ds.has_missing()) throw input_error("kmeans_dtw: dataset has missing cells");
  const std::size_t n = ds.size();
  const int k = ccfg.k;
  Rng rng(ccfg.seed);

  DistanceMatrix local_dm;
  if (!pairwise) {
    local_dm = distance_matrix(ds, dcfg);
    pairwise = &local_dm;
  }
  const Matrix& pd = pairwise->d;

  // initial barycenters
  std::vector<Matrix> barycenters(k);
  if (ccfg.init == InitMethod::kmeanspp) {
    Matrix sq(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) sq(i, j) = pd(i, j) * pd(i, j);
    const auto seeds = detail::kmeanspp_seeds(sq, k, rng);
    for (int c = 0; c < k; ++c) barycenters[c] = ds.series[seeds[c]].values;
  } else {
    const auto labels0 = detail::random_partition_labels(n, k, rng);
    for (int c = 0; c < k; ++c) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < n; ++i)
        if (labels0[i] == c) members.push_back(i);
      const std::vector<double> w(members.size(), 1.0);
      const std::size_t medoid = detail::weighted_medoid(pd, members, members, w);
      Matrix init = detail::resample_rows(ds.series[medoid].values,
                                          detail::median_length(ds, members));
      barycenters[c] = detail::dba(ds, members, w, std::move(init), dcfg);
    }
  }

  HardPartition part;
  part.k = k;
  part.labels.assign(n, 0);
  Matrix dist(n, k);
  double prev_obj = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < ccfg.max_iter; ++iter) {
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < k; ++c)
        dist(i, c) = dtw(ds.series[i], detail::series_from_matrix(barycenters[c]), dcfg);
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      for (int c = 1; c < k; ++c)
        if (dist(i, c) < dist(i, best)) best = c;
      part.labels[i] = best;
    }
    // reseed empty clusters with the worst-fit point
    for (int c = 0; c < k; ++c) {
      if (std::count(part.labels.begin(), part.labels.end(), c) > 0) continue;
      std::size_t worst = 0;
      double worst_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = dist(i, part.labels[i]);
        if (d > worst_d) {
          worst_d = d;
          worst = i;
        }
      }
      part.labels[worst] = c;
      barycenters[c] = ds.series[worst].values;
      for (std::size_t i = 0; i < n; ++i)
        dist(i, c) = pd(i, worst);
    }
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) obj += dist(i, part.labels[i]);
    part.objective_trace.push_back(obj);
    part.objective = obj;
    part.n_iter = iter + 1;
    if (detail::objective_stalled(prev_obj, obj, ccfg.tol)) {
      part.converged = true;
      break;
    }
    prev_obj = obj;

    for (int c = 0; c < k; ++c) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < n; ++i)
        if (part.labels[i] == c) members.push_back(i);
      const std::vector<double> w(members.size(), 1.0);
      const std::size_t medoid = detail::weighted_medoid(pd, members, members, w);
      Matrix init = detail::resample_rows(ds.series[medoid].values,
                                          detail::median_length(ds, members));
      Matrix candidate = detail::dba(ds, members, w, std::move(init), dcfg);
      double cand_cost = 0.0;
      double old_cost = 0.0;
      const EmaSeries cand_series = detail::series_from_matrix(candidate);
      for (std::size_t i : members) {
        cand_cost += dtw(ds.series[i], cand_series, dcfg);
        old_cost += dist(i, c);
      }
      if (cand_cost <= old_cost) barycenters[c] = std::move(candidate);
    }
  }
  part.barycenters = std::move(barycenters);
  detail::mark_populated(part);
  detail::check_trace_monotone(part.objective_trace);
  return part;
}

/// Kernel k-means over an explicit Gram matrix. Point-to-cluster distances
/// live in the kernel's feature space:
/// d2(i,C) = k_ii - 2 mean_{j in C} k_ij + mean_{j,l in C} k_jl.
inline HardPartition kernel_kmeans(const KernelMatrix& km, const ClusterConfig& ccfg) {
  const std::size_t n = km.n();
  ccfg.validate(n);
  const int k = ccfg.k;
  Rng rng(ccfg.seed);

  std::vector<int> labels;
  if (ccfg.init == InitMethod::kmeanspp) {
    Matrix sq(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        sq(i, j) = km.k(i, i) + km.k(j, j) - 2.0 * km.k(i, j);
    const auto seeds = detail::kmeanspp_seeds(sq, k, rng);
    labels.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      for (int c = 1; c < k; ++c)
        if (sq(i, seeds[c]) < sq(i, seeds[best])) best = c;
      labels[i] = best;
    }
    for (int c = 0; c < k; ++c)
      if (std::count(labels.begin(), labels.end(), c) == 0) labels[seeds[c]] = c;
  } else {
    labels = detail::random_partition_labels(n, k, rng);
  }

  HardPartition part;
  part.k = k;
  part.labels = std::move(labels);
  const auto cluster_d2 = [&](const std::vector<int>& lab, Matrix& d2) {
    std::vector<double> size(k, 0.0), within(k, 0.0);
    Matrix col(n, k, 0.0);
    for (std::size_t i = 0; i < n; ++i) ++size[lab[i]];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        col(i, lab[j]) += km.k(i, j);
        if (lab[i] == lab[j]) within[lab[i]] += km.k(i, j);
      }
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < k; ++c)
        d2(i, c) = size[c] > 0.0 ? km.k(i, i) - 2.0 * col(i, c) / size[c] +
                                       within[c] / (size[c] * size[c])
                                 : std::numeric_limits<double>::infinity();
  };

  Matrix d2(n, k);
  double prev_obj = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < ccfg.max_iter; ++iter) {
    cluster_d2(part.labels, d2);
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) obj += d2(i, part.labels[i]);
    part.objective_trace.push_back(obj);
    part.objective = obj;
    part.n_iter = iter + 1;
    if (detail::objective_stalled(prev_obj, obj, ccfg.tol)) {
      part.converged = true;
      break;
    }
    prev_obj = obj;

    std::vector<int> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      for (int c = 1; c < k; ++c)
        if (d2(i, c) < d2(i, best)) best = c;
      next[i] = best;
    }
    for (int c = 0; c < k; ++c) {
      if (std::count(next.begin(), next.end(), c) > 0) continue;
      std::size_t worst = 0;
      double worst_d = -1.0;
      for (std::size_t i = 0; i < n; ++i)
        if (d2(i, next[i]) > worst_d) {
          worst_d = d2(i, next[i]);
          worst = i;
        }
      next[worst] = c;
    }
    part.labels = std::move(next);
  }
  detail::mark_populated(part);
  detail::check_trace_monotone(part.objective_trace);
  return part;
}

/// Agglomerative clustering with Lance-Williams updates, cut at exactly k
/// clusters. Fully deterministic: merging always lands in the lower slot, so
/// a slot index equals the smallest member index and distance ties resolve
/// to the lexicographically lowest pair. k = 1 is allowed.
inline HardPartition hierarchical(const DistanceMatrix& dm, const ClusterConfig& ccfg) {
  dm.validate();
  const std::size_t n = dm.n();
  ccfg.validate(n, /*min_k=*/1);
  const int k = ccfg.k;

  Matrix w = dm.d;
  std::vector<bool> alive(n, true);
  std::vector<double> size(n, 1.0);
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  std::size_t n_clusters = n;
  int merges = 0;
  while (n_clusters > static_cast<std::size_t>(k)) {
    std::size_t bi = 0, bj = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!alive[j]) continue;
        if (w(i, j) < best) {
          best = w(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    for (std::size_t h = 0; h < n; ++h) {
      if (!alive[h] || h == bi || h == bj) continue;
      double d = 0.0;
      switch (ccfg.linkage) {
        case Linkage::single: d = std::min(w(bi, h), w(bj, h)); break;
        case Linkage::complete: d = std::max(w(bi, h), w(bj, h)); break;
        case Linkage::average:
          d = (size[bi] * w(bi, h) + size[bj] * w(bj, h)) / (size[bi] + size[bj]);
          break;
      }
      w(bi, h) = d;
      w(h, bi) = d;
    }
    size[bi] += size[bj];
    members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
    members[bj].clear();
    alive[bj] = false;
    --n_clusters;
    ++merges;
  }

  HardPartition part;
  part.k = k;
  part.labels.assign(n, -1);
  int label = 0;
  double objective = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!alive[i]) continue;
    for (std::size_t m : members[i]) part.labels[m] = label;
    for (std::size_t a = 0; a < members[i].size(); ++a)
      for (std::size_t b = a + 1; b < members[i].size(); ++b)
        objective += dm.d(members[i][a], members[i][b]);
    ++label;
  }
  part.objective = objective;  // within-cluster pairwise distance sum
  part.n_iter = merges;
  part.converged = true;
  detail::mark_populated(part);
  return part;
}

/// Fuzzy c-means under DTW with membership-weighted DBA barycenters
/// (weights u^m). Same keep-if-not-worse guard as kmeans_dtw, evaluated on
/// the fuzzy objective sum u^m d^2.
inline FuzzyPartition fuzzy_cmeans_dtw(const EmaDataset& ds, const DtwConfig& dcfg,
                                       const ClusterConfig& ccfg,
                                       const DistanceMatrix* pairwise = nullptr) {
  ds.validate();
  ccfg.validate(ds.size());
  if (ds.has_missing()) throw input_error("fuzzy_cmeans_dtw: dataset has missing cells");
  const std::size_t n = ds.size();
  const int k = ccfg.k;
  const double m = ccfg.fuzzifier;
  Rng rng(ccfg.seed);

  DistanceMatrix local_dm;
  if (!pairwise) {
    local_dm = distance_matrix(ds, dcfg);
    pairwise = &local_dm;
  }
  const Matrix& pd = pairwise->d;

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);

  std::vector<Matrix> barycenters(k);
  if (ccfg.init == InitMethod::kmeanspp) {
    Matrix sq(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) sq(i, j) = pd(i, j) * pd(i, j);
    const auto seeds = detail::kmeanspp_seeds(sq, k, rng);
    for (int c = 0; c < k; ++c) barycenters[c] = ds.series[seeds[c]].values;
  } else {
    const auto labels0 = detail::random_partition_labels(n, k, rng);
    for (int c = 0; c < k; ++c) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < n; ++i)
        if (labels0[i] == c) members.push_back(i);
      const std::vector<double> w(members.size(), 1.0);
      const std::size_t medoid = detail::weighted_medoid(pd, members, members, w);
      Matrix init = detail::resample_rows(ds.series[medoid].values,
                                          detail::median_length(ds, members));
      barycenters[c] = detail::dba(ds, members, w, std::move(init), dcfg);
    }
  }

  FuzzyPartition part;
  part.fuzzifier = m;
  Matrix dist(n, k);
  double prev_obj = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < ccfg.max_iter; ++iter) {
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < k; ++c)
        dist(i, c) = dtw(ds.series[i], detail::series_from_matrix(barycenters[c]), dcfg);
    part.memberships = fuzzy_memberships(dist, m);
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < k; ++c)
        obj += std::pow(part.memberships(i, c), m) * dist(i, c) * dist(i, c);
    part.objective_trace.push_back(obj);
    part.objective = obj;
    part.n_iter = iter + 1;
    if (detail::objective_stalled(prev_obj, obj, ccfg.tol)) {
      part.converged = true;
      break;
    }
    prev_obj = obj;

    const auto hardened = [&] {
      std::vector<std::vector<std::size_t>> groups(k);
      for (std::size_t i = 0; i < n; ++i) {
        int best = 0;
        for (int c = 1; c < k; ++c)
          if (part.memberships(i, c) > part.memberships(i, best)) best = c;
        groups[best].push_back(i);
      }
      return groups;
    }();
    for (int c = 0; c < k; ++c) {
      std::vector<double> w(n);
      for (std::size_t i = 0; i < n; ++i) w[i] = std::pow(part.memberships(i, c), m);
      const std::size_t medoid = detail::weighted_medoid(pd, all, all, w);
      const auto& length_basis = hardened[c].empty() ? all : hardened[c];
      Matrix init = detail::resample_rows(ds.series[medoid].values,
                                          detail::median_length(ds, length_basis));
      Matrix candidate = detail::dba(ds, all, w, std::move(init), dcfg);
      const EmaSeries cand_series = detail::series_from_matrix(candidate);
      double cand_cost = 0.0;
      double old_cost = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double dc = dtw(ds.series[i], cand_series, dcfg);
        cand_cost += w[i] * dc * dc;
        old_cost += w[i] * dist(i, c) * dist(i, c);
      }
      if (cand_cost <= old_cost) barycenters[c] = std::move(candidate);
    }
  }
  part.barycenters = std::move(barycenters);
  const HardPartition hp = harden(part);
  part.empty_clusters = hp.empty_clusters;
  part.k_effective = hp.k_effective;
  detail::check_trace_monotone(part.objective_trace);
  return part;
}

/// Fuzzy k-medoids over any distance matrix. Representatives are actual
/// individuals; the medoid update is the exact minimizer
/// argmin_j sum_i u_ic^m d(i,j)^2, so duplicate medoids can arise and are
/// reported as empty clusters rather than repaired.
inline FuzzyPartition fuzzy_kmedoids(const DistanceMatrix& dm, const ClusterConfig& ccfg) {
  dm.validate();
  const std::size_t n = dm.n();
  ccfg.validate(n);
  const int k = ccfg.k;
  const double m = ccfg.fuzzifier;
  Rng rng(ccfg.seed);

  std::vector<int> medoids(k);
  if (ccfg.init == InitMethod::kmeanspp) {
    Matrix sq(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) sq(i, j) = dm.d(i, j) * dm.d(i, j);
    const auto seeds = detail::kmeanspp_seeds(sq, k, rng);
    for (int c = 0; c < k; ++c) medoids[c] = static_cast<int>(seeds[c]);
  } else {
    // random partition, then each cluster's medoid seeds the method
    const auto labels0 = detail::random_partition_labels(n, k, rng);
    for (int c = 0; c < k; ++c) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < n; ++i)
        if (labels0[i] == c) members.push_back(i);
      const std::vector<double> w(members.size(), 1.0);
      medoids[c] = static_cast<int>(detail::weighted_medoid(dm.d, members, members, w));
    }
  }

  FuzzyPartition part;
  part.fuzzifier = m;
  Matrix dist(n, k);
  double prev_obj = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < ccfg.max_iter; ++iter) {
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < k; ++c) dist(i, c) = dm.d(i, medoids[c]);
    part.memberships = fuzzy_memberships(dist, m);
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < k; ++c)
        obj += std::pow(part.memberships(i, c), m) * dist(i, c) * dist(i, c);
    part.objective_trace.push_back(obj);
    part.objective = obj;
    part.n_iter = iter + 1;
    if (detail::objective_stalled(prev_obj, obj, ccfg.tol)) {
      part.converged = true;
      break;
    }
    prev_obj = obj;

    std::vector<int> next(k);
    for (int c = 0; c < k; ++c) {
      double best_cost = std::numeric_limits<double>::infinity();
      int best_j = 0;
      for (std::size_t j = 0; j < n; ++j) {
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = dm.d(i, j);
          cost += std::pow(part.memberships(i, c), m) * d * d;
        }
        if (cost < best_cost) {
          best_cost = cost;
          best_j = static_cast<int>(j);
        }
      }
      next[c] = best_j;
    }
    if (next == medoids) {
      part.converged = true;  // medoid set stabilized
      break;
    }
    medoids = std::move(next);
  }
  part.medoids = std::move(medoids);
  const HardPartition hp = harden(part);
  part.empty_clusters = hp.empty_clusters;
  part.k_effective = hp.k_effective;
  detail::check_trace_monotone(part.objective_trace);
  return part;
}

}  // namespace mtscluster
