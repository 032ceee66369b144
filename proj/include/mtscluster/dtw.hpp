#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mtscluster/ema.hpp"
#include "mtscluster/errors.hpp"
#include "mtscluster/matrix.hpp"
#include "mtscluster/parallel.hpp"

namespace mtscluster {

enum class LocalCost { squared_euclidean, euclidean };

/// Alignment options shared by dtw and softdtw. band_radius is a Sakoe-Chiba
/// window half-width on |i - j| in samples; absent means unconstrained.
struct DtwConfig {
  std::optional<int> band_radius;
  LocalCost local_cost = LocalCost::squared_euclidean;
};

/// N x N pairwise distances plus provenance. metric_tag is one of
/// "dtw", "softdtw", "kernel-induced".
struct DistanceMatrix {
  std::vector<std::string> ids;
  Matrix d;
  std::string metric_tag;

  std::size_t n() const { return d.rows(); }

  void validate() const {
    if (d.rows() != d.cols()) throw input_error("distance matrix not square");
    if (!ids.empty() && ids.size() != d.rows())
      throw input_error("distance matrix id count mismatch");
    for (std::size_t i = 0; i < d.rows(); ++i) {
      if (d(i, i) != 0.0) throw input_error("distance matrix diagonal not zero");
      for (std::size_t j = i + 1; j < d.cols(); ++j) {
        if (d(i, j) != d(j, i)) throw input_error("distance matrix not symmetric");
        if (metric_tag != "softdtw" && d(i, j) < 0.0)
          throw input_error("distance matrix has negative entry");
      }
    }
  }
};

namespace detail {

inline double local_cost(std::span<const double> a, std::span<const double> b,
                         LocalCost lc) {
  const double sq = squared_distance(a, b);
  return lc == LocalCost::squared_euclidean ? sq : std::sqrt(sq);
}

inline void check_dtw_inputs(const EmaSeries& x, const EmaSeries& y,
                             const DtwConfig& cfg) {
  if (x.length() == 0 || y.length() == 0) throw input_error("dtw: empty series");
  if (x.n_variables() != y.n_variables())
    throw input_error("dtw: variable count mismatch");
  if (x.has_missing() || y.has_missing())
    throw input_error("dtw: series has missing cells; repair first");
  if (cfg.band_radius) {
    if (*cfg.band_radius < 0) throw input_error("dtw: negative band radius");
    const auto gap = std::abs(static_cast<long>(x.length()) -
                              static_cast<long>(y.length()));
    if (*cfg.band_radius < gap)
      throw input_error("dtw: band radius " + std::to_string(*cfg.band_radius) +
                        " narrower than length gap " + std::to_string(gap) +
                        "; no feasible path");
  }
}

inline bool in_band(std::size_t i, std::size_t j, const std::optional<int>& radius) {
  if (!radius) return true;
  const long diff = static_cast<long>(i) - static_cast<long>(j);
  return std::labs(diff) <= *radius;
}

}  // namespace detail

struct DtwResult {
  double distance;
  /// Optimal alignment as (x index, y index) pairs from (0,0) to (Tx-1,Ty-1).
  std::vector<std::pair<std::size_t, std::size_t>> path;
};

/// DTW with an optimal alignment path. The accumulated cost is minimized over
/// monotone, continuous, boundary-complete paths; ties during backtracking
/// prefer the diagonal predecessor, then the vertical one (previous x sample),
/// then the horizontal one.
inline DtwResult dtw_with_path(const EmaSeries& x, const EmaSeries& y,
                               const DtwConfig& cfg = {}) {
  detail::check_dtw_inputs(x, y, cfg);
  const std::size_t tx = x.length();
  const std::size_t ty = y.length();
  const double inf = std::numeric_limits<double>::infinity();
  Matrix acc(tx + 1, ty + 1, inf);
  acc(0, 0) = 0.0;
  for (std::size_t i = 1; i <= tx; ++i) {
    for (std::size_t j = 1; j <= ty; ++j) {
      if (!detail::in_band(i - 1, j - 1, cfg.band_radius)) continue;
      const double best =
          std::min({acc(i - 1, j - 1), acc(i - 1, j), acc(i, j - 1)});
      if (best == inf) continue;
      acc(i, j) = best + detail::local_cost(x.values.row(i - 1), y.values.row(j - 1),
                                            cfg.local_cost);
    }
  }
  DtwResult result;
  result.distance = acc(tx, ty);
  std::size_t i = tx;
  std::size_t j = ty;
  while (i > 0 && j > 0) {
    result.path.emplace_back(i - 1, j - 1);
    const double diag = acc(i - 1, j - 1);
    const double vert = acc(i - 1, j);
    const double horz = acc(i, j - 1);
    const double best = std::min({diag, vert, horz});
    if (diag == best) {
      --i;
      --j;
    } else if (vert == best) {
      --i;
    } else {
      --j;
    }
  }
  std::reverse(result.path.begin(), result.path.end());
  return result;
}

/// DTW distance by O(Tx*Ty) dynamic programming with a rolling two-row table.
inline double dtw(const EmaSeries& x, const EmaSeries& y, const DtwConfig& cfg = {}) {
  detail::check_dtw_inputs(x, y, cfg);
  const std::size_t tx = x.length();
  const std::size_t ty = y.length();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(ty + 1, inf);
  std::vector<double> cur(ty + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= tx; ++i) {
    std::fill(cur.begin(), cur.end(), inf);
    const auto xi = x.values.row(i - 1);
    for (std::size_t j = 1; j <= ty; ++j) {
      if (!detail::in_band(i - 1, j - 1, cfg.band_radius)) continue;
      const double best = std::min({prev[j - 1], prev[j], cur[j - 1]});
      if (best == inf) continue;
      cur[j] = best + detail::local_cost(xi, y.values.row(j - 1), cfg.local_cost);
    }
    std::swap(prev, cur);
  }
  return prev[ty];
}

namespace detail {

/// Soft minimum -gamma*log(sum exp(-v/gamma)), stable against infinities.
inline double softmin3(double a, double b, double c, double gamma) {
  const double m = std::min({a, b, c});
  if (!std::isfinite(m)) return m;
  double sum = 0.0;
  for (double v : {a, b, c})
    if (std::isfinite(v)) sum += std::exp(-(v - m) / gamma);
  return m - gamma * std::log(sum);
}

}  // namespace detail

/// Soft-DTW: the DTW recurrence with min replaced by the gamma-smoothed soft
/// minimum. Converges to dtw as gamma -> 0+ and never exceeds it.
inline double softdtw(const EmaSeries& x, const EmaSeries& y, double gamma,
                      const DtwConfig& cfg = {}) {
  if (!(gamma > 0.0)) throw input_error("softdtw: gamma must be positive");
  detail::check_dtw_inputs(x, y, cfg);
  const std::size_t tx = x.length();
  const std::size_t ty = y.length();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(ty + 1, inf);
  std::vector<double> cur(ty + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= tx; ++i) {
    std::fill(cur.begin(), cur.end(), inf);
    const auto xi = x.values.row(i - 1);
    for (std::size_t j = 1; j <= ty; ++j) {
      if (!detail::in_band(i - 1, j - 1, cfg.band_radius)) continue;
      const double soft = detail::softmin3(prev[j - 1], prev[j], cur[j - 1], gamma);
      if (!std::isfinite(soft)) continue;
      cur[j] = soft + detail::local_cost(xi, y.values.row(j - 1), cfg.local_cost);
    }
    std::swap(prev, cur);
  }
  return prev[ty];
}

/// Full pairwise DTW matrix; pairs are filled independently in parallel.
inline DistanceMatrix distance_matrix(const EmaDataset& ds, const DtwConfig& cfg = {}) {
  ds.validate();
  if (ds.has_missing())
    throw input_error("distance_matrix: dataset has missing cells; repair first");
  const std::size_t n = ds.size();
  DistanceMatrix dm;
  dm.ids = ds.ids();
  dm.metric_tag = "dtw";
  dm.d = Matrix(n, n, 0.0);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  parallel_for(pairs.size(), [&](std::size_t p) {
    const auto [i, j] = pairs[p];
    const double v = dtw(ds.series[i], ds.series[j], cfg);
    dm.d(i, j) = v;
    dm.d(j, i) = v;
  });
  return dm;
}

}  // namespace mtscluster
