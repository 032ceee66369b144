#pragma once

// Independent reference implementations used only by tests. They enumerate
// alignment paths explicitly and share no code with the DP implementations
// they check.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "mtscluster/ema.hpp"
#include "mtscluster/matrix.hpp"

namespace oracle {

using mtscluster::EmaSeries;
using mtscluster::Matrix;

enum class Cost { squared, euclidean };

inline double local(const EmaSeries& x, const EmaSeries& y, std::size_t i,
                    std::size_t j, Cost cost) {
  double s = 0.0;
  for (std::size_t v = 0; v < x.n_variables(); ++v) {
    const double d = x.values(i, v) - y.values(j, v);
    s += d * d;
  }
  return cost == Cost::squared ? s : std::sqrt(s);
}

inline bool in_band(std::size_t i, std::size_t j, std::optional<int> band) {
  if (!band) return true;
  const long diff = static_cast<long>(i) - static_cast<long>(j);
  return diff <= *band && -diff <= *band;
}

inline void dtw_walk(const EmaSeries& x, const EmaSeries& y, std::size_t i,
                     std::size_t j, double acc, Cost cost, std::optional<int> band,
                     double& best) {
  acc += local(x, y, i, j, cost);
  if (acc >= best) return;  // paths only add non-negative cost
  if (i + 1 == x.length() && j + 1 == y.length()) {
    best = acc;
    return;
  }
  if (i + 1 < x.length() && j + 1 < y.length() && in_band(i + 1, j + 1, band))
    dtw_walk(x, y, i + 1, j + 1, acc, cost, band, best);
  if (i + 1 < x.length() && in_band(i + 1, j, band))
    dtw_walk(x, y, i + 1, j, acc, cost, band, best);
  if (j + 1 < y.length() && in_band(i, j + 1, band))
    dtw_walk(x, y, i, j + 1, acc, cost, band, best);
}

/// Minimum path cost by exhaustive enumeration of all monotone alignments.
inline double brute_dtw(const EmaSeries& x, const EmaSeries& y,
                        Cost cost = Cost::squared,
                        std::optional<int> band = std::nullopt) {
  double best = std::numeric_limits<double>::infinity();
  dtw_walk(x, y, 0, 0, 0.0, cost, band, best);
  return best;
}

inline double kappa(const EmaSeries& x, const EmaSeries& y, std::size_t i,
                    std::size_t j, double sigma) {
  const double t = local(x, y, i, j, Cost::squared) / (2.0 * sigma * sigma);
  return std::exp(-t - std::log(2.0 - std::exp(-t)));
}

inline void gak_walk(const EmaSeries& x, const EmaSeries& y, std::size_t i,
                     std::size_t j, double prod, double sigma, double& total) {
  prod *= kappa(x, y, i, j, sigma);
  if (i + 1 == x.length() && j + 1 == y.length()) {
    total += prod;
    return;
  }
  if (i + 1 < x.length() && j + 1 < y.length())
    gak_walk(x, y, i + 1, j + 1, prod, sigma, total);
  if (i + 1 < x.length()) gak_walk(x, y, i + 1, j, prod, sigma, total);
  if (j + 1 < y.length()) gak_walk(x, y, i, j + 1, prod, sigma, total);
}

/// Sum over all monotone paths of the product of local kernel values.
inline double brute_gak(const EmaSeries& x, const EmaSeries& y, double sigma) {
  double total = 0.0;
  gak_walk(x, y, 0, 0, 1.0, sigma, total);
  return total;
}

/// The GAK recurrence carried in plain linear space; usable whenever the
/// values stay representable.
inline double linear_gak(const EmaSeries& x, const EmaSeries& y, double sigma) {
  const std::size_t tx = x.length();
  const std::size_t ty = y.length();
  std::vector<double> prev(ty + 1, 0.0);
  std::vector<double> cur(ty + 1, 0.0);
  prev[0] = 1.0;
  for (std::size_t i = 1; i <= tx; ++i) {
    std::fill(cur.begin(), cur.end(), 0.0);
    for (std::size_t j = 1; j <= ty; ++j)
      cur[j] = kappa(x, y, i - 1, j - 1, sigma) *
               (prev[j] + cur[j - 1] + prev[j - 1]);
    std::swap(prev, cur);
  }
  return prev[ty];
}

}  // namespace oracle
