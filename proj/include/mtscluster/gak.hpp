#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mtscluster/dtw.hpp"
#include "mtscluster/ema.hpp"
#include "mtscluster/errors.hpp"
#include "mtscluster/matrix.hpp"
#include "mtscluster/parallel.hpp"

namespace mtscluster {

/// GAK options. When sigma is absent, kernel_matrix estimates it from the
/// data and scales by sigma_multiplier. Cosine normalization is on by
/// default: raw alignment sums grow exponentially with series length, so
/// unnormalized values are not comparable across variable-length pairs.
struct GakConfig {
  std::optional<double> sigma;
  double sigma_multiplier = 1.0;
  bool normalize = true;

  void validate() const {
    if (sigma && !(*sigma > 0.0)) throw input_error("gak: sigma must be positive");
    if (!(sigma_multiplier > 0.0))
      throw input_error("gak: sigma_multiplier must be positive");
  }
};

/// Relative tolerance for the numerical positive-semidefiniteness check.
inline constexpr double kPsdTolerance = 1e-8;

/// N x N Gram matrix with the bandwidth that produced it.
struct KernelMatrix {
  std::vector<std::string> ids;
  Matrix k;
  double sigma_used = 0.0;
  bool normalized = false;

  std::size_t n() const { return k.rows(); }
};

namespace detail {

/// Log of the local alignment kernel exp(-phi) with
/// phi = t + log(2 - exp(-t)), t = |a-b|^2 / (2 sigma^2).
inline double log_local_kernel(std::span<const double> a, std::span<const double> b,
                               double inv_two_sigma_sq) {
  const double t = squared_distance(a, b) * inv_two_sigma_sq;
  return -t - std::log1p(-std::expm1(-t));
}

inline double logsumexp3(double a, double b, double c) {
  const double m = std::max({a, b, c});
  if (!std::isfinite(m)) return m;  // all -inf
  return m + std::log(std::exp(a - m) + std::exp(b - m) + std::exp(c - m));
}

}  // namespace detail

/// Log of the global alignment kernel: the sum over all monotone alignment
/// paths of the product of local kernel values, accumulated entirely in
/// log-space so no series length can overflow or underflow. An optional
/// Sakoe-Chiba band restricts paths exactly as in dtw.
inline double log_gak(const EmaSeries& x, const EmaSeries& y, double sigma,
                      std::optional<int> band_radius = std::nullopt) {
  if (!(sigma > 0.0)) throw input_error("gak: sigma must be positive");
  DtwConfig band_cfg;
  band_cfg.band_radius = band_radius;
  detail::check_dtw_inputs(x, y, band_cfg);
  const std::size_t tx = x.length();
  const std::size_t ty = y.length();
  const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
  const double neg_inf = -std::numeric_limits<double>::infinity();
  // log K with K(0,0)=1 and zero borders.
  std::vector<double> prev(ty + 1, neg_inf);
  std::vector<double> cur(ty + 1, neg_inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= tx; ++i) {
    std::fill(cur.begin(), cur.end(), neg_inf);
    const auto xi = x.values.row(i - 1);
    for (std::size_t j = 1; j <= ty; ++j) {
      if (!detail::in_band(i - 1, j - 1, band_radius)) continue;
      const double paths = detail::logsumexp3(prev[j], cur[j - 1], prev[j - 1]);
      if (!std::isfinite(paths)) continue;
      cur[j] = detail::log_local_kernel(xi, y.values.row(j - 1), inv_two_sigma_sq) +
               paths;
    }
    std::swap(prev, cur);
  }
  return prev[ty];
}

/// Global alignment kernel value in linear space. Prefer log_gak for long
/// series; this convenience form can saturate double range.
inline double gak(const EmaSeries& x, const EmaSeries& y, double sigma,
                  std::optional<int> band_radius = std::nullopt) {
  return std::exp(log_gak(x, y, sigma, band_radius));
}

/// Bandwidth heuristic: for every unordered pair of individuals take the
/// median of all cross-timestep Euclidean distances, then return the mean of
/// those per-pair medians times the multiplier.
inline double estimate_sigma(const EmaDataset& ds, double multiplier = 1.0) {
  ds.validate();
  if (ds.has_missing())
    throw input_error("estimate_sigma: dataset has missing cells; repair first");
  if (!(multiplier > 0.0)) throw input_error("estimate_sigma: multiplier must be positive");
  const std::size_t n = ds.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  std::vector<double> medians(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t p) {
    const auto& a = ds.series[pairs[p].first];
    const auto& b = ds.series[pairs[p].second];
    std::vector<double> dists;
    dists.reserve(a.length() * b.length());
    for (std::size_t s = 0; s < a.length(); ++s)
      for (std::size_t t = 0; t < b.length(); ++t)
        dists.push_back(euclidean_distance(a.values.row(s), b.values.row(t)));
    const std::size_t mid = dists.size() / 2;
    std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
    double med = dists[mid];
    if (dists.size() % 2 == 0) {
      std::nth_element(dists.begin(), dists.begin() + mid - 1, dists.begin() + mid);
      med = 0.5 * (med + dists[mid - 1]);
    }
    medians[p] = med;
  });
  double mean = 0.0;
  for (double m : medians) mean += m;
  mean /= static_cast<double>(medians.size());
  const double sigma = multiplier * mean;
  if (!(sigma > 0.0))
    throw degenerate_error(
        "estimate_sigma: all per-pair medians are zero (identical constant cohort)");
  return sigma;
}

/// Throws unless the symmetric matrix is numerically PSD:
/// min eigenvalue >= -tol * max eigenvalue.
inline void check_psd(const Matrix& m, double tol = kPsdTolerance) {
  const std::size_t n = m.rows();
  Eigen::MatrixXd em(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) em(i, j) = m(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(em,
                                                        Eigen::EigenvaluesOnly);
  const double min_eig = solver.eigenvalues().minCoeff();
  const double max_eig = solver.eigenvalues().maxCoeff();
  if (min_eig < -tol * max_eig)
    throw numerical_error("kernel matrix failed PSD check: min eigenvalue " +
                          std::to_string(min_eig) + " vs max " +
                          std::to_string(max_eig));
}

/// Assembles the GAK Gram matrix. With cfg.normalize the entries are
/// k(x,y)/sqrt(k(x,x) k(y,y)), computed in log-space, giving a unit diagonal.
/// The result is verified numerically PSD.
inline KernelMatrix kernel_matrix(const EmaDataset& ds, const GakConfig& cfg = {}) {
  ds.validate();
  cfg.validate();
  if (ds.has_missing())
    throw input_error("kernel_matrix: dataset has missing cells; repair first");
  const double sigma =
      cfg.sigma ? *cfg.sigma : estimate_sigma(ds, cfg.sigma_multiplier);
  const std::size_t n = ds.size();
  Matrix log_k(n, n, 0.0);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) pairs.emplace_back(i, j);
  parallel_for(pairs.size(), [&](std::size_t p) {
    const auto [i, j] = pairs[p];
    const double v = log_gak(ds.series[i], ds.series[j], sigma);
    log_k(i, j) = v;
    log_k(j, i) = v;
  });

  KernelMatrix km;
  km.ids = ds.ids();
  km.sigma_used = sigma;
  km.normalized = cfg.normalize;
  km.k = Matrix(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    km.k(i, i) = cfg.normalize ? 1.0 : std::exp(log_k(i, i));
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = cfg.normalize
                           ? std::exp(log_k(i, j) - 0.5 * (log_k(i, i) + log_k(j, j)))
                           : std::exp(log_k(i, j));
      km.k(i, j) = v;
      km.k(j, i) = v;
    }
  }
  check_psd(km.k);
  return km;
}

/// Distance induced by the kernel's feature-space inner product:
/// d = sqrt(2 - 2 k~). Requires a normalized kernel; the result is a genuine
/// metric with zero diagonal and entries in [0, sqrt(2)].
inline DistanceMatrix kernel_to_distance(const KernelMatrix& km) {
  if (!km.normalized)
    throw input_error("kernel_to_distance: kernel must be normalized");
  const std::size_t n = km.n();
  DistanceMatrix dm;
  dm.ids = km.ids;
  dm.metric_tag = "kernel-induced";
  dm.d = Matrix(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double rad = 2.0 - 2.0 * km.k(i, j);
      if (rad < 0.0) {
        if (rad < -1e-12)
          throw numerical_error("kernel_to_distance: negative squared distance " +
                                std::to_string(rad));
        rad = 0.0;
      }
      const double v = std::sqrt(rad);
      dm.d(i, j) = v;
      dm.d(j, i) = v;
    }
  }
  return dm;
}

}  // namespace mtscluster
