#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "mtscluster/cluster.hpp"
#include "mtscluster/validity.hpp"
#include "support/generators.hpp"

using namespace mtscluster;
using testgen::univariate;

namespace {

// two groups of near-identical series with a large level gap
EmaDataset two_group_dataset(std::size_t per_group, double jitter, std::uint64_t seed) {
  Rng rng(seed);
  EmaDataset ds;
  ds.schema.names = {"v0"};
  for (std::size_t i = 0; i < 2 * per_group; ++i) {
    const double base = i < per_group ? 0.0 : 10.0;
    std::vector<double> vals;
    for (int t = 0; t < 8; ++t)
      vals.push_back(base + std::sin(0.5 * t) + jitter * testgen::normal(rng));
    auto s = univariate("p" + std::to_string(i / 10) + std::to_string(i % 10), vals);
    ds.series.push_back(std::move(s));
  }
  return ds;
}

std::vector<int> planted_labels(std::size_t per_group) {
  std::vector<int> l(2 * per_group, 0);
  std::fill(l.begin() + per_group, l.end(), 1);
  return l;
}

DistanceMatrix matrix_from(const std::vector<std::vector<double>>& rows) {
  DistanceMatrix dm;
  dm.metric_tag = "dtw";
  dm.d = Matrix(rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.size(); ++j) dm.d(i, j) = rows[i][j];
  return dm;
}

}  // namespace

TEST_CASE("fuzzy membership update") {
  SECTION("equidistant row gets uniform memberships") {
    Matrix dist(1, 3, 2.5);
    const auto u = fuzzy_memberships(dist, 2.0);
    for (int c = 0; c < 3; ++c) CHECK(u(0, c) == Catch::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  SECTION("zero distance pins membership") {
    Matrix dist(1, 3, 1.0);
    dist(0, 1) = 0.0;
    const auto u = fuzzy_memberships(dist, 2.0);
    CHECK(u(0, 0) == 0.0);
    CHECK(u(0, 1) == 1.0);
    CHECK(u(0, 2) == 0.0);
  }
  SECTION("m = 2 reduces to inverse squared distances") {
    Matrix dist(1, 2);
    dist(0, 0) = 1.0;
    dist(0, 1) = 2.0;
    const auto u = fuzzy_memberships(dist, 2.0);
    CHECK(u(0, 0) == Catch::Approx(0.8).epsilon(1e-12));
    CHECK(u(0, 1) == Catch::Approx(0.2).epsilon(1e-12));
  }
  SECTION("rows always sum to one") {
    Rng rng(5);
    Matrix dist(20, 4);
    for (auto& v : dist.data()) v = 0.01 + uniform_real(rng);
    for (double m : {1.3, 2.0, 3.5}) {
      const auto u = fuzzy_memberships(dist, m);
      for (std::size_t i = 0; i < u.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t c = 0; c < u.cols(); ++c) {
          CHECK(u(i, c) >= 0.0);
          CHECK(u(i, c) <= 1.0);
          sum += u(i, c);
        }
        CHECK(sum == Catch::Approx(1.0).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("harden picks the argmax with lowest-index ties") {
  FuzzyPartition fp;
  fp.memberships = Matrix(3, 3, 0.0);
  fp.memberships(0, 0) = 1.0;
  fp.memberships(1, 0) = 0.5;
  fp.memberships(1, 1) = 0.5;
  fp.memberships(2, 0) = 0.2;
  fp.memberships(2, 1) = 0.7;
  fp.memberships(2, 2) = 0.1;
  const auto hp = harden(fp);
  CHECK(hp.labels == std::vector<int>{0, 0, 1});
  CHECK(hp.k_effective == 2);
  CHECK(hp.empty_clusters == std::vector<bool>{false, false, true});
}

TEST_CASE("kmeans_dtw separates trivially separable groups") {
  const auto ds = two_group_dataset(3, 0.0, 1);
  ClusterConfig cfg;
  cfg.k = 2;
  cfg.seed = 9;
  const auto part = kmeans_dtw(ds, {}, cfg);
  CHECK(part.objective == Catch::Approx(0.0).margin(1e-18));
  CHECK(part.converged);
  CHECK(part.k_effective == 2);
  CHECK(label_disagreement(part.labels, planted_labels(3), 2) == 0.0);
}

TEST_CASE("kmeans_dtw on an all-identical cohort reaches objective zero") {
  EmaDataset ds;
  ds.schema.names = {"v0"};
  for (int i = 0; i < 4; ++i)
    ds.series.push_back(univariate("p" + std::to_string(i), {1.0, 2.0, 3.0}));
  ClusterConfig cfg;
  cfg.k = 2;
  const auto part = kmeans_dtw(ds, {}, cfg);
  CHECK(part.objective == 0.0);
}

TEST_CASE("kmeans_dtw recovers a planted two-regime cohort") {
  testgen::CohortSpec spec;
  spec.n = 12;
  spec.v = 3;
  spec.t_min = 20;
  spec.t_max = 28;
  spec.missing_rate = 0.0;
  spec.noise = 0.2;
  spec.seed = 77;
  const auto planted = testgen::planted_two_cluster_cohort(spec);
  const auto ds = znormalize(planted.dataset);
  ClusterConfig cfg;
  cfg.k = 2;
  cfg.seed = 4;
  const auto part = kmeans_dtw(ds, {}, cfg);
  CHECK(label_disagreement(part.labels, planted.labels, 2) == 0.0);
  SECTION("trace is recorded and non-increasing") {
    REQUIRE_FALSE(part.objective_trace.empty());
    for (std::size_t i = 1; i < part.objective_trace.size(); ++i)
      CHECK(part.objective_trace[i] <=
            part.objective_trace[i - 1] + 1e-9 * std::abs(part.objective_trace[i - 1]));
  }
  SECTION("identical seeds reproduce bit-identical partitions") {
    const auto again = kmeans_dtw(ds, {}, cfg);
    CHECK(again.labels == part.labels);
    CHECK(again.objective == part.objective);
    CHECK(again.objective_trace == part.objective_trace);
  }
  SECTION("kmeans++ init also recovers the planted labels") {
    cfg.init = InitMethod::kmeanspp;
    const auto pp = kmeans_dtw(ds, {}, cfg);
    CHECK(label_disagreement(pp.labels, planted.labels, 2) == 0.0);
  }
  SECTION("relabeling clusters leaves the objective unchanged") {
    std::vector<int> permuted(part.labels.size());
    for (std::size_t i = 0; i < part.labels.size(); ++i)
      permuted[i] = 1 - part.labels[i];
    std::vector<Matrix> swapped = {part.barycenters[1], part.barycenters[0]};
    CHECK(kmeans_dtw_objective(ds, permuted, swapped, {}) ==
          Catch::Approx(part.objective).epsilon(1e-12));
  }
}

namespace {

KernelMatrix linear_kernel(const std::vector<std::vector<double>>& points) {
  KernelMatrix km;
  km.normalized = false;
  km.sigma_used = 0.0;
  km.k = Matrix(points.size(), points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = 0; j < points.size(); ++j)
      km.k(i, j) =
          std::inner_product(points[i].begin(), points[i].end(), points[j].begin(), 0.0);
  return km;
}

/// Plain Lloyd k-means in the explicit space, step-for-step mirror of
/// kernel_kmeans (same init, same objective logging, same reseed rule).
std::vector<int> lloyd_oracle(const std::vector<std::vector<double>>& pts,
                              const ClusterConfig& cfg) {
  const std::size_t n = pts.size();
  const std::size_t dim = pts[0].size();
  const int k = cfg.k;
  Rng rng(cfg.seed);
  auto labels = mtscluster::detail::random_partition_labels(n, k, rng);
  const auto d2 = [&](std::size_t i, const std::vector<double>& mean) {
    double s = 0.0;
    for (std::size_t c = 0; c < dim; ++c)
      s += (pts[i][c] - mean[c]) * (pts[i][c] - mean[c]);
    return s;
  };
  double prev = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    std::vector<std::vector<double>> means(k, std::vector<double>(dim, 0.0));
    std::vector<double> count(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      ++count[labels[i]];
      for (std::size_t c = 0; c < dim; ++c) means[labels[i]][c] += pts[i][c];
    }
    for (int g = 0; g < k; ++g)
      for (std::size_t c = 0; c < dim; ++c) means[g][c] /= count[g];
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) obj += d2(i, means[labels[i]]);
    if (mtscluster::detail::objective_stalled(prev, obj, cfg.tol)) break;
    prev = obj;
    std::vector<int> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      for (int g = 1; g < k; ++g)
        if (d2(i, means[g]) < d2(i, means[best])) best = g;
      next[i] = best;
    }
    for (int g = 0; g < k; ++g) {
      if (std::count(next.begin(), next.end(), g) > 0) continue;
      std::size_t worst = 0;
      double worst_d = -1.0;
      for (std::size_t i = 0; i < n; ++i)
        if (d2(i, means[next[i]]) > worst_d) {
          worst_d = d2(i, means[next[i]]);
          worst = i;
        }
      next[worst] = g;
    }
    labels = next;
  }
  return labels;
}

}  // namespace

TEST_CASE("kernel_kmeans matches explicit-space k-means on a linear kernel") {
  Rng rng(83);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::vector<double>> pts;
    const std::size_t n = 6 + uniform_index(rng, 5);
    for (std::size_t i = 0; i < n; ++i)
      pts.push_back({4.0 * uniform_real(rng), 4.0 * uniform_real(rng)});
    ClusterConfig cfg;
    cfg.k = 2 + static_cast<int>(uniform_index(rng, 2));
    cfg.seed = rng();
    cfg.tol = 1e-12;
    const auto part = kernel_kmeans(linear_kernel(pts), cfg);
    CHECK(part.labels == lloyd_oracle(pts, cfg));
  }
}

TEST_CASE("kernel_kmeans recovers perfect blocks with objective zero") {
  // two blocks of identical feature vectors
  KernelMatrix km;
  km.normalized = true;
  km.k = Matrix(6, 6, 0.0);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      km.k(i, j) = (i < 3) == (j < 3) ? 1.0 : 0.1;
  ClusterConfig cfg;
  cfg.k = 2;
  cfg.seed = 3;
  const auto part = kernel_kmeans(km, cfg);
  CHECK(part.objective == Catch::Approx(0.0).margin(1e-12));
  std::vector<int> expect = {part.labels[0], part.labels[0], part.labels[0],
                             part.labels[3], part.labels[3], part.labels[3]};
  CHECK(part.labels == expect);
  CHECK(part.labels[0] != part.labels[3]);
}

TEST_CASE("kernel_kmeans objective trace never increases on random PSD kernels") {
  Rng rng(89);
  for (int rep = 0; rep < 15; ++rep) {
    const std::size_t n = 8 + uniform_index(rng, 6);
    // random Gram matrix A A^T is PSD
    Matrix a(n, 4);
    for (auto& v : a.data()) v = testgen::normal(rng);
    KernelMatrix km;
    km.k = Matrix(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < 4; ++c) s += a(i, c) * a(j, c);
        km.k(i, j) = s;
      }
    ClusterConfig cfg;
    cfg.k = 3;
    cfg.seed = rng();
    const auto part = kernel_kmeans(km, cfg);  // throws if the trace rises
    REQUIRE_FALSE(part.objective_trace.empty());
    for (std::size_t t = 1; t < part.objective_trace.size(); ++t)
      CHECK(part.objective_trace[t] <= part.objective_trace[t - 1] + 1e-9);
  }
}

TEST_CASE("hierarchical clustering") {
  SECTION("two tight pairs far apart") {
    const auto dm = matrix_from({{0, 1, 9, 10}, {1, 0, 10, 9}, {9, 10, 0, 1}, {10, 9, 1, 0}});
    for (auto linkage : {Linkage::average, Linkage::complete, Linkage::single}) {
      ClusterConfig cfg;
      cfg.k = 2;
      cfg.linkage = linkage;
      const auto part = hierarchical(dm, cfg);
      CHECK(part.labels == std::vector<int>{0, 0, 1, 1});
      CHECK(part.converged);
    }
  }
  SECTION("k equal to N keeps singletons") {
    const auto dm = matrix_from({{0, 1, 2}, {1, 0, 3}, {2, 3, 0}});
    ClusterConfig cfg;
    cfg.k = 3;
    const auto part = hierarchical(dm, cfg);
    CHECK(part.labels == std::vector<int>{0, 1, 2});
    CHECK(part.n_iter == 0);
  }
  SECTION("k = 1 merges everything") {
    const auto dm = matrix_from({{0, 1, 2}, {1, 0, 3}, {2, 3, 0}});
    ClusterConfig cfg;
    cfg.k = 1;
    const auto part = hierarchical(dm, cfg);
    CHECK(part.labels == std::vector<int>{0, 0, 0});
    CHECK(part.k_effective == 1);
  }
  SECTION("equidistant triple merges the lowest-index pair") {
    const auto dm = matrix_from({{0, 5, 5}, {5, 0, 5}, {5, 5, 0}});
    ClusterConfig cfg;
    cfg.k = 2;
    const auto part = hierarchical(dm, cfg);
    CHECK(part.labels == std::vector<int>{0, 0, 1});
  }
  SECTION("single and complete linkage split a chain differently") {
    // chain 0-1-2-3 with slowly growing gaps: single linkage follows the
    // chain, complete linkage pairs the ends
    const auto dm = matrix_from({{0, 1.0, 2.1, 3.3},
                                 {1.0, 0, 1.1, 2.3},
                                 {2.1, 1.1, 0, 1.2},
                                 {3.3, 2.3, 1.2, 0}});
    ClusterConfig cfg;
    cfg.k = 2;
    cfg.linkage = Linkage::single;
    const auto single = hierarchical(dm, cfg);
    cfg.linkage = Linkage::complete;
    const auto complete = hierarchical(dm, cfg);
    CHECK(single.labels == std::vector<int>{0, 0, 0, 1});
    CHECK(complete.labels == std::vector<int>{0, 0, 1, 1});
  }
}

TEST_CASE("fuzzy_cmeans_dtw recovers the planted cohort after hardening") {
  testgen::CohortSpec spec;
  spec.n = 12;
  spec.v = 3;
  spec.t_min = 20;
  spec.t_max = 28;
  spec.missing_rate = 0.0;
  spec.noise = 0.2;
  spec.seed = 99;
  const auto planted = testgen::planted_two_cluster_cohort(spec);
  const auto ds = znormalize(planted.dataset);
  ClusterConfig cfg;
  cfg.k = 2;
  cfg.seed = 21;
  const auto fp = fuzzy_cmeans_dtw(ds, {}, cfg);
  CHECK(fp.memberships.rows() == ds.size());
  for (std::size_t i = 0; i < fp.memberships.rows(); ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < fp.memberships.cols(); ++c) {
      CHECK(fp.memberships(i, c) >= 0.0);
      CHECK(fp.memberships(i, c) <= 1.0);
      sum += fp.memberships(i, c);
    }
    CHECK(sum == Catch::Approx(1.0).epsilon(1e-9));
  }
  CHECK(label_disagreement(harden(fp).labels, planted.labels, 2) == 0.0);
  SECTION("deterministic under the same seed") {
    const auto again = fuzzy_cmeans_dtw(ds, {}, cfg);
    CHECK(again.memberships == fp.memberships);
    CHECK(again.objective == fp.objective);
  }
}

TEST_CASE("fuzzy_kmedoids on two tight groups") {
  const auto dm = matrix_from({{0, 0.1, 9, 10, 9.5},
                               {0.1, 0, 9.5, 10.5, 9.2},
                               {9, 9.5, 0, 0.1, 0.08},
                               {10, 10.5, 0.1, 0, 0.12},
                               {9.5, 9.2, 0.08, 0.12, 0}});
  ClusterConfig cfg;
  cfg.k = 2;
  cfg.seed = 13;
  auto fp = fuzzy_kmedoids(dm, cfg);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {  // best of restarts
    ClusterConfig c2 = cfg;
    c2.seed = seed;
    auto candidate = fuzzy_kmedoids(dm, c2);
    if (candidate.objective < fp.objective) fp = std::move(candidate);
  }
  REQUIRE(fp.medoids.size() == 2);
  const bool split = (fp.medoids[0] < 2) != (fp.medoids[1] < 2);
  CHECK(split);
  SECTION("matches the brute-force medoid-pair oracle") {
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 5; ++a)
      for (int b = 0; b < 5; ++b) {
        if (a == b) continue;
        Matrix dist(5, 2);
        for (int i = 0; i < 5; ++i) {
          dist(i, 0) = dm.d(i, a);
          dist(i, 1) = dm.d(i, b);
        }
        const auto u = fuzzy_memberships(dist, cfg.fuzzifier);
        best = std::min(best, fkm_objective(dm, u, {a, b}, cfg.fuzzifier));
      }
    CHECK(fp.objective == Catch::Approx(best).epsilon(1e-9));
  }
  SECTION("a medoid individual holds full membership of its cluster") {
    for (int c = 0; c < 2; ++c) CHECK(fp.memberships(fp.medoids[c], c) == 1.0);
  }
  SECTION("memberships near one-hot for tight groups") {
    const auto hp = harden(fp);
    const auto want = std::vector<int>{0, 0, 1, 1, 1};
    CHECK(label_disagreement(hp.labels, want, 2) == 0.0);
    for (int i = 0; i < 5; ++i)
      CHECK(fp.memberships(i, hp.labels[i]) > 0.9);
  }
}

TEST_CASE("fuzzy_kmedoids surfaces empty clusters when k exceeds structure") {
  // degenerate 2-cluster structure: zero distance inside each group; the
  // zero-distance membership rule funnels each group onto one cluster
  std::vector<std::vector<double>> rows(8, std::vector<double>(8, 0.0));
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      if (i == j) continue;
      const bool same = (i < 4) == (j < 4);
      rows[i][j] = same ? 0.0 : 10.0;
    }
  const auto dm = matrix_from(rows);
  ClusterConfig cfg;
  cfg.k = 4;
  cfg.seed = 17;
  const auto fp = fuzzy_kmedoids(dm, cfg);
  CHECK(fp.k_effective == 2);
  CHECK(std::count(fp.empty_clusters.begin(), fp.empty_clusters.end(), true) == 2);
}

TEST_CASE("cluster config validation") {
  ClusterConfig cfg;
  cfg.k = 1;
  CHECK_THROWS_AS(cfg.validate(5), input_error);
  cfg.k = 6;
  CHECK_THROWS_AS(cfg.validate(5), input_error);
  cfg.k = 2;
  cfg.fuzzifier = 1.0;
  CHECK_THROWS_AS(cfg.validate(5), input_error);
  cfg.fuzzifier = 2.0;
  cfg.tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(5), input_error);
  cfg.tol = 1e-6;
  cfg.max_iter = 0;
  CHECK_THROWS_AS(cfg.validate(5), input_error);
}

TEST_CASE("seeded engines differ across seeds but not within") {
  const auto ds = two_group_dataset(4, 0.3, 31);
  const auto dm = distance_matrix(ds);
  ClusterConfig a;
  a.k = 2;
  a.seed = 1;
  ClusterConfig b = a;
  b.seed = 2;
  const auto fa = fuzzy_kmedoids(dm, a);
  const auto fa2 = fuzzy_kmedoids(dm, a);
  CHECK(fa.medoids == fa2.medoids);
  CHECK(fa.memberships == fa2.memberships);
  CHECK(fa.objective_trace == fa2.objective_trace);
}
