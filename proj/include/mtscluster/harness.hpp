#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtscluster/cluster.hpp"
#include "mtscluster/dtw.hpp"
#include "mtscluster/ema.hpp"
#include "mtscluster/errors.hpp"
#include "mtscluster/gak.hpp"
#include "mtscluster/io.hpp"
#include "mtscluster/validity.hpp"
#include "mtscluster/version.hpp"

namespace mtscluster {

enum class Method { km_dtw, km_gak, hc_dtw, hc_gak, fcm_dtw, fkm_dtw, fkm_gak };

inline const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = {
      Method::km_dtw, Method::km_gak,  Method::hc_dtw, Method::hc_gak,
      Method::fcm_dtw, Method::fkm_dtw, Method::fkm_gak};
  return methods;
}

inline const char* to_string(Method m) {
  switch (m) {
    case Method::km_dtw: return "km_dtw";
    case Method::km_gak: return "km_gak";
    case Method::hc_dtw: return "hc_dtw";
    case Method::hc_gak: return "hc_gak";
    case Method::fcm_dtw: return "fcm_dtw";
    case Method::fkm_dtw: return "fkm_dtw";
    default: return "fkm_gak";
  }
}

inline Method method_from_string(const std::string& s) {
  for (Method m : all_methods())
    if (s == to_string(m)) return m;
  throw input_error("unknown method '" + s + "'");
}

/// Hierarchical clustering is deterministic, so it is excluded from
/// stability analysis.
inline bool is_seed_sensitive(Method m) {
  return m != Method::hc_dtw && m != Method::hc_gak;
}

inline bool uses_gak(Method m) {
  return m == Method::km_gak || m == Method::hc_gak || m == Method::fkm_gak;
}

inline bool uses_dtw_matrix(Method m) { return !uses_gak(m); }

inline bool is_fuzzy(Method m) {
  return m == Method::fcm_dtw || m == Method::fkm_dtw || m == Method::fkm_gak;
}

/// Full protocol configuration. Serialized form is a flat JSON object with
/// exactly these keys; every field has a CLI flag override.
struct RunConfig {
  std::string input_path;
  MissingPolicy missing_policy = MissingPolicy::linear_interpolate;
  bool normalize = true;
  std::vector<Method> methods = all_methods();
  int k_min = 2;
  int k_max = 6;
  int n_stability_runs = 50;
  std::uint64_t master_seed = 0;
  double sigma_multiplier = 1.0;
  std::optional<int> dtw_band;
  std::string output_dir = "mtscluster-out";

  void validate() const {
    if (input_path.empty()) throw input_error("config: input_path is required");
    if (methods.empty()) throw input_error("config: methods must be non-empty");
    if (k_min < 2 || k_max < k_min)
      throw input_error("config: k_range must satisfy 2 <= k_min <= k_max");
    if (n_stability_runs < 2)
      throw input_error("config: n_stability_runs must be >= 2");
    if (!(sigma_multiplier > 0.0))
      throw input_error("config: sigma_multiplier must be positive");
    if (dtw_band && *dtw_band < 0)
      throw input_error("config: dtw_band must be non-negative");
  }

  Json to_json() const {
    Json j;
    j["input_path"] = input_path;
    j["missing_policy"] = to_string(missing_policy);
    j["normalize"] = normalize;
    Json ms = Json::array();
    for (Method m : methods) ms.push_back(to_string(m));
    j["methods"] = std::move(ms);
    j["k_range"] = Json::array({k_min, k_max});
    j["n_stability_runs"] = n_stability_runs;
    j["master_seed"] = master_seed;
    j["sigma_multiplier"] = sigma_multiplier;
    j["dtw_band"] = dtw_band ? Json(*dtw_band) : Json(nullptr);
    j["output_dir"] = output_dir;
    return j;
  }

  static RunConfig from_json(const Json& j) {
    RunConfig cfg;
    if (j.contains("input_path")) cfg.input_path = j.at("input_path").get<std::string>();
    if (j.contains("missing_policy"))
      cfg.missing_policy = missing_policy_from_string(j.at("missing_policy"));
    if (j.contains("normalize")) cfg.normalize = j.at("normalize").get<bool>();
    if (j.contains("methods")) {
      cfg.methods.clear();
      for (const auto& m : j.at("methods"))
        cfg.methods.push_back(method_from_string(m.get<std::string>()));
    }
    if (j.contains("k_range")) {
      const auto& kr = j.at("k_range");
      if (!kr.is_array() || kr.size() != 2)
        throw input_error("config: k_range must be [k_min, k_max]");
      cfg.k_min = kr[0].get<int>();
      cfg.k_max = kr[1].get<int>();
    }
    if (j.contains("n_stability_runs"))
      cfg.n_stability_runs = j.at("n_stability_runs").get<int>();
    if (j.contains("master_seed"))
      cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("sigma_multiplier"))
      cfg.sigma_multiplier = j.at("sigma_multiplier").get<double>();
    if (j.contains("dtw_band") && !j.at("dtw_band").is_null())
      cfg.dtw_band = j.at("dtw_band").get<int>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    return cfg;
  }
};

/// Point estimates in sweeps and single cluster runs take the best objective
/// of this many restarts; stability runs are deliberately single runs per
/// seed so run-to-run variation stays visible.
inline constexpr int kRestarts = 10;

namespace detail {

inline std::uint64_t fnv1a(const std::string& data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed for a (method, k) sweep cell; independent of which method subset is
/// configured, so a singleton sweep reproduces the full sweep's cell.
inline std::uint64_t cell_seed(std::uint64_t master, Method m, int k) {
  return derive_seed(master, 1000ULL * (static_cast<std::uint64_t>(m) + 1) + k);
}

inline std::uint64_t stability_master_seed(std::uint64_t master, Method m) {
  return derive_seed(master, 500000ULL + static_cast<std::uint64_t>(m));
}

}  // namespace detail

/// Hash pinning a run's provenance: library version, full config, input bytes.
inline std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = detail::fnv1a(kVersion);
  h = detail::fnv1a(cfg.to_json().dump(), h);
  h = detail::fnv1a(read_text(cfg.input_path), h);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Dataset and matrices ready for clustering, shared by all subcommands.
struct PreparedInputs {
  EmaDataset dataset;
  std::optional<DistanceMatrix> dtw_dm;
  std::optional<KernelMatrix> gak_km;
  std::optional<DistanceMatrix> gak_dm;  // kernel-induced
  double sigma_used = 0.0;

  const DistanceMatrix& matrix_for(Method m) const {
    if (uses_gak(m)) {
      if (!gak_dm) throw input_error("kernel-induced distance matrix not prepared");
      return *gak_dm;
    }
    if (!dtw_dm) throw input_error("dtw distance matrix not prepared");
    return *dtw_dm;
  }
};

inline PreparedInputs prepare_inputs(const RunConfig& cfg) {
  cfg.validate();
  PreparedInputs prep;
  EmaDataset ds = load_csv(cfg.input_path);
  ds = repair_missing(ds, cfg.missing_policy);
  if (cfg.normalize) ds = znormalize(ds);
  prep.dataset = std::move(ds);

  DtwConfig dcfg;
  dcfg.band_radius = cfg.dtw_band;
  const bool need_dtw =
      std::any_of(cfg.methods.begin(), cfg.methods.end(),
                  [](Method m) { return uses_dtw_matrix(m); });
  const bool need_gak = std::any_of(cfg.methods.begin(), cfg.methods.end(),
                                    [](Method m) { return uses_gak(m); });
  if (need_dtw) prep.dtw_dm = distance_matrix(prep.dataset, dcfg);
  if (need_gak) {
    GakConfig gcfg;
    gcfg.sigma_multiplier = cfg.sigma_multiplier;
    prep.gak_km = kernel_matrix(prep.dataset, gcfg);
    prep.gak_dm = kernel_to_distance(*prep.gak_km);
    prep.sigma_used = prep.gak_km->sigma_used;
  }
  return prep;
}

/// One clustering run: the hardened partition plus the fuzzy partition when
/// the method is fuzzy.
struct MethodRun {
  HardPartition hard;
  std::optional<FuzzyPartition> fuzzy;

  double objective() const { return fuzzy ? fuzzy->objective : hard.objective; }
};

inline MethodRun run_single(Method method, const PreparedInputs& prep,
                            const RunConfig& cfg, int k, std::uint64_t seed) {
  ClusterConfig ccfg;
  ccfg.k = k;
  ccfg.seed = seed;
  DtwConfig dcfg;
  dcfg.band_radius = cfg.dtw_band;
  MethodRun run;
  switch (method) {
    case Method::km_dtw:
      run.hard = kmeans_dtw(prep.dataset, dcfg, ccfg,
                            prep.dtw_dm ? &*prep.dtw_dm : nullptr);
      break;
    case Method::km_gak:
      if (!prep.gak_km) throw input_error("kernel matrix not prepared");
      run.hard = kernel_kmeans(*prep.gak_km, ccfg);
      break;
    case Method::hc_dtw:
    case Method::hc_gak:
      run.hard = hierarchical(prep.matrix_for(method), ccfg);
      break;
    case Method::fcm_dtw:
      run.fuzzy = fuzzy_cmeans_dtw(prep.dataset, dcfg, ccfg,
                                   prep.dtw_dm ? &*prep.dtw_dm : nullptr);
      break;
    case Method::fkm_dtw:
    case Method::fkm_gak:
      run.fuzzy = fuzzy_kmedoids(prep.matrix_for(method), ccfg);
      break;
  }
  if (run.fuzzy) run.hard = harden(*run.fuzzy);
  return run;
}

/// Best objective over kRestarts seeded restarts (single run for methods
/// without seed sensitivity). Also returns every restart's hardened labels
/// so the sweep can report restart-level instability for free.
struct RestartedRun {
  MethodRun best;
  std::vector<HardPartition> restarts;
};

inline RestartedRun best_of_restarts(Method method, const PreparedInputs& prep,
                                     const RunConfig& cfg, int k) {
  RestartedRun out;
  const std::uint64_t base = detail::cell_seed(cfg.master_seed, method, k);
  if (!is_seed_sensitive(method)) {
    out.best = run_single(method, prep, cfg, k, 0);
    out.restarts.push_back(out.best.hard);
    return out;
  }
  std::vector<MethodRun> runs(kRestarts);
  parallel_for(kRestarts, [&](std::size_t r) {
    runs[r] = run_single(method, prep, cfg, k, derive_seed(base, r));
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r].objective() < runs[best].objective()) best = r;
  for (auto& r : runs) out.restarts.push_back(r.hard);
  out.best = std::move(runs[best]);
  return out;
}

/// Quality indices for one run: silhouette on the hardened partition over the
/// method's distance matrix; PC/PE/XB for fuzzy methods. XB uses medoid
/// columns for k-medoids and DTW barycenter distances for c-means; a
/// degenerate separation leaves xb unset.
inline QualityReport evaluate_run(Method method, const PreparedInputs& prep,
                                  const RunConfig& cfg, const MethodRun& run) {
  const DistanceMatrix& dm = prep.matrix_for(method);
  QualityReport q = silhouette(dm, run.hard);
  if (!run.fuzzy) return q;
  q.pc = partition_coefficient(*run.fuzzy);
  q.pe = partition_entropy(*run.fuzzy);
  try {
    if (!run.fuzzy->medoids.empty()) {
      q.xb = xie_beni_medoids(*run.fuzzy, dm);
    } else {
      // c-means: distances from each series to each barycenter
      DtwConfig dcfg;
      dcfg.band_radius = cfg.dtw_band;
      const auto& barys = run.fuzzy->barycenters;
      const std::size_t n = prep.dataset.size();
      const std::size_t k = barys.size();
      Matrix p2r(n, k);
      Matrix r2r(k, k, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < k; ++c)
          p2r(i, c) = dtw(prep.dataset.series[i],
                          mtscluster::detail::series_from_matrix(barys[c]), dcfg);
      for (std::size_t c = 0; c < k; ++c)
        for (std::size_t c2 = c + 1; c2 < k; ++c2) {
          r2r(c, c2) = dtw(mtscluster::detail::series_from_matrix(barys[c]),
                           mtscluster::detail::series_from_matrix(barys[c2]), dcfg);
          r2r(c2, c) = r2r(c, c2);
        }
      q.xb = xie_beni(*run.fuzzy, p2r, r2r);
    }
  } catch (const degenerate_error&) {
    q.xb.reset();  // coincident representatives; reported as missing
  }
  return q;
}

struct SweepCell {
  Method method;
  int k = 0;
  bool failed = false;
  std::string error;
  QualityReport quality;
  double objective = 0.0;
  double restart_instability = 0.0;
  int k_effective = 0;
  bool any_empty = false;
};

struct SweepReport {
  std::vector<SweepCell> cells;
  std::map<std::string, int> chosen_k;  // keyed by method name
};

/// Runs every configured method at every k in the range, each cell
/// best-of-restarts, and picks per-method chosen_k by maximal silhouette
/// (ties to the smaller k). Failing cells are recorded, not fatal.
inline SweepReport run_sweep(const RunConfig& cfg, const PreparedInputs& prep) {
  SweepReport report;
  for (Method method : cfg.methods) {
    double best_sil = -2.0;
    int best_k = 0;
    for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
      SweepCell cell;
      cell.method = method;
      cell.k = k;
      try {
        if (static_cast<std::size_t>(k) > prep.dataset.size())
          throw input_error("k exceeds cohort size");
        auto rr = best_of_restarts(method, prep, cfg, k);
        cell.quality = evaluate_run(method, prep, cfg, rr.best);
        cell.objective = rr.best.objective();
        cell.k_effective = rr.best.hard.k_effective;
        cell.any_empty = rr.best.hard.k_effective < k;
        cell.restart_instability =
            rr.restarts.size() > 1 ? instability(rr.restarts).instability : 0.0;
        if (cell.quality.silhouette_mean > best_sil) {
          best_sil = cell.quality.silhouette_mean;
          best_k = k;
        }
      } catch (const error& e) {
        cell.failed = true;
        cell.error = e.what();
      }
      report.cells.push_back(std::move(cell));
    }
    if (best_k > 0) report.chosen_k[to_string(method)] = best_k;
  }
  return report;
}

inline Json to_json(const SweepReport& r) {
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    Json j;
    j["method"] = to_string(c.method);
    j["k"] = c.k;
    j["failed"] = c.failed;
    if (c.failed) {
      j["error"] = c.error;
    } else {
      j["silhouette"] = c.quality.silhouette_mean;
      j["pc"] = c.quality.pc ? Json(*c.quality.pc) : Json(nullptr);
      j["pe"] = c.quality.pe ? Json(*c.quality.pe) : Json(nullptr);
      j["xb"] = c.quality.xb ? Json(*c.quality.xb) : Json(nullptr);
      j["objective"] = c.objective;
      j["restart_instability"] = c.restart_instability;
      j["k_effective"] = c.k_effective;
      j["any_empty"] = c.any_empty;
    }
    cells.push_back(std::move(j));
  }
  Json j;
  j["cells"] = std::move(cells);
  j["chosen_k"] = r.chosen_k;
  return j;
}

/// Plot-ready table mirroring the quality-vs-k figure data.
inline std::string sweep_csv(const SweepReport& r) {
  std::string out = "method,k,silhouette,pc,pe,xb\n";
  for (const auto& c : r.cells) {
    if (c.failed) continue;
    out += to_string(c.method);
    out += ',' + std::to_string(c.k);
    out += ',' + detail::format_number(c.quality.silhouette_mean);
    out += ',' + (c.quality.pc ? detail::format_number(*c.quality.pc) : std::string());
    out += ',' + (c.quality.pe ? detail::format_number(*c.quality.pe) : std::string());
    out += ',' + (c.quality.xb ? detail::format_number(*c.quality.xb) : std::string());
    out += '\n';
  }
  return out;
}

/// Stability of one seed-sensitive method at a fixed k: n_stability_runs
/// single runs (no restart polishing) with seeds derived per replica.
inline StabilityReport run_stability(const RunConfig& cfg, const PreparedInputs& prep,
                                     Method method, int k) {
  if (!is_seed_sensitive(method))
    throw input_error(std::string("stability: ") + to_string(method) +
                      " is deterministic; excluded from stability analysis");
  const DistanceMatrix& dm = prep.matrix_for(method);
  const auto runner = [&](std::uint64_t seed) {
    return run_single(method, prep, cfg, k, seed).hard;
  };
  return stability_suite(runner, dm, cfg.n_stability_runs,
                         detail::stability_master_seed(cfg.master_seed, method));
}

// ---------------------------------------------------------------------------
// Subcommand layer: file outputs under cfg.output_dir. JSON files embed a
// meta block (version, config hash, master seed, sigma); CSV files stay in
// their documented plot-ready shapes.

namespace detail {

inline Json meta_block(const RunConfig& cfg, const std::string& hash, double sigma) {
  Json meta;
  meta["version"] = kVersion;
  meta["config_hash"] = hash;
  meta["master_seed"] = cfg.master_seed;
  meta["sigma_used"] = sigma == 0.0 ? Json(nullptr) : Json(sigma);
  meta["config"] = cfg.to_json();
  return meta;
}

inline std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
  return std::filesystem::path(cfg.output_dir) / name;
}

/// True when the JSON file exists and carries the expected config hash.
inline bool cache_fresh(const std::filesystem::path& path, const std::string& hash) {
  if (!std::filesystem::exists(path)) return false;
  try {
    const Json j = Json::parse(read_text(path));
    return j.at("meta").at("config_hash").get<std::string>() == hash;
  } catch (...) {
    return false;
  }
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

}  // namespace detail

/// Computes and caches the configured matrices. Cached files whose embedded
/// config hash matches are left untouched, so a rerun with an identical
/// config is byte-identical.
inline PreparedInputs cmd_distances(const RunConfig& cfg) {
  cfg.validate();
  const std::string hash = config_hash(cfg);
  PreparedInputs prep = prepare_inputs(cfg);
  const auto meta = detail::meta_block(cfg, hash, prep.sigma_used);
  if (prep.dtw_dm && !detail::cache_fresh(detail::out_path(cfg, "dtw_distance.json"), hash)) {
    Json j;
    j["meta"] = meta;
    j["matrix"] = to_json(*prep.dtw_dm);
    detail::write_json(detail::out_path(cfg, "dtw_distance.json"), j);
    std::ostringstream csv;
    write_matrix_csv(csv, prep.dtw_dm->ids, prep.dtw_dm->d);
    write_text_atomic(detail::out_path(cfg, "dtw_distance.csv"), csv.str());
  }
  if (prep.gak_km && !detail::cache_fresh(detail::out_path(cfg, "gak_kernel.json"), hash)) {
    Json j;
    j["meta"] = meta;
    j["matrix"] = to_json(*prep.gak_km);
    detail::write_json(detail::out_path(cfg, "gak_kernel.json"), j);
    std::ostringstream csv;
    write_matrix_csv(csv, prep.gak_km->ids, prep.gak_km->k);
    write_text_atomic(detail::out_path(cfg, "gak_kernel.csv"), csv.str());

    Json jd;
    jd["meta"] = meta;
    jd["matrix"] = to_json(*prep.gak_dm);
    detail::write_json(detail::out_path(cfg, "gak_distance.json"), jd);
    std::ostringstream csvd;
    write_matrix_csv(csvd, prep.gak_dm->ids, prep.gak_dm->d);
    write_text_atomic(detail::out_path(cfg, "gak_distance.csv"), csvd.str());
  }
  return prep;
}

/// One method at one k, best-of-restarts; writes the full partition and its
/// quality report.
inline std::filesystem::path cmd_cluster(const RunConfig& cfg, Method method, int k,
                                         const PreparedInputs* prepared = nullptr) {
  cfg.validate();
  const std::string hash = config_hash(cfg);
  PreparedInputs local;
  if (!prepared) {
    local = prepare_inputs(cfg);
    prepared = &local;
  }
  const auto rr = best_of_restarts(method, *prepared, cfg, k);
  const auto quality = evaluate_run(method, *prepared, cfg, rr.best);
  Json j;
  j["meta"] = detail::meta_block(cfg, hash, prepared->sigma_used);
  j["method"] = to_string(method);
  j["k"] = k;
  j["partition"] = to_json(rr.best.hard);
  if (rr.best.fuzzy) j["fuzzy_partition"] = to_json(*rr.best.fuzzy);
  j["quality"] = to_json(quality);
  const auto path = detail::out_path(
      cfg, std::string("cluster_") + to_string(method) + "_k" + std::to_string(k) + ".json");
  detail::write_json(path, j);
  return path;
}

/// Full method-by-k sweep; writes sweep.json and the plot-ready sweep.csv.
inline SweepReport cmd_sweep(const RunConfig& cfg,
                             const PreparedInputs* prepared = nullptr) {
  cfg.validate();
  const std::string hash = config_hash(cfg);
  PreparedInputs local;
  if (!prepared) {
    local = prepare_inputs(cfg);
    prepared = &local;
  }
  const SweepReport report = run_sweep(cfg, *prepared);
  Json j;
  j["meta"] = detail::meta_block(cfg, hash, prepared->sigma_used);
  j["sweep"] = to_json(report);
  detail::write_json(detail::out_path(cfg, "sweep.json"), j);
  write_text_atomic(detail::out_path(cfg, "sweep.csv"), sweep_csv(report));
  return report;
}

/// Stability protocol for every seed-sensitive configured method at the
/// specified k (or each method's sweep-chosen k when absent). Emits one
/// stability_<method>.json plus per-method silhouette distribution CSVs and
/// an aggregate instability bar table.
inline std::map<std::string, StabilityReport> cmd_stability(
    const RunConfig& cfg, std::optional<int> k_override = std::nullopt,
    const PreparedInputs* prepared = nullptr) {
  cfg.validate();
  const std::string hash = config_hash(cfg);
  PreparedInputs local;
  if (!prepared) {
    local = prepare_inputs(cfg);
    prepared = &local;
  }
  std::map<std::string, int> chosen;
  if (!k_override) {
    // reuse a fresh cached sweep when available, otherwise run one
    const auto sweep_path = detail::out_path(cfg, "sweep.json");
    if (detail::cache_fresh(sweep_path, hash)) {
      const Json j = Json::parse(read_text(sweep_path));
      chosen = j.at("sweep").at("chosen_k").get<std::map<std::string, int>>();
    } else {
      chosen = cmd_sweep(cfg, prepared).chosen_k;
    }
  }

  std::map<std::string, StabilityReport> reports;
  std::string bars = "method,instability\n";
  for (Method method : cfg.methods) {
    if (!is_seed_sensitive(method)) continue;
    int k = 0;
    if (k_override) {
      k = *k_override;
    } else {
      const auto it = chosen.find(to_string(method));
      if (it == chosen.end())
        throw degenerate_error(std::string("stability: no chosen k for ") +
                               to_string(method) + " (all sweep cells failed)");
      k = it->second;
    }
    StabilityReport report = run_stability(cfg, *prepared, method, k);
    Json j;
    j["meta"] = detail::meta_block(cfg, hash, prepared->sigma_used);
    j["method"] = to_string(method);
    j["k"] = k;
    j["stability"] = to_json(report);
    detail::write_json(
        detail::out_path(cfg, std::string("stability_") + to_string(method) + ".json"), j);

    std::string csv = "run_index,seed,silhouette\n";
    for (int r = 0; r < report.n_runs; ++r) {
      csv += std::to_string(r);
      csv += ',' + std::to_string(report.seeds[r]);
      csv += ',' + detail::format_number(report.silhouette_distribution[r]);
      csv += '\n';
    }
    write_text_atomic(detail::out_path(cfg, std::string("stability_") +
                                                to_string(method) + "_silhouettes.csv"),
                      csv);
    bars += std::string(to_string(method)) + ',' +
            detail::format_number(report.instability) + '\n';
    reports.emplace(to_string(method), std::move(report));
  }
  write_text_atomic(detail::out_path(cfg, "stability_instability.csv"), bars);
  return reports;
}

}  // namespace mtscluster
