// mtscluster: DTW/GAK clustering of EMA cohorts with quality and stability
// evaluation. Subcommands mirror the pipeline stages: distances, cluster,
// sweep, stability.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mtscluster/harness.hpp"
#include "mtscluster/version.hpp"

namespace {

using namespace mtscluster;

struct CommonArgs {
  std::string config_file;
  std::optional<std::string> input;
  std::optional<std::string> output_dir;
  std::optional<std::string> missing_policy;
  std::optional<std::vector<std::string>> methods;
  std::optional<std::vector<int>> k_range;
  std::optional<int> n_stability_runs;
  std::optional<int> dtw_band;
  std::optional<std::uint64_t> master_seed;
  std::optional<double> sigma_multiplier;
  int normalize_on = 0;
  int normalize_off = 0;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_file, "JSON config file (RunConfig fields)");
  sub->add_option("--input", args.input,
                  "long-format CSV: individual_id,timestamp,<var1>,...");
  sub->add_option("--output-dir", args.output_dir,
                  "output directory [default: mtscluster-out]");
  sub->add_option("--missing-policy", args.missing_policy,
                  "linear-interpolate | drop-row [default: linear-interpolate]");
  sub->add_flag("--normalize", args.normalize_on,
                "per-individual per-variable z-normalization [default: on]");
  sub->add_flag("--no-normalize", args.normalize_off, "disable normalization");
  sub->add_option("--methods", args.methods,
                  "subset of km_dtw,km_gak,hc_dtw,hc_gak,fcm_dtw,fkm_dtw,fkm_gak "
                  "[default: all]")
      ->delimiter(',');
  sub->add_option("--k-range", args.k_range, "inclusive k range: MIN MAX [default: 2 6]")
      ->expected(2);
  sub->add_option("--n-stability-runs", args.n_stability_runs,
                  "runs per method in the stability protocol [default: 50]");
  sub->add_option("--master-seed", args.master_seed, "master RNG seed [default: 0]");
  sub->add_option("--sigma-multiplier", args.sigma_multiplier,
                  "multiplier on the GAK sigma heuristic [default: 1]");
  sub->add_option("--dtw-band", args.dtw_band,
                  "Sakoe-Chiba band half-width in samples [default: unconstrained]");
}

RunConfig build_config(const CommonArgs& args) {
  RunConfig cfg;
  if (!args.config_file.empty())
    cfg = RunConfig::from_json(Json::parse(read_text(args.config_file)));
  if (args.input) cfg.input_path = *args.input;
  if (args.output_dir) cfg.output_dir = *args.output_dir;
  if (args.missing_policy)
    cfg.missing_policy = missing_policy_from_string(*args.missing_policy);
  if (args.normalize_on) cfg.normalize = true;
  if (args.normalize_off) cfg.normalize = false;
  if (args.methods) {
    cfg.methods.clear();
    for (const auto& m : *args.methods) cfg.methods.push_back(method_from_string(m));
  }
  if (args.k_range) {
    cfg.k_min = (*args.k_range)[0];
    cfg.k_max = (*args.k_range)[1];
  }
  if (args.n_stability_runs) cfg.n_stability_runs = *args.n_stability_runs;
  if (args.master_seed) cfg.master_seed = *args.master_seed;
  if (args.sigma_multiplier) cfg.sigma_multiplier = *args.sigma_multiplier;
  if (args.dtw_band) cfg.dtw_band = *args.dtw_band;
  cfg.validate();
  return cfg;
}

int run(int argc, char** argv) {
  CLI::App app{"multivariate EMA time-series clustering (DTW / global alignment kernel)"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CommonArgs dist_args;
  auto* dist = app.add_subcommand("distances",
                                  "compute and cache DTW / GAK matrices");
  add_common(dist, dist_args);

  CommonArgs cluster_args;
  std::string cluster_method;
  int cluster_k = 2;
  auto* cluster = app.add_subcommand("cluster", "single clustering run at a fixed k");
  add_common(cluster, cluster_args);
  cluster->add_option("--method", cluster_method, "clustering method")->required();
  cluster->add_option("--k", cluster_k, "number of clusters")->required();

  CommonArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "quality indices for every method and k");
  add_common(sweep, sweep_args);

  CommonArgs stab_args;
  std::optional<int> stab_k;
  auto* stability = app.add_subcommand(
      "stability", "repeated-run instability and silhouette distributions");
  add_common(stability, stab_args);
  stability->add_option("--k", stab_k,
                        "k for all methods [default: each method's sweep-chosen k]");

  CLI11_PARSE(app, argc, argv);

  if (dist->parsed()) {
    const auto cfg = build_config(dist_args);
    const auto prep = cmd_distances(cfg);
    if (prep.dtw_dm)
      std::cout << "dtw matrix: " << cfg.output_dir << "/dtw_distance.{csv,json}\n";
    if (prep.gak_km)
      std::cout << "gak kernel (sigma=" << prep.sigma_used << "): " << cfg.output_dir
                << "/gak_kernel.{csv,json}, gak_distance.{csv,json}\n";
  } else if (cluster->parsed()) {
    const auto cfg = build_config(cluster_args);
    const auto path = cmd_cluster(cfg, method_from_string(cluster_method), cluster_k);
    std::cout << "partition: " << path.string() << "\n";
  } else if (sweep->parsed()) {
    const auto cfg = build_config(sweep_args);
    const auto report = cmd_sweep(cfg);
    for (const auto& [method, k] : report.chosen_k)
      std::cout << method << ": chosen k = " << k << "\n";
    std::cout << "sweep: " << cfg.output_dir << "/sweep.{csv,json}\n";
  } else if (stability->parsed()) {
    const auto cfg = build_config(stab_args);
    const auto reports = cmd_stability(cfg, stab_k);
    for (const auto& [method, report] : reports)
      std::cout << method << ": instability = " << report.instability << "\n";
    std::cout << "stability: " << cfg.output_dir << "/stability_*.{csv,json}\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const mtscluster::input_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const mtscluster::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const mtscluster::degenerate_error& e) {
    std::cerr << "degenerate clustering: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
