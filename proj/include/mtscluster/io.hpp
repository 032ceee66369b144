#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtscluster/cluster.hpp"
#include "mtscluster/dtw.hpp"
#include "mtscluster/ema.hpp"
#include "mtscluster/errors.hpp"
#include "mtscluster/gak.hpp"
#include "mtscluster/matrix.hpp"
#include "mtscluster/validity.hpp"

namespace mtscluster {

/// Order-preserving JSON so emitted files are byte-stable across runs.
using Json = nlohmann::ordered_json;

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& rows) {
  if (!rows.is_array() || rows.empty())
    throw input_error("json: expected a non-empty matrix");
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) throw input_error("json: ragged matrix");
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

inline Json to_json(const DistanceMatrix& dm) {
  Json j;
  j["n"] = dm.n();
  j["metric_tag"] = dm.metric_tag;
  j["ids"] = dm.ids;
  j["d"] = matrix_to_json(dm.d);
  return j;
}

inline DistanceMatrix distance_matrix_from_json(const Json& j) {
  DistanceMatrix dm;
  dm.metric_tag = j.at("metric_tag").get<std::string>();
  dm.ids = j.at("ids").get<std::vector<std::string>>();
  dm.d = matrix_from_json(j.at("d"));
  dm.validate();
  return dm;
}

inline Json to_json(const KernelMatrix& km) {
  Json j;
  j["n"] = km.n();
  j["sigma_used"] = km.sigma_used;
  j["normalized"] = km.normalized;
  j["ids"] = km.ids;
  j["k"] = matrix_to_json(km.k);
  return j;
}

inline KernelMatrix kernel_matrix_from_json(const Json& j) {
  KernelMatrix km;
  km.sigma_used = j.at("sigma_used").get<double>();
  km.normalized = j.at("normalized").get<bool>();
  km.ids = j.at("ids").get<std::vector<std::string>>();
  km.k = matrix_from_json(j.at("k"));
  return km;
}

inline Json to_json(const HardPartition& p) {
  Json j;
  j["k"] = p.k;
  j["k_effective"] = p.k_effective;
  j["labels"] = p.labels;
  j["empty_clusters"] = p.empty_clusters;
  j["representatives"] = p.representatives;
  j["objective"] = p.objective;
  j["n_iter"] = p.n_iter;
  j["converged"] = p.converged;
  j["objective_trace"] = p.objective_trace;
  return j;
}

inline Json to_json(const FuzzyPartition& p) {
  Json j;
  j["k"] = p.memberships.cols();
  j["k_effective"] = p.k_effective;
  j["fuzzifier"] = p.fuzzifier;
  j["memberships"] = matrix_to_json(p.memberships);
  j["empty_clusters"] = p.empty_clusters;
  j["medoids"] = p.medoids;
  j["objective"] = p.objective;
  j["n_iter"] = p.n_iter;
  j["converged"] = p.converged;
  j["objective_trace"] = p.objective_trace;
  return j;
}

inline Json to_json(const QualityReport& q) {
  Json j;
  j["silhouette_mean"] = q.silhouette_mean;
  j["silhouette_per_individual"] = q.silhouette_per_individual;
  j["pc"] = q.pc ? Json(*q.pc) : Json(nullptr);
  j["pe"] = q.pe ? Json(*q.pe) : Json(nullptr);
  j["xb"] = q.xb ? Json(*q.xb) : Json(nullptr);
  j["k_effective"] = q.k_effective;
  return j;
}

inline Json to_json(const StabilityReport& r) {
  Json j;
  j["instability"] = r.instability;
  j["n_runs"] = r.n_runs;
  j["silhouette_distribution"] = r.silhouette_distribution;
  j["seeds"] = r.seeds;
  j["outlier_runs"] = r.outlier_runs;
  j["pairwise_disagreements"] = matrix_to_json(r.pairwise_disagreements);
  return j;
}

/// Matrix CSV layout: one header row with the n individual ids, then n rows
/// of n values.
inline void write_matrix_csv(std::ostream& out, const std::vector<std::string>& ids,
                             const Matrix& m) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out << ',';
    out << ids[i];
  }
  out << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << detail::format_number(m(i, j));
    }
    out << '\n';
  }
}

/// Writes via a temporary file in the same directory plus rename, so readers
/// never observe a half-written file.
inline void write_text_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  const auto dir = path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw input_error("cannot open output file '" + tmp + "'");
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open input file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace mtscluster
