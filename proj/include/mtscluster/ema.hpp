#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mtscluster/errors.hpp"
#include "mtscluster/matrix.hpp"

namespace mtscluster {

inline bool is_missing(double v) { return std::isnan(v); }
inline double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }

/// Ordered variable names plus optional response-scale bounds (e.g. Likert 1-7).
struct VariableSchema {
  std::vector<std::string> names;
  std::optional<double> scale_min;
  std::optional<double> scale_max;

  void validate() const {
    std::set<std::string> seen;
    for (const auto& name : names) {
      if (name.empty()) throw input_error("schema: empty variable name");
      if (!seen.insert(name).second)
        throw input_error("schema: duplicate variable name '" + name + "'");
    }
    if (scale_min && scale_max && !(*scale_min < *scale_max))
      throw input_error("schema: scale_min must be < scale_max");
  }
};

/// One individual's observations: T timestamps, T x V value matrix, NaN = missing.
struct EmaSeries {
  std::string individual_id;
  std::vector<double> timestamps;
  Matrix values;

  std::size_t length() const { return values.rows(); }
  std::size_t n_variables() const { return values.cols(); }

  bool has_missing() const {
    for (double v : values.data())
      if (is_missing(v)) return true;
    return false;
  }
};

enum class Normalization { none, zscore };

/// A cohort of series sharing one variable schema. Immutable after
/// construction; operations return transformed copies.
struct EmaDataset {
  VariableSchema schema;
  std::vector<EmaSeries> series;
  Normalization normalized = Normalization::none;

  std::size_t size() const { return series.size(); }
  std::size_t n_variables() const { return schema.names.size(); }

  bool has_missing() const {
    for (const auto& s : series)
      if (s.has_missing()) return true;
    return false;
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(series.size());
    for (const auto& s : series) out.push_back(s.individual_id);
    return out;
  }

  void validate() const {
    schema.validate();
    if (series.size() < 2) throw input_error("dataset: fewer than 2 individuals");
    std::set<std::string> seen;
    for (const auto& s : series) {
      if (!seen.insert(s.individual_id).second)
        throw input_error("dataset: duplicate individual_id '" + s.individual_id + "'");
      if (s.n_variables() != schema.names.size())
        throw input_error("dataset: series '" + s.individual_id +
                          "' variable count does not match schema");
      if (s.timestamps.size() != s.length())
        throw input_error("dataset: series '" + s.individual_id +
                          "' timestamp count does not match rows");
      for (std::size_t t = 1; t < s.timestamps.size(); ++t)
        if (!(s.timestamps[t - 1] < s.timestamps[t]))
          throw input_error("dataset: series '" + s.individual_id +
                            "' timestamps not strictly increasing");
    }
  }
};

enum class MissingPolicy { linear_interpolate, drop_row };

inline const char* to_string(MissingPolicy p) {
  return p == MissingPolicy::linear_interpolate ? "linear-interpolate" : "drop-row";
}

inline MissingPolicy missing_policy_from_string(const std::string& s) {
  if (s == "linear-interpolate") return MissingPolicy::linear_interpolate;
  if (s == "drop-row") return MissingPolicy::drop_row;
  throw input_error("unknown missing policy '" + s + "'");
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline double parse_number(const std::string& s, std::size_t line_no,
                           const char* what) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    std::ostringstream msg;
    msg << "line " << line_no << ": non-numeric " << what << " '" << s << "'";
    throw input_error(msg.str());
  }
  return v;
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Parses long-format CSV `individual_id,timestamp,<var1>,...,<varV>` into a
/// dataset. Empty cells are missing; rows with every variable missing are
/// dropped. Series come out sorted by individual_id, rows by timestamp.
inline EmaDataset load_csv(std::istream& in, const VariableSchema& schema) {
  schema.validate();
  std::string line;
  if (!std::getline(in, line)) throw input_error("csv: empty file");
  auto header = detail::split_csv_line(line);
  if (header.size() < 3 || header[0] != "individual_id" || header[1] != "timestamp")
    throw input_error("csv: header must start with individual_id,timestamp");
  const std::size_t n_vars = header.size() - 2;
  if (n_vars != schema.names.size())
    throw input_error("csv: header variable count does not match schema");
  for (std::size_t v = 0; v < n_vars; ++v)
    if (header[v + 2] != schema.names[v])
      throw input_error("csv: header variable '" + header[v + 2] +
                        "' does not match schema name '" + schema.names[v] + "'");

  struct Row {
    double timestamp;
    std::vector<double> values;
  };
  std::map<std::string, std::vector<Row>> by_id;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      std::ostringstream msg;
      msg << "line " << line_no << ": expected " << header.size() << " columns, got "
          << fields.size();
      throw input_error(msg.str());
    }
    if (fields[0].empty()) {
      std::ostringstream msg;
      msg << "line " << line_no << ": empty individual_id";
      throw input_error(msg.str());
    }
    Row row;
    row.timestamp = detail::parse_number(fields[1], line_no, "timestamp");
    row.values.resize(n_vars);
    bool any_observed = false;
    for (std::size_t v = 0; v < n_vars; ++v) {
      const std::string& cell = fields[v + 2];
      if (cell.empty()) {
        row.values[v] = missing_value();
      } else {
        row.values[v] = detail::parse_number(cell, line_no, "value");
        any_observed = true;
      }
    }
    if (!any_observed) continue;  // row carries no information
    by_id[fields[0]].push_back(std::move(row));
  }

  EmaDataset ds;
  ds.schema = schema;
  for (auto& [id, rows] : by_id) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.timestamp < b.timestamp; });
    for (std::size_t t = 1; t < rows.size(); ++t)
      if (rows[t - 1].timestamp == rows[t].timestamp)
        throw input_error("csv: duplicate (individual_id, timestamp) pair for '" + id +
                          "' at timestamp " + detail::format_number(rows[t].timestamp));
    EmaSeries s;
    s.individual_id = id;
    s.timestamps.reserve(rows.size());
    s.values = Matrix(rows.size(), n_vars);
    for (std::size_t t = 0; t < rows.size(); ++t) {
      s.timestamps.push_back(rows[t].timestamp);
      for (std::size_t v = 0; v < n_vars; ++v) s.values(t, v) = rows[t].values[v];
    }
    ds.series.push_back(std::move(s));
  }
  ds.validate();
  return ds;
}

inline EmaDataset load_csv(const std::string& path, const VariableSchema& schema) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open input file '" + path + "'");
  return load_csv(in, schema);
}

/// Overload that takes the schema from the CSV header (no scale bounds).
inline EmaDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open input file '" + path + "'");
  std::string header_line;
  if (!std::getline(in, header_line)) throw input_error("csv: empty file");
  auto header = detail::split_csv_line(header_line);
  if (header.size() < 3 || header[0] != "individual_id" || header[1] != "timestamp")
    throw input_error("csv: header must start with individual_id,timestamp");
  VariableSchema schema;
  schema.names.assign(header.begin() + 2, header.end());
  in.clear();
  in.seekg(0);
  return load_csv(in, schema);
}

/// Re-emits the long format accepted by load_csv. Observed values round-trip
/// bit-exactly through the shortest decimal representation; missing cells are
/// empty strings.
inline void export_csv(const EmaDataset& ds, std::ostream& out) {
  out << "individual_id,timestamp";
  for (const auto& name : ds.schema.names) out << ',' << name;
  out << '\n';
  for (const auto& s : ds.series) {
    for (std::size_t t = 0; t < s.length(); ++t) {
      out << s.individual_id << ',' << detail::format_number(s.timestamps[t]);
      for (std::size_t v = 0; v < s.n_variables(); ++v) {
        out << ',';
        if (!is_missing(s.values(t, v))) out << detail::format_number(s.values(t, v));
      }
      out << '\n';
    }
  }
}

inline void export_csv(const EmaDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot open output file '" + path + "'");
  export_csv(ds, out);
}

/// Fills or removes missing cells. linear_interpolate fills a missing cell
/// linearly in timestamp between the nearest observed neighbours of the same
/// variable; boundary gaps copy the nearest observed value. drop_row removes
/// every row containing at least one missing cell.
inline EmaDataset repair_missing(const EmaDataset& ds, MissingPolicy policy) {
  ds.validate();
  EmaDataset out = ds;
  for (auto& s : out.series) {
    const std::size_t T = s.length();
    const std::size_t V = s.n_variables();
    if (policy == MissingPolicy::drop_row) {
      std::vector<std::size_t> keep;
      for (std::size_t t = 0; t < T; ++t) {
        bool complete = true;
        for (std::size_t v = 0; v < V; ++v)
          if (is_missing(s.values(t, v))) complete = false;
        if (complete) keep.push_back(t);
      }
      if (keep.empty())
        throw input_error("repair: drop-row removed every row of '" + s.individual_id +
                          "'");
      Matrix values(keep.size(), V);
      std::vector<double> timestamps(keep.size());
      for (std::size_t r = 0; r < keep.size(); ++r) {
        timestamps[r] = s.timestamps[keep[r]];
        for (std::size_t v = 0; v < V; ++v) values(r, v) = s.values(keep[r], v);
      }
      s.timestamps = std::move(timestamps);
      s.values = std::move(values);
    } else {
      for (std::size_t v = 0; v < V; ++v) {
        std::vector<std::size_t> observed;
        for (std::size_t t = 0; t < T; ++t)
          if (!is_missing(s.values(t, v))) observed.push_back(t);
        if (observed.empty())
          throw input_error("repair: variable '" + out.schema.names[v] +
                            "' entirely missing for '" + s.individual_id + "'");
        if (observed.size() == T) continue;
        for (std::size_t t = 0; t < T; ++t) {
          if (!is_missing(s.values(t, v))) continue;
          auto next = std::lower_bound(observed.begin(), observed.end(), t);
          if (next == observed.begin()) {
            s.values(t, v) = s.values(observed.front(), v);
          } else if (next == observed.end()) {
            s.values(t, v) = s.values(observed.back(), v);
          } else {
            const std::size_t hi = *next;
            const std::size_t lo = *(next - 1);
            const double t0 = s.timestamps[lo];
            const double t1 = s.timestamps[hi];
            const double w = (s.timestamps[t] - t0) / (t1 - t0);
            s.values(t, v) = s.values(lo, v) + w * (s.values(hi, v) - s.values(lo, v));
          }
        }
      }
    }
  }
  return out;
}

/// Standard deviations below this are treated as zero; such variables are
/// centered but not scaled.
inline constexpr double kStdEpsilon = 1e-8;

/// Per-individual, per-variable z-normalization with the population standard
/// deviation. Requires a missing-free dataset.
inline EmaDataset znormalize(const EmaDataset& ds) {
  ds.validate();
  if (ds.has_missing())
    throw input_error("znormalize: dataset has missing cells; repair first");
  EmaDataset out = ds;
  for (auto& s : out.series) {
    const std::size_t T = s.length();
    for (std::size_t v = 0; v < s.n_variables(); ++v) {
      double mean = 0.0;
      for (std::size_t t = 0; t < T; ++t) mean += s.values(t, v);
      mean /= static_cast<double>(T);
      double var = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        const double d = s.values(t, v) - mean;
        var += d * d;
      }
      const double std_pop = std::sqrt(var / static_cast<double>(T));
      const double scale = std_pop < kStdEpsilon ? 1.0 : std_pop;
      for (std::size_t t = 0; t < T; ++t)
        s.values(t, v) = (s.values(t, v) - mean) / scale;
    }
  }
  out.normalized = Normalization::zscore;
  return out;
}

}  // namespace mtscluster
