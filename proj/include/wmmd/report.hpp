#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "wmmd/dataset_io.hpp"
#include "wmmd/error.hpp"
#include "wmmd/kernel_json.hpp"
#include "wmmd/slope.hpp"

#ifndef WMMD_VERSION
#define WMMD_VERSION "0.1.0"
#endif

namespace wmmd {

inline const char* version() { return WMMD_VERSION; }

/// Tabular experiment output. Rows are numeric; a row-level verdict, when the
/// experiment has one, lives in an "ok" column so pass/fail can be recomputed
/// from the CSV.
struct Report {
  std::string experiment;
  std::uint64_t seed = 0;
  bool pass = true;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  json margins = json::object();
  json slopes = json::object();
  json extra = json::object();

  void add_row(std::vector<double> r) {
    require(r.size() == columns.size(), Errc::DimensionMismatch, "row width differs from header");
    rows.push_back(std::move(r));
  }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw Error(Errc::InvalidArgument, "no column '" + name + "'");
  }
};

inline json slope_to_json(const SlopeFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"stderr", f.stderr_slope}, {"r2", f.r2}};
}

inline json report_summary(const Report& r) {
  json j;
  j["experiment"] = r.experiment;
  j["seed"] = r.seed;
  j["pass"] = r.pass;
  j["version"] = version();
  j["rows"] = r.rows.size();
  j["margins"] = r.margins;
  j["slopes"] = r.slopes;
  for (auto it = r.extra.begin(); it != r.extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

inline void write_report_csv(std::ostream& os, const Report& r) {
  for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? "," : "") << r.columns[i];
  os << '\n';
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << '\n';
  }
}

/// Writes `path` (CSV) and `path.summary.json`.
inline void emit_report(const Report& r, const std::string& path) {
  {
    std::ofstream out(path);
    require(static_cast<bool>(out), Errc::Io, "cannot write " + path);
    write_report_csv(out, r);
    require(static_cast<bool>(out), Errc::Io, "write failed for " + path);
  }
  std::ofstream js(path + ".summary.json");
  require(static_cast<bool>(js), Errc::Io, "cannot write " + path + ".summary.json");
  js << report_summary(r).dump(2) << '\n';
  require(static_cast<bool>(js), Errc::Io, "write failed for " + path + ".summary.json");
}

/// Header and rows of a report CSV; values parse back bit-exactly.
inline Report read_report_csv(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::Io, "cannot open " + path);
  Report r;
  std::string line;
  if (!std::getline(in, line)) return r;
  r.columns = detail::split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    require(cells.size() == r.columns.size(), Errc::RaggedDimensions, "ragged report row");
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i)
      require(detail::parse_double(cells[i], row[i]), Errc::Parse, "non-numeric report cell '" + cells[i] + "'");
    r.rows.push_back(std::move(row));
  }
  return r;
}

}  // namespace wmmd
