#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathsynth/error.hpp"
#include "pathsynth/generator.hpp"
#include "pathsynth/segmenter.hpp"
#include "pathsynth/three_sample.hpp"
#include "pathsynth/trace.hpp"

namespace pathsynth {

//! 17 significant digits: enough for exact double round-trips in text.
inline std::string format_double(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

//! Writes via a temporary in the same directory plus rename, so readers
//! never observe a partially written file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error(ErrorCode::Io, "cannot open '" + tmp.string() + "' for writing");
    out << content;
    if (!out.flush())
      throw Error(ErrorCode::Io, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    throw Error(ErrorCode::Io, "cannot rename onto '" + path.string() + "': " + ec.message());
}

//! Trace CSV: header `t,<dim_0>,...`, one row per time step.
inline void write_trace_csv(const std::filesystem::path& path, const PathTrace& trace)
{
  std::ostringstream out;
  out << "t";
  for (const auto& name : trace.dim_names)
    out << ',' << name;
  out << '\n';
  for (Eigen::Index t = 0; t < trace.n(); ++t) {
    out << format_double(static_cast<double>(t) * trace.dt);
    for (Eigen::Index k = 0; k < trace.p(); ++k)
      out << ',' << format_double(trace.values(t, k));
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

//! Tidy long-format CSV over a set of realizations, one value per row.
inline void write_tidy_csv(const std::filesystem::path& path,
                           const std::vector<PathTrace>& traces)
{
  std::ostringstream out;
  out << "realization_id,t,dim,value\n";
  for (const auto& trace : traces)
    for (Eigen::Index t = 0; t < trace.n(); ++t)
      for (Eigen::Index k = 0; k < trace.p(); ++k)
        out << trace.id << ',' << format_double(static_cast<double>(t) * trace.dt) << ','
            << trace.dim_names[static_cast<std::size_t>(k)] << ','
            << format_double(trace.values(t, k)) << '\n';
  write_file_atomic(path, out.str());
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line)
{
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    // trim surrounding whitespace
    const auto begin = field.find_first_not_of(" \t\r");
    const auto end = field.find_last_not_of(" \t\r");
    fields.push_back(begin == std::string::npos ? std::string()
                                                : field.substr(begin, end - begin + 1));
  }
  if (!line.empty() && line.back() == ',')
    fields.emplace_back();
  return fields;
}

inline double parse_double_field(const std::string& field, const std::string& context)
{
  const char* start = field.c_str();
  char* stop = nullptr;
  const double v = std::strtod(start, &stop);
  if (stop == start || *stop != '\0')
    throw Error(ErrorCode::Io, "cannot parse number '" + field + "' in " + context);
  return v;
}

struct RawTrace {
  std::vector<double> t;
  std::vector<std::vector<double>> rows;
};

//! Checks uniform spacing and assembles the validated trace.
inline PathTrace finish_trace(const RawTrace& raw, const std::vector<std::string>& dim_names,
                              const std::string& id, const std::string& context)
{
  const std::size_t n = raw.rows.size();
  if (n == 0)
    throw Error(ErrorCode::Io, "no data rows in " + context);
  double dt = 1.0;
  if (n > 1) {
    dt = raw.t[1] - raw.t[0];
    const double tol = 1e-9 * std::max(1.0, std::abs(dt));
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(raw.t[i] - raw.t[i - 1] - dt) > tol)
        throw Error(ErrorCode::InvalidParameter,
                    "irregular time spacing at row " + std::to_string(i) + " of " + context);
    if (!(dt > 0.0))
      throw Error(ErrorCode::InvalidParameter, "time column must increase in " + context);
  }
  Eigen::MatrixXd values(static_cast<Eigen::Index>(n),
                         static_cast<Eigen::Index>(dim_names.size()));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < dim_names.size(); ++k)
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = raw.rows[i][k];
  return validate_trace(std::move(values), dt, id, dim_names);
}

}  // namespace detail

//! Reads one CSV file; `trace_id` as the first column marks a multi-trace
//! file, otherwise the whole file is one trace named after its stem.
inline std::vector<PathTrace> read_traces_csv(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  const std::string context = "'" + path.string() + "'";

  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorCode::Io, "empty file " + context);
  std::vector<std::string> header = detail::split_csv_line(line);
  const bool multi = !header.empty() && header.front() == "trace_id";
  const std::size_t t_col = multi ? 1 : 0;
  if (header.size() < t_col + 2 || header[t_col] != "t")
    throw Error(ErrorCode::Io, "header must be [trace_id,]t,<dims...> in " + context);
  const std::vector<std::string> dim_names(header.begin() + static_cast<long>(t_col) + 1,
                                           header.end());

  std::vector<std::string> order;
  std::map<std::string, detail::RawTrace> raws;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r")
      continue;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw Error(ErrorCode::Io, "row " + std::to_string(line_no) + " has "
                                   + std::to_string(fields.size()) + " fields, expected "
                                   + std::to_string(header.size()) + " in " + context);
    const std::string id = multi ? fields[0] : path.stem().string();
    auto [it, inserted] = raws.try_emplace(id);
    if (inserted)
      order.push_back(id);
    it->second.t.push_back(detail::parse_double_field(fields[t_col], context));
    std::vector<double> row(dim_names.size());
    for (std::size_t k = 0; k < dim_names.size(); ++k)
      row[k] = detail::parse_double_field(fields[t_col + 1 + k], context);
    it->second.rows.push_back(std::move(row));
  }

  std::vector<PathTrace> traces;
  traces.reserve(order.size());
  for (const auto& id : order)
    traces.push_back(detail::finish_trace(raws.at(id), dim_names, id, context));
  return traces;
}

//! Accepts a single CSV or a directory of CSVs (sorted by filename).
inline std::vector<PathTrace> read_traces(const std::filesystem::path& path)
{
  if (!std::filesystem::exists(path))
    throw Error(ErrorCode::Io, "no such file or directory: '" + path.string() + "'");
  if (!std::filesystem::is_directory(path))
    return read_traces_csv(path);

  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(path))
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw Error(ErrorCode::Io, "directory '" + path.string() + "' contains no .csv files");

  std::vector<PathTrace> traces;
  for (const auto& file : files) {
    std::vector<PathTrace> batch = read_traces_csv(file);
    for (auto& trace : batch)
      traces.push_back(std::move(trace));
  }
  return traces;
}

inline nlohmann::json to_json(const SegmentationPlan& plan)
{
  nlohmann::json j;
  j["n"] = plan.n;
  j["alpha"] = plan.alpha;
  j["min_len"] = plan.min_len;
  j["boundaries"] = plan.boundaries;
  nlohmann::json splits = nlohmann::json::array();
  for (const auto& rec : plan.pvalues)
    splits.push_back({{"lo", rec.lo}, {"hi", rec.hi}, {"split", rec.split},
                      {"pvalue", rec.pvalue}});
  j["splits"] = splits;
  return j;
}

inline nlohmann::json matrix_json(const Eigen::MatrixXd& m)
{
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline nlohmann::json to_json(const ThreeSampleReport& report)
{
  nlohmann::json j;
  j["rho"] = report.rho;
  j["z_u_global"] = report.z_u_global;
  j["c_t"] = report.c_t;
  j["params"] = {{"L", report.params.window},
                 {"stride", report.params.stride},
                 {"k", report.params.k},
                 {"tau", report.params.tau}};
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& bin : report.bins) {
    nlohmann::json b;
    b["bin"] = bin.bin;
    b["count_p"] = bin.count_p;
    b["count_q"] = bin.count_q;
    b["retained"] = bin.retained;
    if (bin.retained)
      b["z_u"] = bin.z_u;
    else
      b["z_u"] = nullptr;
    bins.push_back(b);
  }
  j["bins"] = bins;
  return j;
}

inline nlohmann::json to_json(const GenerationReport& report)
{
  nlohmann::json j;
  j["source_id"] = report.source_id;
  j["params"] = {{"b", report.params.b},
                 {"lambda", report.params.lambda},
                 {"delta", report.params.delta},
                 {"n_realizations", report.params.n_realizations},
                 {"alpha", report.params.alpha},
                 {"min_len", report.params.min_len},
                 {"h", report.params.h},
                 {"seed", report.params.rng.seed},
                 {"stream", report.params.rng.stream_id}};
  j["plan"] = to_json(report.plan);
  nlohmann::json segments = nlohmann::json::array();
  for (const auto& seg : report.segments) {
    nlohmann::json s;
    s["lo"] = seg.lo;
    s["hi"] = seg.hi;
    s["sigma"] = matrix_json(seg.sigma);
    s["band_widths"] = seg.band_widths;
    segments.push_back(s);
  }
  j["segments"] = segments;
  nlohmann::json targets = nlohmann::json::array();
  for (const auto& per_real : report.targets) {
    nlohmann::json reals = nlohmann::json::array();
    for (const auto& g : per_real)
      reals.push_back(matrix_json(g));
    targets.push_back(reals);
  }
  j["targets"] = targets;
  j["warnings"] = report.warnings;
  return j;
}

}  // namespace pathsynth
