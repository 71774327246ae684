// Copyright 2026 The mfbo Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#ifndef MFBO_IO_HPP
#define MFBO_IO_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mfbo/emulator/dataset.hpp"
#include "mfbo/loop.hpp"

namespace mfbo::io {

/// Round-trippable text form of a double ("nan" for NaN).
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("not a number: " + s);
  return v;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// A parsed comma-separated table with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error("table has no column " + name);
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline Table read_table(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = mfbo::detail::split_csv_line(line, line_no);
    if (t.header.empty()) {
      t.header = std::move(fields);
    } else {
      if (fields.size() != t.header.size()) throw ParseError(path.string() + ": ragged row", line_no);
      t.rows.push_back(std::move(fields));
    }
  }
  return t;
}

inline std::string history_csv(const BOHistory& h) {
  std::ostringstream out;
  out << "iteration,source,cost_step,cost_cumulative";
  for (std::size_t k = 0; k < h.continuous_dims; ++k) out << ",x_" << k + 1;
  for (std::size_t k = 0; k < h.categorical_dims; ++k) out << ",t_" << k + 1;
  out << ",y_observed,y_best_hf\n";
  for (const auto& r : h.records) {
    out << r.iteration << ',' << h.source_names[r.source] << ',' << fmt(r.cost_step) << ',' << fmt(r.cost_cumulative);
    for (double x : r.point.continuous) out << ',' << fmt(x);
    for (int t : r.point.categorical) out << ',' << t;
    out << ',' << fmt(r.y_observed) << ',' << fmt(r.y_best_hf) << '\n';
  }
  return out.str();
}

/// One (cost, best HF) step trace.
struct Trace {
  std::vector<double> cost;
  std::vector<double> best;
};

inline Trace trace_of(const BOHistory& h) {
  Trace t;
  for (const auto& r : h.records) {
    t.cost.push_back(r.cost_cumulative);
    t.best.push_back(r.y_best_hf);
  }
  return t;
}

inline Trace read_trace(const std::filesystem::path& history_csv_path) {
  const Table tab = read_table(history_csv_path);
  const std::size_t c = tab.col("cost_cumulative"), b = tab.col("y_best_hf");
  Trace t;
  for (const auto& row : tab.rows) {
    t.cost.push_back(parse_double(row[c]));
    t.best.push_back(parse_double(row[b]));
  }
  return t;
}

/// Step-interpolated value of a trace at `cost`: the last best recorded at or
/// below it, carried past the trace's end. NaN before the first record.
inline double step_value(const Trace& t, double cost) {
  const auto it = std::upper_bound(t.cost.begin(), t.cost.end(), cost);
  if (it == t.cost.begin()) return std::numeric_limits<double>::quiet_NaN();
  return t.best[static_cast<std::size_t>(it - t.cost.begin()) - 1];
}

struct SummaryRow {
  double cost = 0.0;
  std::size_t count = 0;  // repetitions with a defined value
  double min = 0.0, median = 0.0, max = 0.0, mean = 0.0;
};

/// Aggregate convergence over the union of all traces' cost points.
inline std::vector<SummaryRow> aggregate(const std::vector<Trace>& traces) {
  std::vector<double> grid;
  for (const auto& t : traces) grid.insert(grid.end(), t.cost.begin(), t.cost.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::vector<SummaryRow> out;
  std::vector<double> vals;
  for (double c : grid) {
    vals.clear();
    for (const auto& t : traces) {
      const double v = step_value(t, c);
      if (!std::isnan(v)) vals.push_back(v);
    }
    SummaryRow r;
    r.cost = c;
    r.count = vals.size();
    if (vals.empty()) {
      r.min = r.median = r.max = r.mean = std::numeric_limits<double>::quiet_NaN();
    } else {
      std::sort(vals.begin(), vals.end());
      const std::size_t n = vals.size();
      r.min = vals.front();
      r.max = vals.back();
      r.median = n % 2 == 1 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
      double s = 0.0;
      for (double v : vals) s += v;
      r.mean = s / static_cast<double>(n);
    }
    out.push_back(r);
  }
  return out;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << "cost,reps,min,median,max,mean\n";
  for (const auto& r : rows) {
    out << fmt(r.cost) << ',' << r.count << ',' << fmt(r.min) << ',' << fmt(r.median) << ',' << fmt(r.max) << ','
        << fmt(r.mean) << '\n';
  }
  return out.str();
}

}  // namespace mfbo::io

#endif  // MFBO_IO_HPP
