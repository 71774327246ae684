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

#ifndef MFBO_EMULATOR_DATASET_HPP
#define MFBO_EMULATOR_DATASET_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfbo/emulator/types.hpp"

namespace mfbo {

/// Column roles and per-source metadata read from the JSON sidecar.
///
///   {
///     "continuous": ["x1", "x2"],
///     "categorical": ["material"],
///     "source": "fidelity",
///     "output": "y",
///     "sources": [{"name": "HF", "cost": 1000}, {"name": "LF1", "cost": 10}],
///     "hf_source": "HF",
///     "sense": "minimize"
///   }
///
/// "sources" is optional; without it sources are indexed in first-seen order
/// with unit cost and the first one seen is the HF source unless hf_source
/// names another.
struct DatasetSchema {
  std::vector<std::string> continuous;
  std::vector<std::string> categorical;
  std::string source;
  std::string output;
  std::vector<std::string> source_names;
  std::vector<double> costs;
  std::string hf_source;
  Sense sense = Sense::minimize;

  static DatasetSchema from_json(const nlohmann::json& j) {
    DatasetSchema s;
    try {
      if (j.contains("continuous")) s.continuous = j.at("continuous").get<std::vector<std::string>>();
      if (j.contains("categorical")) s.categorical = j.at("categorical").get<std::vector<std::string>>();
      s.source = j.at("source").get<std::string>();
      s.output = j.at("output").get<std::string>();
      if (j.contains("sources")) {
        for (const auto& e : j.at("sources")) {
          s.source_names.push_back(e.at("name").get<std::string>());
          s.costs.push_back(e.value("cost", 1.0));
        }
      }
      s.hf_source = j.value("hf_source", std::string{});
      const std::string sense = j.value("sense", std::string{"minimize"});
      if (sense == "minimize") {
        s.sense = Sense::minimize;
      } else if (sense == "maximize") {
        s.sense = Sense::maximize;
      } else {
        throw ConfigError("sidecar: sense must be 'minimize' or 'maximize', got '" + sense + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("sidecar: ") + e.what());
    }
    if (s.continuous.empty() && s.categorical.empty()) throw ConfigError("sidecar: no input columns declared");
    for (double c : s.costs) {
      if (!(c > 0.0)) throw ConfigError("sidecar: source costs must be positive");
    }
    return s;
  }
};

struct LoadedDataset {
  Dataset data;  // outputs in the file's own sense
  InputSpace space;
  std::vector<std::string> continuous_names;
  std::vector<std::string> categorical_names;
  std::vector<std::vector<std::string>> level_names;  // per categorical column, index order
  std::vector<std::string> source_names;
  std::vector<double> costs;
  std::size_t hf_index = 0;
  Sense sense = Sense::minimize;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Splits one comma-separated line. Double-quoted fields may contain commas;
// a doubled quote inside quotes is a literal quote.
inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError("unterminated quote", line_no);
  out.push_back(trim(cur));
  return out;
}

inline double parse_number(const std::string& field, const std::string& column, std::size_t line_no) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (field.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v)) {
    throw ParseError("column '" + column + "': '" + field + "' is not a finite number", line_no);
  }
  return v;
}

}  // namespace detail

/// Parses the comma-separated dataset text with the given schema. Line numbers
/// in errors are 1-based and count the header.
inline LoadedDataset parse_dataset(std::istream& in, const DatasetSchema& schema) {
  LoadedDataset out;
  out.continuous_names = schema.continuous;
  out.categorical_names = schema.categorical;
  out.sense = schema.sense;
  out.source_names = schema.source_names;
  out.costs = schema.costs;
  out.level_names.resize(schema.categorical.size());

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) {
      header = detail::split_csv_line(line, line_no);
      break;
    }
  }
  if (header.empty()) throw ParseError("empty dataset", line_no);
  auto column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError("header has no column '" + name + "'", line_no);
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::size_t> cont_idx, cat_idx;
  for (const auto& c : schema.continuous) cont_idx.push_back(column(c));
  for (const auto& c : schema.categorical) cat_idx.push_back(column(c));
  const std::size_t src_idx = column(schema.source);
  const std::size_t out_idx = column(schema.output);

  std::vector<std::map<std::string, int>> level_index(schema.categorical.size());
  const bool declared = !schema.source_names.empty();
  std::map<std::string, std::size_t> source_index;
  for (std::size_t j = 0; j < schema.source_names.size(); ++j) source_index[schema.source_names[j]] = j;

  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line, line_no);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()),
                       line_no);
    }
    Observation obs;
    for (std::size_t k = 0; k < cont_idx.size(); ++k) {
      obs.input.point.continuous.push_back(detail::parse_number(fields[cont_idx[k]], schema.continuous[k], line_no));
    }
    for (std::size_t k = 0; k < cat_idx.size(); ++k) {
      const std::string& level = fields[cat_idx[k]];
      if (level.empty()) throw ParseError("column '" + schema.categorical[k] + "' is empty", line_no);
      const auto [it, fresh] = level_index[k].try_emplace(level, static_cast<int>(out.level_names[k].size()));
      if (fresh) out.level_names[k].push_back(level);
      obs.input.point.categorical.push_back(it->second);
    }
    const std::string& src = fields[src_idx];
    auto it = source_index.find(src);
    if (it == source_index.end()) {
      if (declared) throw ParseError("source '" + src + "' is not declared in the sidecar", line_no);
      it = source_index.emplace(src, out.source_names.size()).first;
      out.source_names.push_back(src);
      out.costs.push_back(1.0);
    }
    obs.input.source = it->second;
    obs.y = detail::parse_number(fields[out_idx], schema.output, line_no);
    out.data.push_back(std::move(obs));
  }
  if (out.data.empty()) throw ParseError("dataset has no data rows", line_no);

  if (!schema.hf_source.empty()) {
    const auto it = source_index.find(schema.hf_source);
    if (it == source_index.end()) throw ConfigError("sidecar: hf_source '" + schema.hf_source + "' never appears");
    out.hf_index = it->second;
  }
  out.space.continuous_dims = schema.continuous.size();
  for (const auto& names : out.level_names) out.space.cardinalities.push_back(static_cast<int>(names.size()));
  out.space.num_sources = out.source_names.size();
  return out;
}

/// Loads `csv_path` with its sidecar (defaults to csv_path + ".json", then the
/// same stem with a .json extension).
inline LoadedDataset load_dataset(const std::filesystem::path& csv_path, std::filesystem::path sidecar = {}) {
  namespace fs = std::filesystem;
  if (sidecar.empty()) {
    sidecar = fs::path(csv_path.string() + ".json");
    if (!fs::exists(sidecar)) sidecar = fs::path(csv_path).replace_extension(".json");
  }
  std::ifstream js(sidecar);
  if (!js) throw ConfigError("cannot open sidecar " + sidecar.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("sidecar " + sidecar.string() + ": " + e.what());
  }
  const DatasetSchema schema = DatasetSchema::from_json(j);
  std::ifstream in(csv_path);
  if (!in) throw ConfigError("cannot open dataset " + csv_path.string());
  return parse_dataset(in, schema);
}

}  // namespace mfbo

#endif  // MFBO_EMULATOR_DATASET_HPP
