/*
 * Copyright 2026 The PPOD Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// CSV ingestion plus the vertical split of noisy owner data into per-fog
// shards, and the cloud-side inverse.
//
// Feature columns are addressed by 0-based position. Fog and owner ids are
// 1-based. Column c goes to fog (c mod s) + 1; labels never ride in a
// feature shard and travel in their own LabelShard to fog 1.

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ppod/dataset.hpp"
#include "ppod/errors.hpp"

namespace ppod {

inline constexpr const char* kLabelColumn = "label";

namespace csv_detail {

inline std::vector<std::string> SplitLine(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos
                                                                               : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
    cells.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline std::optional<double> ParseReal(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

struct RawTable {
  std::vector<std::string> header;
  // (1-based line number, cells)
  std::vector<std::pair<std::size_t, std::vector<std::string>>> records;
};

inline RawTable ReadTable(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(ParseError::Kind::kMissingFile, "cannot open " + path);
  RawTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (line.empty() || line == "\r") continue;
    auto cells = SplitLine(line);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
    } else {
      table.records.emplace_back(line_no, std::move(cells));
    }
  }
  if (!have_header) throw ParseError(ParseError::Kind::kHeaderMismatch, path + ": missing header row", 1);
  return table;
}

}  // namespace csv_detail

// Parses a CSV whose header is the schema's feature names followed by
// "label". Row order is preserved.
inline OwnerDataset LoadCsv(const std::string& path, const SchemaPtr& schema, int owner_id = 1) {
  using csv_detail::ParseReal;
  if (!schema) throw InvalidArgument("LoadCsv needs a schema");
  const auto table = csv_detail::ReadTable(path);

  std::vector<std::string> expected = schema->feature_names();
  expected.emplace_back(kLabelColumn);
  if (table.header != expected) {
    std::string got;
    for (const auto& h : table.header) got += (got.empty() ? "" : ",") + h;
    throw ParseError(ParseError::Kind::kHeaderMismatch,
                     path + ":1: header '" + got + "' does not match the schema", 1);
  }

  const std::size_t m = schema->feature_count();
  Matrix features(0, m);
  std::vector<std::string> labels;
  labels.reserve(table.records.size());
  for (const auto& [line_no, cells] : table.records) {
    const std::string where = path + ":" + std::to_string(line_no);
    if (cells.size() != m + 1) {
      throw ParseError(ParseError::Kind::kRowWidth,
                       where + ": expected " + std::to_string(m + 1) + " fields, found " +
                           std::to_string(cells.size()),
                       line_no);
    }
    std::vector<double> row(m);
    for (std::size_t j = 0; j < m; ++j) {
      const auto value = ParseReal(cells[j]);
      if (!value) {
        throw ParseError(ParseError::Kind::kNonNumeric,
                         where + ": column '" + schema->feature_names()[j] + "' value '" +
                             cells[j] + "' is not a decimal number",
                         line_no, schema->feature_names()[j]);
      }
      row[j] = *value;
    }
    if (!schema->HasLabel(cells[m])) {
      throw ParseError(ParseError::Kind::kUnknownLabel,
                       where + ": label '" + cells[m] + "' is not a declared class", line_no,
                       kLabelColumn);
    }
    features.AppendRow(row);
    labels.push_back(cells[m]);
  }
  return OwnerDataset::Create(owner_id, std::move(features), std::move(labels), schema);
}

// Builds a schema from a CSV: feature names from the header, bounds from the
// observed per-column min/max, classes from the distinct labels.
inline SchemaPtr InferSchema(const std::string& path) {
  using csv_detail::ParseReal;
  const auto table = csv_detail::ReadTable(path);
  if (table.header.size() < 2 || table.header.back() != kLabelColumn) {
    throw ParseError(ParseError::Kind::kHeaderMismatch,
                     path + ":1: header must list features followed by 'label'", 1);
  }
  const std::size_t m = table.header.size() - 1;
  std::vector<double> lo(m, std::numeric_limits<double>::infinity());
  std::vector<double> hi(m, -std::numeric_limits<double>::infinity());
  std::set<std::string> labels;
  for (const auto& [line_no, cells] : table.records) {
    if (cells.size() != m + 1) {
      throw ParseError(ParseError::Kind::kRowWidth,
                       path + ":" + std::to_string(line_no) + ": wrong field count", line_no);
    }
    for (std::size_t j = 0; j < m; ++j) {
      const auto value = ParseReal(cells[j]);
      if (!value) {
        throw ParseError(ParseError::Kind::kNonNumeric,
                         path + ":" + std::to_string(line_no) + ": column '" + table.header[j] +
                             "' value '" + cells[j] + "' is not a decimal number",
                         line_no, table.header[j]);
      }
      lo[j] = std::min(lo[j], *value);
      hi[j] = std::max(hi[j], *value);
    }
    labels.insert(cells[m]);
  }
  if (table.records.empty()) {
    throw ParseError(ParseError::Kind::kRowWidth, path + ": no data rows");
  }
  std::vector<SensitivityBound> bounds;
  for (std::size_t j = 0; j < m; ++j) bounds.push_back(SensitivityBound::Create(lo[j], hi[j]));
  std::vector<std::string> names(table.header.begin(), table.header.end() - 1);
  return std::make_shared<const Schema>(
      Schema::Create(std::move(names), std::move(bounds), std::move(labels)));
}

// A vertical slice of noisy features held by one fog node.
struct Shard {
  int fog_id = 0;
  int owner_id = 0;  // 0 when the rows span several owners
  std::vector<std::size_t> column_indices;
  std::vector<RowKey> row_keys;
  Matrix values;  // row_keys.size() x column_indices.size()

  bool empty() const { return column_indices.empty(); }
};

struct LabelShard {
  int fog_id = 0;
  int owner_id = 0;
  std::vector<RowKey> row_keys;
  std::vector<std::string> labels;
};

struct Partition {
  std::vector<Shard> shards;  // shards[j] belongs to fog j + 1
  LabelShard labels;
};

// Fog node (1-based) that stores feature column `column` when there are
// `fog_count` fog nodes.
inline int FogForColumn(std::size_t column, std::size_t fog_count) {
  return static_cast<int>(column % fog_count) + 1;
}

inline int CommonOwner(const std::vector<RowKey>& keys) {
  if (keys.empty()) return 0;
  const int first = keys.front().owner_id;
  for (const auto& k : keys) {
    if (k.owner_id != first) return 0;
  }
  return first;
}

// Round-robin column split into exactly `fog_count` shards (trailing shards
// may be empty when fog_count exceeds the feature count).
inline Partition VerticalPartition(const NoisyDataset& data, std::size_t fog_count) {
  if (fog_count == 0) throw InvalidArgument("need at least one fog node");
  const std::size_t m = data.features.cols();
  const std::size_t r = data.rows();
  const int owner = CommonOwner(data.row_keys);
  if (data.row_keys.size() != r || data.labels.size() != r) {
    throw InvalidArgument("noisy dataset row keys, features and labels disagree on row count");
  }

  Partition out;
  out.shards.resize(fog_count);
  for (std::size_t f = 0; f < fog_count; ++f) {
    out.shards[f].fog_id = static_cast<int>(f) + 1;
    out.shards[f].owner_id = owner;
    out.shards[f].row_keys = data.row_keys;
  }
  for (std::size_t c = 0; c < m; ++c) {
    out.shards[static_cast<std::size_t>(FogForColumn(c, fog_count)) - 1].column_indices.push_back(c);
  }
  for (auto& shard : out.shards) {
    const std::size_t width = shard.column_indices.size();
    shard.values = Matrix(r, width);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t k = 0; k < width; ++k) {
        shard.values(i, k) = data.features(i, shard.column_indices[k]);
      }
    }
  }
  out.labels = LabelShard{1, owner, data.row_keys, data.labels};
  return out;
}

// Inverse of VerticalPartition. The shards must cover every schema column
// exactly once and agree on row keys with each other and with the labels.
inline NoisyDataset Reassemble(std::span<const Shard> shards, const LabelShard& labels,
                               const SchemaPtr& schema) {
  if (!schema) throw InvalidArgument("Reassemble needs a schema");
  const std::size_t m = schema->feature_count();
  const std::vector<RowKey>& keys = labels.row_keys;
  if (labels.labels.size() != keys.size()) {
    throw AssemblyError("label shard has " + std::to_string(labels.labels.size()) +
                        " labels for " + std::to_string(keys.size()) + " row keys");
  }

  std::vector<const Shard*> source(m, nullptr);
  std::vector<std::size_t> source_col(m, 0);
  for (const auto& shard : shards) {
    if (shard.values.rows() != shard.row_keys.size() ||
        (shard.values.cols() != shard.column_indices.size() && !shard.row_keys.empty())) {
      throw AssemblyError("shard from fog " + std::to_string(shard.fog_id) +
                          " has a malformed value matrix");
    }
    if (shard.row_keys.size() != keys.size()) {
      throw AssemblyError("shard from fog " + std::to_string(shard.fog_id) + " has " +
                          std::to_string(shard.row_keys.size()) + " rows, labels have " +
                          std::to_string(keys.size()));
    }
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (shard.row_keys[i] != keys[i]) {
        throw AssemblyError("inconsistent row key " + ToString(shard.row_keys[i]) +
                            " at position " + std::to_string(i) + " in shard from fog " +
                            std::to_string(shard.fog_id) + " (expected " + ToString(keys[i]) + ")");
      }
    }
    for (std::size_t k = 0; k < shard.column_indices.size(); ++k) {
      const std::size_t c = shard.column_indices[k];
      if (c >= m) throw AssemblyError("column " + std::to_string(c) + " is not in the schema");
      if (source[c] != nullptr) throw AssemblyError("duplicate column " + std::to_string(c));
      source[c] = &shard;
      source_col[c] = k;
    }
  }
  for (std::size_t c = 0; c < m; ++c) {
    if (source[c] == nullptr) throw AssemblyError("missing column " + std::to_string(c));
  }

  NoisyDataset out;
  out.row_keys = keys;
  out.labels = labels.labels;
  out.schema = schema;
  out.features = Matrix(keys.size(), m);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    for (std::size_t c = 0; c < m; ++c) out.features(i, c) = source[c]->values(i, source_col[c]);
  }
  return out;
}

inline NoisyDataset Reassemble(const Partition& partition, const SchemaPtr& schema) {
  return Reassemble(partition.shards, partition.labels, schema);
}

// Row-wise union ordered by (owner id, row index).
inline NoisyDataset UnionOwners(std::span<const NoisyDataset> datasets) {
  if (datasets.empty()) throw InvalidArgument("UnionOwners needs at least one dataset");
  const SchemaPtr& schema = datasets.front().schema;
  bool same_budget = true;

  struct Ref {
    RowKey key;
    const NoisyDataset* source;
    std::size_t row;
  };
  std::vector<Ref> refs;
  for (const auto& d : datasets) {
    if (!SameSchema(schema, d.schema)) throw InvalidArgument("UnionOwners: schema mismatch");
    if (d.row_keys.size() != d.rows() || d.labels.size() != d.rows()) {
      throw InvalidArgument("UnionOwners: malformed dataset");
    }
    same_budget = same_budget && d.budget == datasets.front().budget;
    for (std::size_t i = 0; i < d.rows(); ++i) refs.push_back(Ref{d.row_keys[i], &d, i});
  }
  std::stable_sort(refs.begin(), refs.end(),
                   [](const Ref& a, const Ref& b) { return a.key < b.key; });
  for (std::size_t i = 1; i < refs.size(); ++i) {
    if (refs[i].key == refs[i - 1].key) {
      throw InvalidArgument("UnionOwners: duplicate row " + ToString(refs[i].key));
    }
  }

  const std::size_t m = schema ? schema->feature_count() : datasets.front().features.cols();
  NoisyDataset out;
  out.schema = schema;
  if (same_budget) out.budget = datasets.front().budget;
  out.features = Matrix(0, m);
  out.row_keys.reserve(refs.size());
  out.labels.reserve(refs.size());
  for (const auto& ref : refs) {
    out.row_keys.push_back(ref.key);
    out.features.AppendRow(ref.source->features.row(ref.row));
    out.labels.push_back(ref.source->labels[ref.row]);
  }
  return out;
}

}  // namespace ppod
