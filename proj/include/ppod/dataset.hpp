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

#include <algorithm>
#include <compare>
#include <cstddef>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ppod/errors.hpp"
#include "ppod/privacy_budget.hpp"

namespace ppod {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw InvalidArgument("matrix data size does not match " + std::to_string(rows_) + "x" +
                            std::to_string(cols_));
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void AppendRow(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) throw InvalidArgument("row width does not match matrix");
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Identity of a record across vertical shards: owner plus 0-based row.
struct RowKey {
  int owner_id = 0;
  std::size_t row_index = 0;

  friend auto operator<=>(const RowKey&, const RowKey&) = default;
};

inline std::string ToString(const RowKey& key) {
  return "(owner " + std::to_string(key.owner_id) + ", row " + std::to_string(key.row_index) + ")";
}

class Schema {
 public:
  static Schema Create(std::vector<std::string> feature_names,
                       std::vector<SensitivityBound> feature_bounds,
                       std::set<std::string> class_labels) {
    if (feature_names.empty()) throw InvalidArgument("schema needs at least one feature");
    if (feature_bounds.size() != feature_names.size()) {
      throw InvalidArgument("schema has " + std::to_string(feature_names.size()) +
                            " features but " + std::to_string(feature_bounds.size()) + " bounds");
    }
    std::unordered_set<std::string> seen;
    for (const auto& name : feature_names) {
      if (name.empty()) throw InvalidArgument("feature names must be nonempty");
      if (!seen.insert(name).second) throw InvalidArgument("duplicate feature name: " + name);
    }
    for (const auto& b : feature_bounds) SensitivityBound::Create(b.lo, b.hi);
    for (const auto& label : class_labels) {
      if (label.empty()) throw InvalidArgument("class labels must be nonempty");
    }
    Schema s;
    s.feature_names_ = std::move(feature_names);
    s.feature_bounds_ = std::move(feature_bounds);
    s.class_labels_ = std::move(class_labels);
    return s;
  }

  std::size_t feature_count() const { return feature_names_.size(); }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<SensitivityBound>& feature_bounds() const { return feature_bounds_; }
  const std::set<std::string>& class_labels() const { return class_labels_; }
  bool HasLabel(const std::string& label) const { return class_labels_.contains(label); }

  // Position of a label in the sorted label set.
  std::size_t LabelIndex(const std::string& label) const {
    auto it = class_labels_.find(label);
    if (it == class_labels_.end()) throw InvalidArgument("unknown class label: " + label);
    return static_cast<std::size_t>(std::distance(class_labels_.begin(), it));
  }

  friend bool operator==(const Schema&, const Schema&) = default;

 private:
  Schema() = default;

  std::vector<std::string> feature_names_;
  std::vector<SensitivityBound> feature_bounds_;
  std::set<std::string> class_labels_;
};

using SchemaPtr = std::shared_ptr<const Schema>;

inline bool SameSchema(const SchemaPtr& a, const SchemaPtr& b) {
  return a == b || (a && b && *a == *b);
}

// One data owner's raw records.
struct OwnerDataset {
  int owner_id = 0;
  Matrix features;
  std::vector<std::string> labels;
  SchemaPtr schema;

  std::size_t rows() const { return features.rows(); }

  static OwnerDataset Create(int owner_id, Matrix features, std::vector<std::string> labels,
                             SchemaPtr schema) {
    if (owner_id < 1) throw InvalidArgument("owner ids start at 1");
    if (!schema) throw InvalidArgument("owner dataset needs a schema");
    if (features.rows() != labels.size()) {
      throw InvalidArgument("owner " + std::to_string(owner_id) + " has " +
                            std::to_string(features.rows()) + " feature rows but " +
                            std::to_string(labels.size()) + " labels");
    }
    if (features.rows() > 0 && features.cols() != schema->feature_count()) {
      throw InvalidArgument("owner " + std::to_string(owner_id) + " has " +
                            std::to_string(features.cols()) + " columns, schema declares " +
                            std::to_string(schema->feature_count()));
    }
    if (features.rows() == 0) features = Matrix(0, schema->feature_count());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!schema->HasLabel(labels[i])) {
        throw InvalidArgument("row " + std::to_string(i) + ": label '" + labels[i] +
                              "' is not in the schema");
      }
    }
    return OwnerDataset{owner_id, std::move(features), std::move(labels), std::move(schema)};
  }
};

// Owner records after perturbation; after a union it holds several owners.
struct NoisyDataset {
  std::vector<RowKey> row_keys;
  Matrix features;
  std::vector<std::string> labels;
  SchemaPtr schema;
  std::optional<PrivacyBudget> budget;

  std::size_t rows() const { return features.rows(); }

  // Same records, ignoring the budget annotation.
  bool SameRecords(const NoisyDataset& other) const {
    return row_keys == other.row_keys && features == other.features && labels == other.labels &&
           SameSchema(schema, other.schema);
  }
};

inline std::vector<RowKey> OwnerRowKeys(int owner_id, std::size_t rows) {
  std::vector<RowKey> keys(rows);
  for (std::size_t i = 0; i < rows; ++i) keys[i] = RowKey{owner_id, i};
  return keys;
}

}  // namespace ppod
