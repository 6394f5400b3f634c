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

// Gaussian naive Bayes used by the cloud node.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppod/dataset.hpp"
#include "ppod/errors.hpp"

namespace ppod {

struct ClassStats {
  double prior = 0.0;
  std::vector<double> mean;
  std::vector<double> variance;  // smoothing already added
};

struct GaussianNBModel {
  std::map<std::string, ClassStats> classes;  // ordered by label
  double variance_smoothing = 0.0;
  std::size_t feature_count = 0;

  friend bool operator==(const GaussianNBModel& a, const GaussianNBModel& b) {
    if (a.variance_smoothing != b.variance_smoothing || a.feature_count != b.feature_count ||
        a.classes.size() != b.classes.size()) {
      return false;
    }
    for (auto ia = a.classes.begin(), ib = b.classes.begin(); ia != a.classes.end(); ++ia, ++ib) {
      if (ia->first != ib->first || ia->second.prior != ib->second.prior ||
          ia->second.mean != ib->second.mean || ia->second.variance != ib->second.variance) {
        return false;
      }
    }
    return true;
  }
};

struct ClassificationResult {
  std::uint64_t request_id = 0;
  std::string predicted_label;
  std::map<std::string, double> class_log_scores;

  friend bool operator==(const ClassificationResult&, const ClassificationResult&) = default;
};

namespace nb_detail {

// Sums in ascending order so the result does not depend on row order.
inline double SortedSum(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum;
}

inline void MeanAndVariance(std::vector<double> values, double& mean, double& variance) {
  const double n = static_cast<double>(values.size());
  mean = SortedSum(values) / n;
  for (double& v : values) v = (v - mean) * (v - mean);
  variance = SortedSum(values) / n;
}

}  // namespace nb_detail

// Default additive smoothing: 1e-9 times the largest per-feature variance of
// the whole training set, that variance floored at 1e-9.
inline double DefaultVarianceSmoothing(const Matrix& features) {
  double max_var = 0.0;
  std::vector<double> column(features.rows());
  for (std::size_t j = 0; j < features.cols(); ++j) {
    for (std::size_t i = 0; i < features.rows(); ++i) column[i] = features(i, j);
    double mean = 0.0, var = 0.0;
    nb_detail::MeanAndVariance(column, mean, var);
    max_var = std::max(max_var, var);
  }
  return 1e-9 * std::max(max_var, 1e-9);
}

// Training is exactly invariant under row permutations: every statistic is
// accumulated over sorted values.
inline GaussianNBModel FitGaussianNB(const Matrix& features, std::span<const std::string> labels,
                                     std::optional<double> smoothing = std::nullopt) {
  if (features.rows() == 0) throw InvalidArgument("cannot fit a classifier on an empty dataset");
  if (features.cols() == 0) throw InvalidArgument("cannot fit a classifier without features");
  if (labels.size() != features.rows()) {
    throw InvalidArgument("fit: " + std::to_string(features.rows()) + " rows but " +
                          std::to_string(labels.size()) + " labels");
  }
  if (smoothing && !(*smoothing >= 0.0)) throw InvalidArgument("smoothing must be nonnegative");

  GaussianNBModel model;
  model.feature_count = features.cols();
  model.variance_smoothing = smoothing ? *smoothing : DefaultVarianceSmoothing(features);

  std::map<std::string, std::vector<std::size_t>> rows_by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) rows_by_class[labels[i]].push_back(i);

  const double total = static_cast<double>(features.rows());
  std::vector<double> column;
  for (const auto& [label, rows] : rows_by_class) {
    ClassStats stats;
    stats.prior = static_cast<double>(rows.size()) / total;
    stats.mean.resize(features.cols());
    stats.variance.resize(features.cols());
    column.resize(rows.size());
    for (std::size_t j = 0; j < features.cols(); ++j) {
      for (std::size_t k = 0; k < rows.size(); ++k) column[k] = features(rows[k], j);
      double var = 0.0;
      nb_detail::MeanAndVariance(column, stats.mean[j], var);
      stats.variance[j] = var + model.variance_smoothing;
      if (!(stats.variance[j] > 0.0)) {
        throw InvalidArgument("class '" + label + "' feature " + std::to_string(j) +
                              " has zero variance; use a positive smoothing");
      }
    }
    model.classes.emplace(label, std::move(stats));
  }
  return model;
}

inline GaussianNBModel FitGaussianNB(const NoisyDataset& data,
                                     std::optional<double> smoothing = std::nullopt) {
  return FitGaussianNB(data.features, data.labels, smoothing);
}

// Log-domain scoring; ties go to the lexicographically smallest label.
inline ClassificationResult PredictGaussianNB(const GaussianNBModel& model,
                                              std::span<const double> x,
                                              std::uint64_t request_id = 0) {
  if (x.size() != model.feature_count) {
    throw InvalidArgument("predict: expected " + std::to_string(model.feature_count) +
                          " features, got " + std::to_string(x.size()));
  }
  if (model.classes.empty()) throw InvalidArgument("predict: model has no classes");

  ClassificationResult result;
  result.request_id = request_id;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [label, stats] : model.classes) {
    double score = std::log(stats.prior);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double diff = x[j] - stats.mean[j];
      score += -0.5 * std::log(2.0 * std::numbers::pi * stats.variance[j]) -
               diff * diff / (2.0 * stats.variance[j]);
    }
    result.class_log_scores.emplace(label, score);
    if (result.predicted_label.empty() || score > best) {
      best = score;
      result.predicted_label = label;
    }
  }
  return result;
}

inline double Accuracy(std::span<const std::string> predictions,
                       std::span<const std::string> truth) {
  if (predictions.size() != truth.size()) {
    throw InvalidArgument("accuracy: " + std::to_string(predictions.size()) +
                          " predictions for " + std::to_string(truth.size()) + " labels");
  }
  if (truth.empty()) throw InvalidArgument("accuracy of an empty sequence is undefined");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predictions[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace ppod
