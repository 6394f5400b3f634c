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

// Owner-side local differential privacy.
//
// Every numeric cell is clipped to its declared bounds and then receives an
// independent Laplace(delta / epsilon_j) draw, where delta = hi - lo and
// epsilon_j is the feature's share of the owner's budget. Sampling goes
// through the inverse CDF of an explicitly supplied uniform variate, so any
// draw can be replayed from the seed that produced it.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ppod/dataset.hpp"
#include "ppod/errors.hpp"
#include "ppod/privacy_budget.hpp"

namespace ppod {

// splitmix64 finalizer; used to derive independent seeds from structured keys.
inline std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return Mix64(Mix64(Mix64(seed) ^ a) ^ b);
}

// Stream of uniform variates strictly inside (0, 1).
//
// Uses the top 53 bits of mt19937_64 output offset by half an ulp, which never
// yields 0 or 1 and is identical on every platform.
class VariateStream {
 public:
  explicit VariateStream(std::uint64_t seed) : engine_(seed) {}

  double Next() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  // Uniform integer in [0, bound) by rejection.
  std::uint64_t NextBelow(std::uint64_t bound) {
    if (bound == 0) throw InvalidArgument("NextBelow needs a positive bound");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

 private:
  std::mt19937_64 engine_;
};

// Quantile function of the zero-mean Laplace distribution.
inline double LaplaceInverseCdf(double u, double scale) {
  if (!(u > 0.0 && u < 1.0)) {
    throw InvalidArgument("uniform variate must lie in (0, 1), got " + std::to_string(u));
  }
  if (!(scale >= 0.0)) throw InvalidArgument("Laplace scale must be nonnegative");
  if (scale == 0.0) return 0.0;
  const double centered = u - 0.5;
  if (centered == 0.0) return 0.0;
  const double sign = centered > 0 ? 1.0 : -1.0;
  return -scale * sign * std::log1p(-2.0 * std::fabs(centered));
}

inline double LaplaceCdf(double x, double scale) {
  return x < 0 ? 0.5 * std::exp(x / scale) : 1.0 - 0.5 * std::exp(-x / scale);
}

// x plus Laplace(delta / epsilon) noise; x unchanged for infinite epsilon or
// zero sensitivity.
inline double PerturbValue(double x, double delta, double epsilon, double u) {
  if (!(delta >= 0.0)) throw InvalidArgument("sensitivity must be nonnegative");
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (IsInfiniteEpsilon(epsilon) || delta == 0.0) {
    // Still validate the variate so callers see the same contract everywhere.
    LaplaceInverseCdf(u, 0.0);
    return x;
  }
  return x + LaplaceInverseCdf(u, delta / epsilon);
}

// The noise actually added to an owner's (clipped) features.
struct NoiseVector {
  int owner_id = 0;
  Matrix values;
};

// Copy of the dataset with every cell clipped to its feature bounds.
inline Matrix ClipFeatures(const Matrix& features, std::span<const SensitivityBound> bounds) {
  if (features.cols() != bounds.size() && features.rows() > 0) {
    throw InvalidArgument("feature matrix has " + std::to_string(features.cols()) +
                          " columns but " + std::to_string(bounds.size()) + " bounds given");
  }
  Matrix out = features;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = bounds[c].Clip(out(r, c));
  }
  return out;
}

// Clips and perturbs a row vector, drawing one variate per cell in order.
inline std::vector<double> PerturbRow(std::span<const double> row, const PrivacyBudget& budget,
                                      std::span<const SensitivityBound> bounds,
                                      VariateStream& variates) {
  if (row.size() != budget.size() || row.size() != bounds.size()) {
    throw InvalidArgument("row, budget and bounds disagree on the feature count");
  }
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) {
    out[j] = PerturbValue(bounds[j].Clip(row[j]), bounds[j].delta(), budget.feature(j),
                          variates.Next());
  }
  return out;
}

struct PerturbedMatrix {
  Matrix clipped;
  Matrix noisy;
  Matrix noise;
};

// Mechanism core without budget accounting: clip each cell, then add
// Laplace(delta_j / epsilons[j]). Cells are visited in row-major order and
// each consumes exactly one variate, whether or not noise is applied, so the
// stream position of any cell is fixed by its coordinates.
inline PerturbedMatrix PerturbFeatures(const Matrix& features, std::span<const double> epsilons,
                                       std::span<const SensitivityBound> bounds,
                                       std::uint64_t rng_seed) {
  const std::size_t m = epsilons.size();
  if (bounds.size() != m) {
    throw InvalidArgument("bounds cover " + std::to_string(bounds.size()) + " features, budget " +
                          std::to_string(m));
  }
  if (features.rows() > 0 && features.cols() != m) {
    throw InvalidArgument("feature matrix has " + std::to_string(features.cols()) +
                          " columns, budget covers " + std::to_string(m));
  }
  VariateStream variates(rng_seed);
  PerturbedMatrix out{ClipFeatures(features, bounds), Matrix(features.rows(), m),
                      Matrix(features.rows(), m)};
  for (std::size_t r = 0; r < out.clipped.rows(); ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      // Same arithmetic as PerturbValue(clipped, ...), keeping the draw itself.
      const double draw = PerturbValue(0.0, bounds[c].delta(), epsilons[c], variates.Next());
      out.noise(r, c) = draw;
      out.noisy(r, c) = out.clipped(r, c) + draw;
    }
  }
  return out;
}

struct PerturbedDataset {
  NoisyDataset noisy;
  NoiseVector noise;
};

// Owner-side perturbation under a validated budget. Labels pass through
// untouched.
inline PerturbedDataset PerturbDataset(const OwnerDataset& data, const PrivacyBudget& budget,
                                       std::span<const SensitivityBound> bounds,
                                       std::uint64_t rng_seed) {
  const std::size_t m = data.schema ? data.schema->feature_count() : data.features.cols();
  if (budget.size() != m) {
    throw InvalidArgument("budget covers " + std::to_string(budget.size()) + " features, data has " +
                          std::to_string(m));
  }
  auto perturbed = PerturbFeatures(data.features, budget.per_feature(), bounds, rng_seed);
  PerturbedDataset out;
  out.noisy.row_keys = OwnerRowKeys(data.owner_id, data.rows());
  out.noisy.features = std::move(perturbed.noisy);
  out.noisy.labels = data.labels;
  out.noisy.schema = data.schema;
  out.noisy.budget = budget;
  out.noise = NoiseVector{data.owner_id, std::move(perturbed.noise)};
  return out;
}

// Probability that k-ary randomized response reports the true category.
inline double KeepProbability(double epsilon, std::size_t k) {
  if (k < 2) throw InvalidArgument("randomized response needs at least 2 categories");
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (IsInfiniteEpsilon(epsilon)) return 1.0;
  // e^eps / (e^eps + k - 1), written to stay finite for large epsilon.
  return 1.0 / (1.0 + static_cast<double>(k - 1) * std::exp(-epsilon));
}

// k-ary randomized response on a category index in [0, k). A single variate
// decides both whether to keep the label and, if not, which other label to
// report.
inline std::size_t RandomizedResponse(std::size_t label, std::size_t k, double epsilon, double u) {
  const double keep = KeepProbability(epsilon, k);
  if (label >= k) throw InvalidArgument("label index out of range");
  if (!(u > 0.0 && u < 1.0)) throw InvalidArgument("uniform variate must lie in (0, 1)");
  if (u < keep) return label;
  const double rest = (u - keep) / (1.0 - keep);
  auto other = static_cast<std::size_t>(rest * static_cast<double>(k - 1));
  if (other >= k - 1) other = k - 2;
  return other < label ? other : other + 1;
}

inline std::string RandomizedResponse(const std::string& label, const Schema& schema,
                                      double epsilon, double u) {
  const std::size_t k = schema.class_labels().size();
  const std::size_t out = RandomizedResponse(schema.LabelIndex(label), k, epsilon, u);
  return *std::next(schema.class_labels().begin(), static_cast<std::ptrdiff_t>(out));
}

}  // namespace ppod
