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

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ppod/errors.hpp"

namespace ppod {

// Budget value meaning "no noise at all".
inline constexpr double kInfiniteEpsilon = std::numeric_limits<double>::infinity();

inline bool IsInfiniteEpsilon(double epsilon) { return std::isinf(epsilon) && epsilon > 0; }

// Per-feature allocation of an owner's epsilon under sequential composition.
//
// Construction is the only way to obtain a budget and it validates the
// composition constraint, so an over-spent budget cannot exist.
class PrivacyBudget {
 public:
  static PrivacyBudget Create(double epsilon_total, std::vector<double> per_feature) {
    if (!(epsilon_total > 0)) {
      throw InvalidArgument("epsilon_total must be positive, got " + std::to_string(epsilon_total));
    }
    if (per_feature.empty()) {
      throw InvalidArgument("privacy budget needs at least one feature");
    }
    for (double e : per_feature) {
      if (!(e > 0)) {
        throw InvalidArgument("per-feature epsilon must be positive, got " + std::to_string(e));
      }
    }
    if (IsInfiniteEpsilon(epsilon_total)) {
      for (double e : per_feature) {
        if (!IsInfiniteEpsilon(e)) {
          throw InvalidArgument("an infinite total budget requires every feature to be infinite");
        }
      }
    } else {
      double spent = 0.0;
      for (double e : per_feature) spent += e;
      // Relative slack absorbs the rounding of epsilon_total / m summed m times.
      if (spent > epsilon_total * (1.0 + 1e-12)) {
        throw InvalidArgument("per-feature budgets sum to " + std::to_string(spent) +
                              ", exceeding epsilon_total " + std::to_string(epsilon_total));
      }
    }
    return PrivacyBudget(epsilon_total, std::move(per_feature));
  }

  double epsilon_total() const { return epsilon_total_; }
  std::span<const double> per_feature() const { return per_feature_; }
  double feature(std::size_t j) const { return per_feature_.at(j); }
  std::size_t size() const { return per_feature_.size(); }
  bool is_infinite() const { return IsInfiniteEpsilon(epsilon_total_); }

  friend bool operator==(const PrivacyBudget&, const PrivacyBudget&) = default;

 private:
  PrivacyBudget(double total, std::vector<double> per_feature)
      : epsilon_total_(total), per_feature_(std::move(per_feature)) {}

  double epsilon_total_ = 0.0;
  std::vector<double> per_feature_;
};

// Uniform split of one epsilon over m features.
inline PrivacyBudget SplitBudget(double epsilon_total, std::size_t m) {
  if (m == 0) throw InvalidArgument("cannot split a budget over zero features");
  if (!(epsilon_total > 0)) {
    throw InvalidArgument("epsilon_total must be positive, got " + std::to_string(epsilon_total));
  }
  const double share =
      IsInfiniteEpsilon(epsilon_total) ? kInfiniteEpsilon : epsilon_total / static_cast<double>(m);
  return PrivacyBudget::Create(epsilon_total, std::vector<double>(m, share));
}

// Declared value range of one feature; its width is the Laplace sensitivity.
struct SensitivityBound {
  double lo = 0.0;
  double hi = 0.0;

  static SensitivityBound Create(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
      throw InvalidArgument("invalid feature bounds [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
    }
    return SensitivityBound{lo, hi};
  }

  double delta() const { return hi - lo; }
  double Clip(double x) const { return x < lo ? lo : (x > hi ? hi : x); }

  friend bool operator==(const SensitivityBound&, const SensitivityBound&) = default;
};

}  // namespace ppod
