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

// Epsilon sweeps over repeated simulated trials, and the report they produce.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include "ppod/classifier.hpp"
#include "ppod/data_model.hpp"
#include "ppod/dp_core.hpp"
#include "ppod/errors.hpp"
#include "ppod/protocol_sim.hpp"

namespace ppod {

// Deals rows to n owners round-robin: row i goes to owner (i mod n) + 1.
inline std::vector<OwnerDataset> AssignOwners(const OwnerDataset& all, std::size_t n) {
  if (n == 0) throw InvalidArgument("need at least one owner");
  const std::size_t m = all.schema->feature_count();
  std::vector<Matrix> features(n, Matrix(0, m));
  std::vector<std::vector<std::string>> labels(n);
  for (std::size_t i = 0; i < all.rows(); ++i) {
    features[i % n].AppendRow(all.features.row(i));
    labels[i % n].push_back(all.labels[i]);
  }
  std::vector<OwnerDataset> owners;
  for (std::size_t k = 0; k < n; ++k) {
    owners.push_back(OwnerDataset::Create(static_cast<int>(k) + 1, std::move(features[k]),
                                          std::move(labels[k]), all.schema));
  }
  return owners;
}

struct TrainTestSplit {
  OwnerDataset train;
  OwnerDataset test;
};

// Row-level split stratified by class. Within each class the rows are
// shuffled (Fisher-Yates) and round(fraction * count) go to training, kept
// between 1 and count - 1 whenever the class has two or more rows. Both
// halves keep the original row order.
inline TrainTestSplit SplitOwnerRows(const OwnerDataset& data, double fraction,
                                     std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidArgument("split fraction must be in (0, 1)");
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < data.rows(); ++i) by_class[data.labels[i]].push_back(i);

  VariateStream variates(seed);
  std::vector<bool> in_train(data.rows(), false);
  for (auto& [label, rows] : by_class) {
    for (std::size_t i = rows.size(); i > 1; --i) {
      std::swap(rows[i - 1], rows[variates.NextBelow(i)]);
    }
    auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rows.size())));
    if (rows.size() >= 2) take = std::clamp<std::size_t>(take, 1, rows.size() - 1);
    else take = rows.size();
    for (std::size_t k = 0; k < take; ++k) in_train[rows[k]] = true;
  }

  const std::size_t m = data.schema->feature_count();
  Matrix train_x(0, m), test_x(0, m);
  std::vector<std::string> train_y, test_y;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    if (in_train[i]) {
      train_x.AppendRow(data.features.row(i));
      train_y.push_back(data.labels[i]);
    } else {
      test_x.AppendRow(data.features.row(i));
      test_y.push_back(data.labels[i]);
    }
  }
  return TrainTestSplit{
      OwnerDataset::Create(data.owner_id, std::move(train_x), std::move(train_y), data.schema),
      OwnerDataset::Create(data.owner_id, std::move(test_x), std::move(test_y), data.schema)};
}

// A scenario built from one dataset, plus the held-out queries and their
// true labels in request-id order.
struct PreparedScenario {
  ScenarioConfig config;
  std::vector<Query> queries;
  std::vector<std::string> truth;
};

inline PreparedScenario PrepareScenario(const OwnerDataset& all, std::size_t owners,
                                        std::size_t fog_nodes, double epsilon, double split,
                                        std::uint64_t seed) {
  PreparedScenario out;
  out.config.schema = all.schema;
  out.config.fog_count = fog_nodes;
  out.config.epsilon_total = epsilon;
  out.config.seed = seed;
  out.config.split_fraction = split;
  for (const auto& owner : AssignOwners(all, owners)) {
    auto halves = SplitOwnerRows(
        owner, split, DeriveSeed(seed, static_cast<std::uint64_t>(owner.owner_id), 0));
    for (std::size_t i = 0; i < halves.test.rows(); ++i) {
      const auto row = halves.test.features.row(i);
      out.queries.push_back(Query{owner.owner_id, std::vector<double>(row.begin(), row.end())});
      out.truth.push_back(halves.test.labels[i]);
    }
    out.config.owners.push_back(std::move(halves.train));
  }
  return out;
}

struct SweepConfig {
  std::string dataset_path;
  std::vector<double> epsilons;
  std::size_t trials = 1;
  std::uint64_t base_seed = 0;
  std::size_t owners = 3;
  std::size_t fog_nodes = 2;
  double split = 0.7;
  LabelMode label_mode = LabelMode::kOff;
  LinkModel owner_fog{0.005, 12.5e6};
  LinkModel fog_cloud{0.040, 125.0e6};
  std::string out_path = "tradeoff.csv";
  std::optional<std::string> log_path;
  bool verbose_log = false;
  std::size_t threads = 1;

  void Validate() const {
    if (epsilons.empty()) throw ConfigError("at least one epsilon is required");
    for (double e : epsilons) {
      if (!(e > 0.0)) throw ConfigError("epsilons must be positive or inf");
    }
    if (trials == 0) throw ConfigError("trials must be at least 1");
    if (owners == 0) throw ConfigError("owners must be at least 1");
    if (fog_nodes == 0) throw ConfigError("fog nodes must be at least 1");
    if (!(split > 0.0 && split < 1.0)) throw ConfigError("split must lie in (0, 1)");
  }
};

struct TradeoffRow {
  double epsilon = 0.0;
  std::size_t epsilon_index = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  std::uint64_t bytes_owner_to_fog = 0;
  std::uint64_t bytes_fog_to_cloud = 0;
  double sim_time_s = 0.0;

  friend bool operator==(const TradeoffRow&, const TradeoffRow&) = default;
};

struct AbortedRow {
  double epsilon = 0.0;
  std::size_t trial = 0;
  std::string reason;

  friend bool operator==(const AbortedRow&, const AbortedRow&) = default;
};

struct TradeoffReport {
  std::vector<TradeoffRow> rows;
  std::vector<AbortedRow> aborted;
  std::string event_log;  // JSON Lines for every trial, when requested

  friend bool operator==(const TradeoffReport&, const TradeoffReport&) = default;
};

// base_seed XOR a stable hash of (epsilon index, trial).
inline std::uint64_t TrialSeed(std::uint64_t base_seed, std::size_t epsilon_index,
                               std::size_t trial) {
  return base_seed ^ DeriveSeed(0x50504F44ULL, epsilon_index, trial);
}

inline std::string FormatReal(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

namespace harness_detail {

struct TrialOutcome {
  std::optional<TradeoffRow> row;
  std::optional<AbortedRow> aborted;
  std::string log;
};

inline TrialOutcome RunTrial(const SweepConfig& sweep, const OwnerDataset& all,
                             std::size_t epsilon_index, std::size_t trial) {
  TrialOutcome outcome;
  const double epsilon = sweep.epsilons[epsilon_index];
  const std::uint64_t seed = TrialSeed(sweep.base_seed, epsilon_index, trial);
  try {
    auto scenario = PrepareScenario(all, sweep.owners, sweep.fog_nodes, epsilon, sweep.split, seed);
    scenario.config.label_mode = sweep.label_mode;
    scenario.config.owner_fog = sweep.owner_fog;
    scenario.config.fog_cloud = sweep.fog_cloud;
    if (scenario.queries.empty()) throw ConfigError("split left no held-out rows to classify");

    const auto sim = Simulate(scenario.config, scenario.queries);
    std::vector<std::string> predicted;
    for (const auto& r : sim.results) predicted.push_back(r.predicted_label);

    TradeoffRow row;
    row.epsilon = epsilon;
    row.epsilon_index = epsilon_index;
    row.trial = trial;
    row.seed = seed;
    row.accuracy = Accuracy(predicted, scenario.truth);
    row.bytes_owner_to_fog = sim.stats.bytes_owner_to_fog;
    row.bytes_fog_to_cloud = sim.stats.bytes_fog_to_cloud;
    row.sim_time_s = sim.stats.makespan_s;
    outcome.row = row;

    if (sweep.log_path) {
      std::ostringstream text;
      nlohmann::ordered_json context;
      context["epsilon"] = FormatReal(epsilon);
      context["trial"] = trial;
      ExportEventLog(sim.log, text, sweep.verbose_log, context);
      outcome.log = text.str();
    }
  } catch (const std::exception& e) {
    outcome.aborted = AbortedRow{epsilon, trial, e.what()};
  }
  return outcome;
}

inline bool RowOrder(double ea, std::size_t ia, std::size_t ta, double eb, std::size_t ib,
                     std::size_t tb) {
  return std::tie(ea, ia, ta) < std::tie(eb, ib, tb);
}

}  // namespace harness_detail

// Runs every (epsilon, trial) pair on an in-memory dataset. Trials are
// independent and may run on several threads; the report is assembled in
// (epsilon, trial) order afterwards, so it does not depend on scheduling.
inline TradeoffReport RunSweep(const SweepConfig& sweep, const OwnerDataset& all) {
  sweep.Validate();
  const std::size_t units = sweep.epsilons.size() * sweep.trials;
  std::vector<harness_detail::TrialOutcome> outcomes(units);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t u = next++; u < units; u = next++) {
      outcomes[u] = harness_detail::RunTrial(sweep, all, u / sweep.trials, u % sweep.trials);
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(sweep.threads, 1, units);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<std::size_t> order(units);
  for (std::size_t u = 0; u < units; ++u) order[u] = u;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const std::size_t ia = a / sweep.trials, ib = b / sweep.trials;
    return harness_detail::RowOrder(sweep.epsilons[ia], ia, a % sweep.trials, sweep.epsilons[ib],
                                    ib, b % sweep.trials);
  });

  TradeoffReport report;
  for (std::size_t u : order) {
    auto& o = outcomes[u];
    if (o.row) report.rows.push_back(*o.row);
    if (o.aborted) report.aborted.push_back(std::move(*o.aborted));
    report.event_log += o.log;
  }
  return report;
}

inline TradeoffReport RunSweep(const SweepConfig& sweep) {
  sweep.Validate();
  const SchemaPtr schema = InferSchema(sweep.dataset_path);
  return RunSweep(sweep, LoadCsv(sweep.dataset_path, schema));
}

inline constexpr const char* kReportHeader =
    "epsilon,trial,seed,accuracy,bytes_owner_to_fog,bytes_fog_to_cloud,sim_time_s";

inline std::string FormatReport(const TradeoffReport& report) {
  std::string out = std::string(kReportHeader) + "\n";
  for (const auto& row : report.rows) {
    out += FormatReal(row.epsilon) + "," + std::to_string(row.trial) + "," +
           std::to_string(row.seed) + "," + FormatReal(row.accuracy) + "," +
           std::to_string(row.bytes_owner_to_fog) + "," + std::to_string(row.bytes_fog_to_cloud) +
           "," + FormatReal(row.sim_time_s) + "\n";
  }
  return out;
}

inline void WriteTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path);
}

inline void EmitReport(const TradeoffReport& report, const std::string& path) {
  if (report.rows.empty()) throw InvalidArgument("refusing to write an empty report");
  WriteTextFile(path, FormatReport(report));
}

// Mean accuracy per epsilon, keyed by epsilon index.
inline std::map<std::size_t, double> MeanAccuracyByEpsilon(const TradeoffReport& report) {
  std::map<std::size_t, std::pair<double, std::size_t>> acc;
  for (const auto& row : report.rows) {
    auto& [sum, count] = acc[row.epsilon_index];
    sum += row.accuracy;
    ++count;
  }
  std::map<std::size_t, double> out;
  for (const auto& [idx, sc] : acc) out[idx] = sc.first / static_cast<double>(sc.second);
  return out;
}

}  // namespace ppod
