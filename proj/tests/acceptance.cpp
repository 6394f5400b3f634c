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
// Acceptance suite: one PASS/FAIL line per criterion, each with its own
// runtime limit. Exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles/iris_reference.hpp"
#include "ppod/ppod.hpp"
#include "test_support.hpp"

#ifndef PPOD_CLI_PATH
#define PPOD_CLI_PATH "ppod"
#endif

namespace ppod {
namespace {

struct Verdict {
  bool ok = false;
  std::string detail;
};

std::string Fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, value);
  return buf;
}

// 1. Inverse-CDF Laplace(b = 1) samples against the analytic CDF.
Verdict MechanismCorrectness() {
  constexpr std::size_t kSamples = 100000;
  VariateStream variates(20261016);
  std::vector<double> x(kSamples);
  for (auto& v : x) v = LaplaceInverseCdf(variates.Next(), 1.0);

  double sum = 0.0;
  for (double v : x) sum += v;
  const double mean = sum / kSamples;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double var = ss / (kSamples - 1);

  std::sort(x.begin(), x.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < kSamples; ++i) {
    const double f = LaplaceCdf(x[i], 1.0);
    ks = std::max({ks, f - static_cast<double>(i) / kSamples,
                   static_cast<double>(i + 1) / kSamples - f});
  }
  const bool ok = ks < 0.01 && std::fabs(mean) < 0.01 && std::fabs(var - 2.0) <= 0.05 * 2.0;
  return {ok, "KS=" + Fmt("%.5f", ks) + " mean=" + Fmt("%.5f", mean) + " var=" + Fmt("%.4f", var)};
}

// 2. Binned output ratio for neighbouring inputs 0 and 1 (delta 1, epsilon 1).
Verdict EpsilonRatio() {
  constexpr std::size_t kDraws = 1000000;
  constexpr double kLo = -8.0, kHi = 9.0, kWidth = 0.5;
  const auto bins = static_cast<std::size_t>((kHi - kLo) / kWidth);
  auto histogram = [&](double input, std::uint64_t seed) {
    std::vector<std::size_t> h(bins, 0);
    VariateStream variates(seed);
    for (std::size_t i = 0; i < kDraws; ++i) {
      const double y = PerturbValue(input, 1.0, 1.0, variates.Next());
      if (y < kLo || y >= kHi) continue;
      ++h[static_cast<std::size_t>((y - kLo) / kWidth)];
    }
    return h;
  };
  const auto h0 = histogram(0.0, 11), h1 = histogram(1.0, 12);
  double worst = 0.0;
  std::size_t compared = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (h0[b] < 100 || h1[b] < 100) continue;
    ++compared;
    const double r = static_cast<double>(h0[b]) / static_cast<double>(h1[b]);
    worst = std::max({worst, r, 1.0 / r});
  }
  const double limit = std::exp(1.0) * 1.15;
  return {compared > 0 && worst <= limit,
          "max ratio=" + Fmt("%.4f", worst) + " limit=" + Fmt("%.4f", limit) + " bins=" +
              std::to_string(compared)};
}

// 3. Reassemble(VerticalPartition(d, s)) == d for random shapes.
Verdict PartitionRoundTrip() {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::size_t> r_dist(1, 50), m_dist(1, 12), s_dist(1, 12);
  std::uniform_real_distribution<double> value(-1e3, 1e3);
  std::size_t failures = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t r = r_dist(gen), m = m_dist(gen), s = s_dist(gen);
    const auto schema = testing::MakeSchema(m, 3, -1e3, 1e3);
    NoisyDataset d;
    d.schema = schema;
    d.row_keys = OwnerRowKeys(1 + t % 4, r);
    d.features = Matrix(r, m);
    for (auto& v : d.features.values()) v = value(gen);
    for (std::size_t i = 0; i < r; ++i) d.labels.push_back("c" + std::to_string(gen() % 3));
    const NoisyDataset back = Reassemble(VerticalPartition(d, s), schema);
    const bool same = back.row_keys == d.row_keys && back.labels == d.labels &&
                      back.features.rows() == r && back.features.cols() == m &&
                      std::memcmp(back.features.values().data(), d.features.values().data(),
                                  r * m * sizeof(double)) == 0;
    failures += same ? 0 : 1;
  }
  return {failures == 0, std::to_string(100 - failures) + "/100 exact"};
}

// 4. Noise-free simulation equals fit/predict on the same clipped split.
Verdict PipelineEquivalence() {
  const auto iris = testing::LoadIris();
  const auto p = PrepareScenario(iris, 3, 2, kInfiniteEpsilon, 0.7, 42);
  const auto sim = Simulate(p.config, p.queries);
  const auto oracle = testing::DirectPipeline(p.config, p.queries);
  std::size_t mismatches = sim.results.size() == oracle.size() ? 0 : oracle.size();
  for (std::size_t i = 0; i < std::min(sim.results.size(), oracle.size()); ++i) {
    mismatches += sim.results[i] == oracle[i] ? 0 : 1;
  }
  return {mismatches == 0, std::to_string(oracle.size() - mismatches) + "/" +
                               std::to_string(oracle.size()) + " results bit-identical"};
}

// 5. Noise-free Gaussian NB on the Iris 70/30 split against the frozen
// reference predictions.
Verdict BaselineUtility() {
  const auto iris = testing::LoadIris();
  const auto p = PrepareScenario(iris, 3, 2, kInfiniteEpsilon, 0.7, 42);
  std::vector<std::string> predicted;
  for (const auto& r : testing::DirectPipeline(p.config, p.queries)) {
    predicted.push_back(r.predicted_label);
  }
  const double acc = Accuracy(predicted, p.truth);
  const bool agrees = predicted == testing::SklearnIrisPredictions();
  return {acc >= 0.90 && agrees, "accuracy=" + Fmt("%.4f", acc) +
                                     (agrees ? " matches reference" : " differs from reference")};
}

// 6. Mean accuracy nondecreasing in epsilon, one inversion <= 0.02 allowed.
Verdict Monotonicity() {
  const auto iris = testing::LoadIris();
  SweepConfig sweep;
  sweep.epsilons = {0.1, 1.0, 10.0, kInfiniteEpsilon};
  sweep.trials = 30;
  sweep.base_seed = 42;
  sweep.owners = 3;
  sweep.fog_nodes = 2;
  sweep.threads = std::max(1u, std::thread::hardware_concurrency());
  const auto report = RunSweep(sweep, iris);
  const auto means = MeanAccuracyByEpsilon(report);
  std::size_t inversions = 0;
  bool small = true;
  std::string detail;
  for (std::size_t i = 0; i < sweep.epsilons.size(); ++i) {
    detail += (i ? " " : "") + FormatReal(sweep.epsilons[i]) + ":" + Fmt("%.4f", means.at(i));
    if (i > 0 && means.at(i) < means.at(i - 1)) {
      ++inversions;
      small = small && means.at(i - 1) - means.at(i) <= 0.02;
    }
  }
  const bool ok = report.aborted.empty() && means.size() == 4 && inversions <= 1 && small;
  return {ok, detail + " inversions=" + std::to_string(inversions)};
}

// 7. Fog exposure and topology across random scenarios.
Verdict ExposureAuditCriterion() {
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<std::size_t> n_dist(1, 5), m_dist(1, 12), s_dist(1, 8),
      r_dist(2, 20);
  std::uniform_real_distribution<double> eps_dist(0.05, 10.0);
  std::size_t bad = 0, cells = 0;
  for (int t = 0; t < 50; ++t) {
    ScenarioConfig config;
    const std::size_t n = n_dist(gen), m = m_dist(gen);
    config.schema = testing::MakeSchema(m, 3);
    config.fog_count = s_dist(gen);
    config.epsilon_total = eps_dist(gen);
    config.seed = gen();
    for (std::size_t i = 1; i <= n; ++i) {
      config.owners.push_back(
          testing::RandomOwner(static_cast<int>(i), r_dist(gen) + 3, config.schema, gen()));
    }
    std::vector<Query> queries;
    for (const auto& o : config.owners) {
      const auto row = o.features.row(0);
      queries.push_back(Query{o.owner_id, std::vector<double>(row.begin(), row.end())});
    }
    const auto sim = Simulate(config, queries);
    const auto audit = AuditFogExposure(sim.log, config);
    cells += audit.cells_checked;
    if (!audit.within_bound() || audit.pre_noise_matches != 0 || audit.owner_cloud_messages != 0 ||
        audit.cells_checked == 0) {
      ++bad;
    }
  }
  return {bad == 0, std::to_string(50 - bad) + "/50 scenarios clean, " + std::to_string(cells) +
                        " uploaded cells checked"};
}

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 8. Two CLI sweeps with identical flags write identical files.
Verdict Determinism() {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("ppod_acceptance_" + std::to_string(std::random_device{}()));
  std::filesystem::create_directories(dir);
  std::string outputs[2][2];
  int codes[2];
  for (int run = 0; run < 2; ++run) {
    const auto csv = dir / ("report" + std::to_string(run) + ".csv");
    const auto log = dir / ("events" + std::to_string(run) + ".jsonl");
    const std::string cmd = std::string("\"") + PPOD_CLI_PATH + "\" --dataset \"" +
                            testing::IrisPath() +
                            "\" --epsilon 0.1,1,inf --trials 30 --fog-nodes 2 --seed 7 --out \"" +
                            csv.string() + "\" --log \"" + log.string() + "\" > /dev/null";
    codes[run] = std::system(cmd.c_str());
    outputs[run][0] = Slurp(csv);
    outputs[run][1] = Slurp(log);
  }
  std::filesystem::remove_all(dir);
  const bool ok = codes[0] == 0 && codes[1] == 0 && !outputs[0][0].empty() &&
                  !outputs[0][1].empty() && outputs[0][0] == outputs[1][0] &&
                  outputs[0][1] == outputs[1][1];
  return {ok, "csv " + std::to_string(outputs[0][0].size()) + " B, log " +
                  std::to_string(outputs[0][1].size()) + " B, identical=" +
                  (outputs[0][0] == outputs[1][0] && outputs[0][1] == outputs[1][1] ? "yes" : "no")};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Verdict()> run;
};

}  // namespace
}  // namespace ppod

int main() {
  using ppod::Criterion;
  const std::vector<Criterion> criteria = {
      {1, "mechanism correctness", 5.0, ppod::MechanismCorrectness},
      {2, "epsilon ratio", 30.0, ppod::EpsilonRatio},
      {3, "partition round trip", 1.0, ppod::PartitionRoundTrip},
      {4, "pipeline equivalence", 2.0, ppod::PipelineEquivalence},
      {5, "baseline utility", 1.0, ppod::BaselineUtility},
      {6, "privacy-utility monotonicity", 60.0, ppod::Monotonicity},
      {7, "exposure audit", 30.0, ppod::ExposureAuditCriterion},
      {8, "determinism", 60.0, ppod::Determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    ppod::Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = v.ok && in_time;
    failed += pass ? 0 : 1;
    std::printf("criterion %d %s: %s (%s; %.2f s, limit %.0f s%s)\n", c.id, c.name,
                pass ? "PASS" : "FAIL", v.detail.c_str(), secs, c.limit_s,
                in_time ? "" : ", too slow");
    std::fflush(stdout);
  }
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
