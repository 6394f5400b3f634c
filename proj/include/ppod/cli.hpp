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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "ppod/data_model.hpp"
#include "ppod/eval_harness.hpp"

namespace ppod {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntimeError = 1;
inline constexpr int kExitUsage = 2;

struct CliOutcome {
  std::optional<SweepConfig> config;  // set when the sweep should run
  int exit_code = kExitOk;
  std::string message;                // usage text or error, for the caller to print
};

// "0.1,1,inf" -> {0.1, 1, inf}. Throws InvalidArgument on anything that is
// not a positive number or inf.
inline std::vector<double> ParseEpsilonList(std::string_view text) {
  std::vector<double> out;
  for (const auto& item : csv_detail::SplitLine(text)) {
    if (item == "inf" || item == "INF" || item == "infinity" || item == "Infinity") {
      out.push_back(kInfiniteEpsilon);
      continue;
    }
    const auto value = csv_detail::ParseReal(item);
    if (!value || !(*value > 0.0)) {
      throw InvalidArgument("epsilon '" + item + "' must be a positive number or inf");
    }
    out.push_back(*value);
  }
  if (out.empty()) throw InvalidArgument("epsilon list is empty");
  return out;
}

inline CliOutcome ParseCli(int argc, const char* const* argv) {
  CLI::App app{"Privacy-preserving outsourced classification: epsilon sweep", "ppod"};
  app.option_defaults()->always_capture_default();

  SweepConfig config;
  std::string epsilons = "1";
  std::string perturb_labels = "off";
  std::int64_t seed = 0;
  std::string log_path;

  app.add_option("--dataset", config.dataset_path, "CSV file: feature columns then 'label'")
      ->required();
  app.add_option("--owners", config.owners, "number of data owners")
      ->check(CLI::PositiveNumber);
  app.add_option("--fog-nodes", config.fog_nodes, "number of fog nodes")
      ->check(CLI::PositiveNumber);
  app.add_option("--epsilon", epsilons, "comma-separated epsilons; 'inf' means no noise");
  app.add_option("--trials", config.trials, "trials per epsilon")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "base seed");
  app.add_option("--split", config.split, "training fraction, in (0, 1)");
  app.add_option("--out", config.out_path, "report CSV path");
  app.add_option("--log", log_path, "write the event log (JSON Lines) here");
  app.add_option("--perturb-labels", perturb_labels, "label protection")
      ->check(CLI::IsMember({"off", "rr"}));
  app.add_flag("--verbose-log", config.verbose_log, "include payloads in the event log");
  app.add_option("--threads", config.threads, "worker threads for trials")
      ->check(CLI::PositiveNumber);

  CliOutcome outcome;
  if (argc <= 1) {
    outcome.exit_code = kExitUsage;
    outcome.message = app.help();
    return outcome;
  }
  try {
    app.parse(argc, argv);
    config.epsilons = ParseEpsilonList(epsilons);
    if (!(config.split > 0.0 && config.split < 1.0)) {
      throw InvalidArgument("--split must lie strictly between 0 and 1");
    }
  } catch (const CLI::CallForHelp&) {
    outcome.exit_code = kExitOk;
    outcome.message = app.help();
    return outcome;
  } catch (const CLI::ParseError& e) {
    outcome.exit_code = kExitUsage;
    outcome.message = std::string(e.what()) + "\n\n" + app.help();
    return outcome;
  } catch (const InvalidArgument& e) {
    outcome.exit_code = kExitUsage;
    outcome.message = std::string(e.what()) + "\n\n" + app.help();
    return outcome;
  }
  config.base_seed = static_cast<std::uint64_t>(seed);
  config.label_mode = perturb_labels == "rr" ? LabelMode::kRandomizedResponse : LabelMode::kOff;
  if (!log_path.empty()) config.log_path = log_path;
  outcome.config = std::move(config);
  return outcome;
}

}  // namespace ppod
