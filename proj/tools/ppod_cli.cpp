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
#include <exception>
#include <iostream>

#include "ppod/cli.hpp"
#include "ppod/eval_harness.hpp"

int main(int argc, char** argv) {
  const auto cli = ppod::ParseCli(argc, argv);
  if (!cli.config) {
    (cli.exit_code == ppod::kExitOk ? std::cout : std::cerr) << cli.message;
    return cli.exit_code;
  }
  const ppod::SweepConfig& config = *cli.config;
  try {
    const auto report = ppod::RunSweep(config);
    for (const auto& row : report.aborted) {
      std::cerr << "aborted epsilon=" << ppod::FormatReal(row.epsilon) << " trial=" << row.trial
                << ": " << row.reason << "\n";
    }
    if (report.rows.empty()) {
      std::cerr << "every trial aborted; no report written\n";
      return ppod::kExitRuntimeError;
    }
    ppod::EmitReport(report, config.out_path);
    if (config.log_path) ppod::WriteTextFile(*config.log_path, report.event_log);

    for (const auto& [idx, mean] : ppod::MeanAccuracyByEpsilon(report)) {
      std::cout << "epsilon=" << ppod::FormatReal(config.epsilons[idx])
                << " mean_accuracy=" << ppod::FormatReal(mean) << "\n";
    }
    std::cout << "wrote " << report.rows.size() << " rows to " << config.out_path << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ppod::kExitRuntimeError;
  }
  return ppod::kExitOk;
}
