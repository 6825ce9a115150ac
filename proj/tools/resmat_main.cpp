// Copyright 2026 The resmat Authors
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

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "resmat/error.hpp"
#include "resmat/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Sequential Monte Carlo experiments over resampling matrices"};
  app.require_subcommand(1);

  std::string matrix_path;
  std::string weights_path;
  auto* validate = app.add_subcommand(
      "validate-matrix", "Check a triplet matrix file against a weight vector");
  validate->add_option("matrix", matrix_path, "matrix triplet file")->required();
  validate->add_option("weights", weights_path, "whitespace-separated weights file")
      ->required();

  std::string config_path;
  int jobs = 1;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
  auto add_config_options = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config file")->required();
    cmd->add_option("--jobs", jobs, "worker thread count")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed_override, "override the config master seed");
    cmd->add_option("--out", out_override, "override the config output path");
  };
  auto* replicate = app.add_subcommand(
      "replicate", "Run replicated experiments and write a CSV report");
  add_config_options(replicate);
  auto* compare = app.add_subcommand(
      "compare-schemes", "Exact per-step variance comparison on a frozen trajectory");
  add_config_options(compare);

  std::string csv_path;
  auto* report = app.add_subcommand("report", "Pretty-print a CSV report");
  report->add_option("csv", csv_path, "report file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (validate->parsed())
      return resmat::cmd_validate_matrix(matrix_path, weights_path, std::cout);
    if (replicate->parsed())
      return resmat::cmd_replicate(config_path, jobs, seed_override, out_override,
                                   std::cout);
    if (compare->parsed())
      return resmat::cmd_compare_schemes(config_path, jobs, seed_override, out_override,
                                         std::cout);
    if (report->parsed()) return resmat::cmd_report(csv_path, std::cout);
  } catch (const resmat::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const resmat::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
