// Copyright 2026 The canvasbug Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CANVASBUG_TOOLS_CLI_H_
#define CANVASBUG_TOOLS_CLI_H_

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "canvasbug/vlm_client.h"

namespace canvasbug::cli {

enum ExitCode {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kProviderError = 3,
  kPendingAdjudication = 4,
};

// Run-config values given on the command line; unset means "not given".
struct RunFlags {
  std::optional<std::string> provider;
  std::optional<std::string> mock_fixture;
  std::optional<std::string> model;
  std::optional<double> temperature;
  std::optional<int> repetitions;
  std::optional<std::vector<int>> k_values;
  std::optional<std::string> endpoint;
  std::optional<int> max_retries;
  std::optional<double> timeout;
  std::optional<int> parallelism;
  std::optional<int> backoff_ms;
};

struct ResolvedRun {
  RunConfig config;
  std::string provider = "http";  // "http" or "mock"
  std::string mock_fixture;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

// Precedence: flags > config file > environment > defaults. Relative
// `mock_fixture` paths in the config file resolve against `config_dir`.
ResolvedRun ResolveRunConfig(const RunFlags& flags,
                             const std::optional<nlohmann::json>& config_file,
                             const std::string& config_dir,
                             const EnvLookup& env);

int RunCli(const std::vector<std::string>& args, std::istream& in,
           std::ostream& out, std::ostream& err);

}  // namespace canvasbug::cli

#endif  // CANVASBUG_TOOLS_CLI_H_
