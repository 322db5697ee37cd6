// Copyright 2026 The trdfew Authors.
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

#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "trd/backend.h"
#include "trd/experiment.h"
#include "trd/task.h"

namespace trd {

// Everything `trd run` needs. Values come from, in increasing priority:
// built-in defaults, the TRD_BACKEND environment variable (backend only),
// the config file, and command-line flags.
struct RunConfig {
  std::string task;
  std::filesystem::path train;
  std::filesystem::path test;
  DatasetSchema schema;
  ExperimentConfig experiment;
  // Non-empty: run one experiment per K and write a curve file.
  std::vector<std::size_t> k_sweep;
  std::string backend = "toy";
  std::chrono::milliseconds backend_timeout{std::chrono::minutes(60)};
  bool file_handoff = false;
  ToyBackendOptions toy;
  std::filesystem::path report = "report.json";
  // Empty: the report path with a .csv extension.
  std::filesystem::path curve;

  // Throws UsageError naming the first missing or inconsistent field.
  void validate() const;
  std::filesystem::path curve_path() const;
};

// Defaults plus TRD_BACKEND when set.
RunConfig default_run_config();

// Sets one "section.key" field from its text form. Relative paths are
// resolved against `base_dir` when it is non-empty. Throws UsageError
// naming the field on unknown keys or malformed values.
void set_run_field(RunConfig& cfg, std::string_view key, std::string_view value,
                   const std::filesystem::path& base_dir = {});

// Reads an INI file with sections [task], [data], [experiment],
// [backend], [toy] and [output] on top of `cfg`.
void apply_run_config_file(RunConfig& cfg, const std::filesystem::path& path);

// Every accepted "section.key".
const std::vector<std::string>& run_config_keys();

}  // namespace trd
