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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "trd/template.h"

namespace trd {

struct Classification {
  std::size_t num_classes = 2;
  friend bool operator==(const Classification&, const Classification&) = default;
};

// Regression over the closed interval [low, high]; the two label words
// stand for the low and the high pole, in that order.
struct Regression {
  double low = 0.0;
  double high = 1.0;
  friend bool operator==(const Regression&, const Regression&) = default;
};

using TaskKind = std::variant<Classification, Regression>;

enum class Metric { kAccuracy, kF1, kMatthews, kPearson };

std::string_view metric_name(Metric m);
Metric parse_metric(std::string_view name);

struct TaskSpec {
  std::string name;
  TaskKind kind;
  std::string template_src;
  std::vector<std::string> label_words;
  Metric metric = Metric::kAccuracy;
  int sentence_count = 1;

  bool is_regression() const {
    return std::holds_alternative<Regression>(kind);
  }
  std::size_t num_labels() const { return label_words.size(); }
  Template parsed_template() const { return Template::parse(template_src); }

  // Throws TaskError when any invariant is broken: label count vs kind,
  // interval ordering, template/sentence-count agreement, distinct and
  // single-word label words.
  void validate() const;
};

// The sixteen built-in tasks, in registry order.
const std::vector<TaskSpec>& builtin_tasks();

// Looks `name` up case-insensitively among the built-ins; otherwise treats
// it as a path to a task file (see load_task_file).
TaskSpec load_task(std::string_view name);

// Task file: INI-style key/value pairs, optionally under a [task] section.
//   name = my-task
//   kind = classification | regression
//   low = 0          (regression only)
//   high = 5         (regression only)
//   template = <S1> It was {LABELS}
//   label_words = great, terrible
//   metric = accuracy | f1 | matthews | pearson
TaskSpec load_task_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Datasets

using Gold = std::variant<std::size_t, double>;

struct DatasetExample {
  std::string id;
  std::string s1;
  std::optional<std::string> s2;
  Gold gold;

  std::size_t gold_class() const { return std::get<std::size_t>(gold); }
  double gold_value() const { return std::get<double>(gold); }
};

enum class DatasetFormat { kAuto, kTsv, kJsonLines };

// Column mapping for tab-separated files; JSON-lines files always use the
// keys "s1", "s2", "label" and optionally "id".
struct DatasetSchema {
  DatasetFormat format = DatasetFormat::kAuto;
  std::size_t s1_column = 0;
  std::optional<std::size_t> s2_column;
  std::size_t label_column = 1;
  bool has_header = false;
  // Prepended to generated ids; defaults to the file stem when empty.
  std::string id_prefix;
};

// Labels may be a class index or, for classification, the label word
// itself. Errors name the offending line.
std::vector<DatasetExample> read_dataset(const std::filesystem::path& path,
                                         const DatasetSchema& schema,
                                         const TaskSpec& task);

struct FewShotSplit {
  std::vector<DatasetExample> train;
  std::vector<DatasetExample> dev;
  std::uint64_t seed = 0;
  std::size_t k_per_class = 0;
};

// Deterministic in (data order, seed). One permutation of the whole pool
// is drawn; classification walks it filling k train then k dev slots per
// class, regression takes the first 2k as train and the next 2k as dev.
FewShotSplit sample_few_shot(const std::vector<DatasetExample>& data,
                             const TaskSpec& task, std::size_t k_per_class,
                             std::uint64_t seed);

inline const std::vector<std::uint64_t>& default_seeds() {
  static const std::vector<std::uint64_t> seeds = {13, 21, 42, 87, 100};
  return seeds;
}

}  // namespace trd
