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
#include <functional>
#include <string>
#include <vector>

#include "trd/backend.h"
#include "trd/error.h"
#include "trd/metrics.h"
#include "trd/task.h"

namespace trd {

struct Grid {
  std::vector<double> learning_rates = {1e-5, 2e-5, 3e-5, 4e-5, 5e-5};
  std::vector<std::size_t> batch_sizes = {4, 8};

  std::size_t size() const {
    return learning_rates.size() * batch_sizes.size();
  }
  // Throws UsageError on empty lists or non-positive values.
  void validate() const;
};

struct ExperimentConfig {
  std::size_t k = 16;
  std::vector<std::uint64_t> seeds = default_seeds();
  Grid grid;
  std::size_t epochs = 20;
  double weight_decay = 2e-3;
  double adam_epsilon = 1e-8;
  std::size_t max_length = 256;
  LossScope loss_scope = LossScope::kFullSequence;
  // Backend jobs in flight at once.
  std::size_t concurrency = 1;

  void validate() const;
};

// One backend job: a seed's split trained at one grid point.
struct GridPointRun {
  std::uint64_t seed = 0;
  double learning_rate = 0.0;
  std::size_t batch_size = 0;
  MetricResult dev;
  MetricResult test;
  // Regression records whose pole probabilities were both zero.
  std::size_t degenerate_decodes = 0;
};

struct SeedResult {
  std::uint64_t seed = 0;
  double learning_rate = 0.0;
  std::size_t batch_size = 0;
  double dev_score = 0.0;
  double test_score = 0.0;
};

struct ExperimentReport {
  std::string task;
  std::string metric;
  std::string backend;
  std::size_t k = 0;
  ExperimentConfig config;
  std::vector<SeedResult> seeds;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t jobs = 0;
  // Every completed job, ordered by seed then grid point.
  std::vector<GridPointRun> log;
};

class ExperimentError : public Error {
 public:
  ExperimentError(const std::string& what, ExperimentReport partial)
      : Error(what), partial_(std::move(partial)) {}
  const ExperimentReport& partial() const noexcept { return partial_; }

 private:
  ExperimentReport partial_;
};

// Renders one example into a wire record. Sentences are shortened, last
// word first from whichever is longer, until the prompt fits in
// max_length word-level tokens including [CLS] and [SEP].
PromptRecord make_prompt_record(const TaskSpec& task, const Template& tmpl,
                                const DatasetExample& ex, std::string id,
                                bool with_targets, std::size_t max_length);

// Maps backend probabilities for one record to a prediction.
Prediction decode_record(const TaskSpec& task, const std::vector<double>& p);

// Scores predictions against golds with the task's metric.
MetricResult score_predictions(const TaskSpec& task,
                               const std::vector<Prediction>& preds,
                               const std::vector<DatasetExample>& golds);

using ProgressFn = std::function<void(const GridPointRun&)>;

// For each seed: sample K per class for train and dev from `pool`, run one
// job per grid point, keep the point with the best dev score (ties: lower
// learning rate, then smaller batch) and report its test score. Jobs run
// on up to config.concurrency threads; the result does not depend on
// completion order. A failing job stops dispatch and raises
// ExperimentError carrying every finished run.
ExperimentReport run_experiment(const TaskSpec& task,
                                const std::vector<DatasetExample>& pool,
                                const std::vector<DatasetExample>& test,
                                const ExperimentConfig& config,
                                Backend& backend,
                                const ProgressFn& progress = {});

struct DatasetPaths {
  std::filesystem::path train;
  std::filesystem::path test;
  DatasetSchema schema;
};

ExperimentReport run_experiment(const TaskSpec& task, const DatasetPaths& data,
                                const ExperimentConfig& config,
                                Backend& backend,
                                const ProgressFn& progress = {});

// One report per K; ks must be strictly ascending.
std::vector<ExperimentReport> k_sweep(const TaskSpec& task,
                                      const std::vector<DatasetExample>& pool,
                                      const std::vector<DatasetExample>& test,
                                      const std::vector<std::size_t>& ks,
                                      const ExperimentConfig& config,
                                      Backend& backend,
                                      const ProgressFn& progress = {});

std::vector<ExperimentReport> k_sweep(const TaskSpec& task,
                                      const DatasetPaths& data,
                                      const std::vector<std::size_t>& ks,
                                      const ExperimentConfig& config,
                                      Backend& backend,
                                      const ProgressFn& progress = {});

// "91.7 (0.8)": mean and standard deviation in percent.
std::string format_summary(double mean, double stddev);

std::string report_to_json(const ExperimentReport& report);
// A JSON array of reports, one per K.
std::string sweep_to_json(const std::vector<ExperimentReport>& reports);
// Header "k,mean,std", one row per report.
std::string curve_csv(const std::vector<ExperimentReport>& reports);

}  // namespace trd
