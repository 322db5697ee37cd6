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

#include "trd/experiment.h"

#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "trd/tokenizer.h"

namespace trd {
namespace {

std::string keep_words(const std::string& s, std::size_t n) {
  const auto tokens = pre_tokenize(s);
  if (n >= tokens.size()) return s;
  if (n == 0) return {};
  return s.substr(0, tokens[n - 1].offsets.end);
}

std::size_t word_count(const std::string& s) { return pre_tokenize(s).size(); }

struct JobSlot {
  std::size_t seed_index = 0;
  std::size_t lr_index = 0;
  std::size_t batch_index = 0;
  BackendJob job;
};

bool better(const GridPointRun& a, const GridPointRun& b) {
  if (a.dev.value != b.dev.value) return a.dev.value > b.dev.value;
  if (a.learning_rate != b.learning_rate)
    return a.learning_rate < b.learning_rate;
  return a.batch_size < b.batch_size;
}

std::vector<DatasetExample> load(const std::filesystem::path& path,
                                 const DatasetSchema& schema,
                                 const TaskSpec& task) {
  return read_dataset(path, schema, task);
}

}  // namespace

void Grid::validate() const {
  if (learning_rates.empty()) throw UsageError("grid: no learning rates");
  if (batch_sizes.empty()) throw UsageError("grid: no batch sizes");
  for (double lr : learning_rates)
    if (!(lr > 0.0)) throw UsageError("grid: learning rates must be positive");
  for (std::size_t b : batch_sizes)
    if (b == 0) throw UsageError("grid: batch sizes must be positive");
}

void ExperimentConfig::validate() const {
  if (k == 0) throw UsageError("k must be positive");
  if (seeds.empty()) throw UsageError("at least one seed is required");
  grid.validate();
  if (epochs == 0) throw UsageError("epochs must be positive");
  if (max_length < 4) throw UsageError("max_length must be at least 4");
  if (concurrency == 0) throw UsageError("concurrency must be positive");
  if (!(weight_decay >= 0.0)) throw UsageError("weight_decay must be >= 0");
  if (!(adam_epsilon > 0.0)) throw UsageError("adam_epsilon must be positive");
}

PromptRecord make_prompt_record(const TaskSpec& task, const Template& tmpl,
                                const DatasetExample& ex, std::string id,
                                bool with_targets, std::size_t max_length) {
  std::string s1 = ex.s1;
  std::optional<std::string> s2 = ex.s2;
  RenderedPrompt rendered;
  for (;;) {
    rendered = render(tmpl, s1, s2, task.label_words);
    const std::size_t n = word_count(rendered.text) + 2;
    if (n <= max_length) break;
    std::size_t n1 = word_count(s1), n2 = s2 ? word_count(*s2) : 0;
    if (n1 + n2 == 0)
      throw DatasetError("example '" + ex.id +
                         "': prompt does not fit in max_length");
    for (std::size_t excess = n - max_length; excess > 0 && n1 + n2 > 0;
         --excess) {
      if (n1 >= n2)
        --n1;
      else
        --n2;
    }
    s1 = keep_words(s1, n1);
    if (s2) s2 = keep_words(*s2, n2);
  }

  PromptRecord r;
  r.id = std::move(id);
  r.text = std::move(rendered.text);
  r.spans = std::move(rendered.label_spans);
  if (with_targets) {
    if (const auto* reg = std::get_if<Regression>(&task.kind))
      r.targets = regression_word_targets(ex.gold_value(), reg->low, reg->high);
    else
      r.targets = classification_word_targets(task.num_labels(), ex.gold_class());
  }
  return r;
}

Prediction decode_record(const TaskSpec& task, const std::vector<double>& p) {
  if (p.size() != task.num_labels())
    throw ProtocolError("expected " + std::to_string(task.num_labels()) +
                        " probabilities, got " + std::to_string(p.size()));
  if (const auto* reg = std::get_if<Regression>(&task.kind))
    return decode_regression(p[0], p[1], reg->low, reg->high);
  return decode_classification(LabelProbabilities{p});
}

MetricResult score_predictions(const TaskSpec& task,
                               const std::vector<Prediction>& preds,
                               const std::vector<DatasetExample>& golds) {
  if (preds.size() != golds.size())
    throw MetricError("prediction and gold counts differ");
  if (task.is_regression()) {
    if (task.metric != Metric::kPearson)
      throw TaskError("regression tasks are scored with pearson");
    std::vector<double> p, g;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      p.push_back(std::get<ValuePrediction>(preds[i]).value);
      g.push_back(golds[i].gold_value());
    }
    return metric_pearson(p, g);
  }
  std::vector<std::size_t> p, g;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    p.push_back(std::get<ClassPrediction>(preds[i]).index);
    g.push_back(golds[i].gold_class());
  }
  switch (task.metric) {
    case Metric::kAccuracy:
      return metric_accuracy(p, g);
    case Metric::kF1:
      return metric_f1(p, g);
    case Metric::kMatthews:
      return metric_matthews(p, g);
    case Metric::kPearson: {
      std::vector<double> pd(p.begin(), p.end()), gd(g.begin(), g.end());
      return metric_pearson(pd, gd);
    }
  }
  throw TaskError("unknown metric");
}

ExperimentReport run_experiment(const TaskSpec& task,
                                const std::vector<DatasetExample>& pool,
                                const std::vector<DatasetExample>& test,
                                const ExperimentConfig& config,
                                Backend& backend,
                                const ProgressFn& progress) {
  task.validate();
  config.validate();
  if (test.empty()) throw DatasetError("test set is empty");
  const Template tmpl = task.parsed_template();

  std::vector<PromptRecord> test_records;
  test_records.reserve(test.size());
  for (const auto& ex : test)
    test_records.push_back(make_prompt_record(task, tmpl, ex, "test:" + ex.id,
                                              false, config.max_length));

  const auto& grid = config.grid;
  std::vector<FewShotSplit> splits;
  std::vector<JobSlot> slots;
  for (std::size_t s = 0; s < config.seeds.size(); ++s) {
    splits.push_back(sample_few_shot(pool, task, config.k, config.seeds[s]));
    const auto& split = splits.back();
    std::vector<PromptRecord> train, dev;
    for (const auto& ex : split.train)
      train.push_back(make_prompt_record(task, tmpl, ex, "train:" + ex.id,
                                         true, config.max_length));
    for (const auto& ex : split.dev)
      dev.push_back(make_prompt_record(task, tmpl, ex, "dev:" + ex.id, false,
                                       config.max_length));
    for (std::size_t li = 0; li < grid.learning_rates.size(); ++li) {
      for (std::size_t bi = 0; bi < grid.batch_sizes.size(); ++bi) {
        JobSlot slot{s, li, bi, {}};
        auto& job = slot.job;
        job.kind = task.is_regression() ? JobKind::kRegression
                                        : JobKind::kClassification;
        auto& hp = job.hyperparams;
        hp.learning_rate = grid.learning_rates[li];
        hp.batch_size = grid.batch_sizes[bi];
        hp.epochs = config.epochs;
        hp.weight_decay = config.weight_decay;
        hp.adam_epsilon = config.adam_epsilon;
        hp.max_length = config.max_length;
        hp.seed = config.seeds[s];
        hp.loss_scope = config.loss_scope;
        job.train = train;
        job.dev = dev;
        job.test = test_records;
        slots.push_back(std::move(slot));
      }
    }
  }

  std::vector<std::optional<GridPointRun>> runs(slots.size());
  std::vector<std::exception_ptr> errors(slots.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> dispatched{0};
  std::atomic<bool> abort{false};
  std::mutex progress_mu;

  auto work = [&] {
    for (;;) {
      if (abort.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= slots.size()) return;
      const auto& slot = slots[i];
      try {
        ++dispatched;
        const BackendResult result = backend.run(slot.job);
        validate_result(slot.job, result);
        const auto& split = splits[slot.seed_index];
        GridPointRun run;
        run.seed = config.seeds[slot.seed_index];
        run.learning_rate = slot.job.hyperparams.learning_rate;
        run.batch_size = slot.job.hyperparams.batch_size;
        auto score = [&](const std::vector<PromptRecord>& records,
                         const std::vector<DatasetExample>& golds) {
          std::vector<Prediction> preds;
          for (const auto& r : records) {
            preds.push_back(decode_record(task, result.probs.at(r.id)));
            if (const auto* v = std::get_if<ValuePrediction>(&preds.back()))
              run.degenerate_decodes += v->degenerate;
          }
          return score_predictions(task, preds, golds);
        };
        run.dev = score(slot.job.dev, split.dev);
        run.test = score(slot.job.test, test);
        runs[i] = run;
        if (progress) {
          std::lock_guard lock(progress_mu);
          progress(run);
        }
      } catch (...) {
        errors[i] = std::current_exception();
        abort.store(true);
        return;
      }
    }
  };

  const std::size_t workers = std::min(config.concurrency, slots.size());
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }

  ExperimentReport report;
  report.task = task.name;
  report.metric = std::string(metric_name(task.metric));
  report.backend = backend.name();
  report.k = config.k;
  report.config = config;
  report.jobs = dispatched.load();
  for (const auto& r : runs)
    if (r) report.log.push_back(*r);

  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!errors[i]) continue;
    const auto& hp = slots[i].job.hyperparams;
    std::ostringstream where;
    where << "seed " << hp.seed << ", lr " << hp.learning_rate << ", batch "
          << hp.batch_size << ": ";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw ExperimentError(where.str() + e.what(), std::move(report));
    }
  }

  const std::size_t per_seed = grid.size();
  std::vector<double> scores;
  for (std::size_t s = 0; s < config.seeds.size(); ++s) {
    const GridPointRun* best = nullptr;
    for (std::size_t g = 0; g < per_seed; ++g) {
      const auto& run = *runs[s * per_seed + g];
      if (!best || better(run, *best)) best = &run;
    }
    report.seeds.push_back({best->seed, best->learning_rate, best->batch_size,
                            best->dev.value, best->test.value});
    scores.push_back(best->test.value);
  }
  report.mean = mean(scores);
  report.stddev = population_stddev(scores);
  return report;
}

ExperimentReport run_experiment(const TaskSpec& task, const DatasetPaths& data,
                                const ExperimentConfig& config,
                                Backend& backend, const ProgressFn& progress) {
  return run_experiment(task, load(data.train, data.schema, task),
                        load(data.test, data.schema, task), config, backend,
                        progress);
}

std::vector<ExperimentReport> k_sweep(const TaskSpec& task,
                                      const std::vector<DatasetExample>& pool,
                                      const std::vector<DatasetExample>& test,
                                      const std::vector<std::size_t>& ks,
                                      const ExperimentConfig& config,
                                      Backend& backend,
                                      const ProgressFn& progress) {
  if (ks.empty()) throw UsageError("k sweep needs at least one K");
  for (std::size_t i = 1; i < ks.size(); ++i)
    if (ks[i] <= ks[i - 1])
      throw UsageError("k sweep values must be strictly ascending");
  std::vector<ExperimentReport> out;
  for (std::size_t k : ks) {
    ExperimentConfig c = config;
    c.k = k;
    out.push_back(run_experiment(task, pool, test, c, backend, progress));
  }
  return out;
}

std::vector<ExperimentReport> k_sweep(const TaskSpec& task,
                                      const DatasetPaths& data,
                                      const std::vector<std::size_t>& ks,
                                      const ExperimentConfig& config,
                                      Backend& backend,
                                      const ProgressFn& progress) {
  return k_sweep(task, load(data.train, data.schema, task),
                 load(data.test, data.schema, task), ks, config, backend,
                 progress);
}

std::string format_summary(double mean, double stddev) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f (%.1f)", 100.0 * mean, 100.0 * stddev);
  return buf;
}

namespace {

nlohmann::ordered_json report_json(const ExperimentReport& report) {
  using nlohmann::ordered_json;
  const auto& c = report.config;
  ordered_json config = {
      {"seeds", c.seeds},
      {"learning_rates", c.grid.learning_rates},
      {"batch_sizes", c.grid.batch_sizes},
      {"epochs", c.epochs},
      {"weight_decay", c.weight_decay},
      {"adam_epsilon", c.adam_epsilon},
      {"max_length", c.max_length},
      {"loss_scope", std::string(loss_scope_name(c.loss_scope))}};
  ordered_json seeds = ordered_json::array();
  for (const auto& s : report.seeds)
    seeds.push_back({{"seed", s.seed},
                     {"learning_rate", s.learning_rate},
                     {"batch_size", s.batch_size},
                     {"dev_score", s.dev_score},
                     {"test_score", s.test_score}});
  ordered_json log = ordered_json::array();
  for (const auto& r : report.log)
    log.push_back({{"seed", r.seed},
                   {"learning_rate", r.learning_rate},
                   {"batch_size", r.batch_size},
                   {"dev_score", r.dev.value},
                   {"dev_degenerate", r.dev.degenerate},
                   {"test_score", r.test.value},
                   {"test_degenerate", r.test.degenerate},
                   {"degenerate_decodes", r.degenerate_decodes}});
  ordered_json out = {{"task", report.task},
                      {"metric", report.metric},
                      {"backend", report.backend},
                      {"k", report.k},
                      {"config", std::move(config)},
                      {"seeds", std::move(seeds)},
                      {"mean", report.mean},
                      {"std", report.stddev},
                      {"summary", format_summary(report.mean, report.stddev)},
                      {"jobs", report.jobs},
                      {"grid_log", std::move(log)}};
  return out;
}

}  // namespace

std::string report_to_json(const ExperimentReport& report) {
  return report_json(report).dump(2) + "\n";
}

std::string sweep_to_json(const std::vector<ExperimentReport>& reports) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& r : reports) out.push_back(report_json(r));
  return out.dump(2) + "\n";
}

std::string curve_csv(const std::vector<ExperimentReport>& reports) {
  std::string out = "k,mean,std\n";
  char buf[96];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g\n", r.k, r.mean,
                  r.stddev);
    out += buf;
  }
  return out;
}

}  // namespace trd
