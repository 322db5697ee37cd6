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

#include "cli.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <CLI11.hpp>

#include "trd/backend.h"
#include "trd/error.h"
#include "trd/experiment.h"
#include "trd/run_config.h"
#include "trd/synthetic.h"
#include "trd/task.h"
#include "trd/template.h"

namespace trd::cli {
namespace {

namespace fs = std::filesystem;

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string kind_text(const TaskSpec& t) {
  if (const auto* r = std::get_if<Regression>(&t.kind)) {
    std::ostringstream s;
    s << "regression[" << r->low << "," << r->high << "]";
    return s.str();
  }
  return "classification(" + std::to_string(t.num_labels()) + ")";
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

std::string read_all(std::istream& in) {
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Flags shared by `run` and `sweep`; each maps onto one config field.
struct RunFlags {
  std::string config;
  std::vector<std::pair<std::string, CLI::Option*>> fields;
  std::map<std::string, std::string> values;
  std::vector<std::string> sets;
  bool file_handoff = false;
  CLI::Option* file_handoff_opt = nullptr;
  bool quiet = false;

  void add(CLI::App* app, const std::string& flag, const std::string& key,
           const std::string& help) {
    fields.emplace_back(key, app->add_option(flag, values[key], help));
  }
};

void add_run_flags(CLI::App* app, RunFlags& f, bool sweep) {
  app->add_option("config", f.config, "INI config file");
  f.add(app, "--task", "task.name", "Task name or task file");
  f.add(app, "--train", "data.train", "Training pool");
  f.add(app, "--test", "data.test", "Test set");
  f.add(app, "--format", "data.format", "auto, tsv or jsonl");
  f.add(app, "--k", "experiment.k", "Examples per class");
  f.add(app, "--seeds", "experiment.seeds", "Comma-separated split seeds");
  f.add(app, "--learning-rates", "experiment.learning_rates",
        "Comma-separated learning rates");
  f.add(app, "--batch-sizes", "experiment.batch_sizes",
        "Comma-separated batch sizes");
  f.add(app, "--epochs", "experiment.epochs", "Training epochs per job");
  f.add(app, "--weight-decay", "experiment.weight_decay", "AdamW weight decay");
  f.add(app, "--adam-epsilon", "experiment.adam_epsilon", "AdamW epsilon");
  f.add(app, "--max-length", "experiment.max_length", "Maximum tokens");
  f.add(app, "--loss-scope", "experiment.loss_scope",
        "full-sequence or label-only");
  f.add(app, "-j,--concurrency", "experiment.concurrency",
        "Backend jobs in flight");
  f.add(app, sweep ? "--ks,--k-sweep" : "--k-sweep", "experiment.k_sweep",
        "Comma-separated K values; writes a curve CSV");
  f.add(app, "--backend", "backend.selector", "toy or external:<command>");
  f.add(app, "--timeout", "backend.timeout_seconds", "Per-job timeout");
  f.file_handoff_opt = app->add_flag(
      "--file-handoff", f.file_handoff,
      "Pass --job-file/--result-file to external backends");
  f.add(app, "--report", "output.report", "Report JSON path");
  f.add(app, "--curve", "output.curve", "Curve CSV path");
  app->add_option("--set", f.sets, "Override any field: section.key=value")
      ->allow_extra_args(false);
  app->add_flag("-q,--quiet", f.quiet, "No per-job progress");
}

RunConfig resolve_config(const RunFlags& f) {
  RunConfig cfg = default_run_config();
  if (!f.config.empty()) apply_run_config_file(cfg, f.config);
  for (const auto& [key, opt] : f.fields)
    if (opt->count()) set_run_field(cfg, key, f.values.at(key));
  if (f.file_handoff_opt->count()) cfg.file_handoff = true;
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw UsageError("--set expects section.key=value, got '" + s + "'");
    set_run_field(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

int cmd_run(const RunFlags& flags, bool sweep, std::ostream& out,
            std::ostream& err) {
  const RunConfig cfg = resolve_config(flags);
  if (sweep && cfg.k_sweep.empty())
    throw UsageError("sweep needs K values (--ks or experiment.k_sweep)");
  TaskSpec task;
  try {
    task = load_task(cfg.task);
  } catch (const TaskError& e) {
    throw UsageError(std::string("task.name: ") + e.what());
  }
  auto backend = make_backend(cfg.backend, cfg.toy, cfg.backend_timeout,
                              cfg.file_handoff);
  const DatasetPaths data{cfg.train, cfg.test, cfg.schema};
  ProgressFn progress;
  if (!flags.quiet) {
    progress = [&err](const GridPointRun& r) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "seed %llu  lr %g  batch %zu  dev %.4f  test %.4f\n",
                    static_cast<unsigned long long>(r.seed), r.learning_rate,
                    r.batch_size, r.dev.value, r.test.value);
      err << buf << std::flush;
    };
  }

  try {
    if (cfg.k_sweep.empty()) {
      const auto report =
          run_experiment(task, data, cfg.experiment, *backend, progress);
      write_file(cfg.report, report_to_json(report));
      out << report.task << " K=" << report.k << " " << report.metric << ": "
          << format_summary(report.mean, report.stddev) << "\n";
      out << "report: " << cfg.report.string() << "\n";
    } else {
      const auto reports = k_sweep(task, data, cfg.k_sweep, cfg.experiment,
                                   *backend, progress);
      write_file(cfg.report, sweep_to_json(reports));
      write_file(cfg.curve_path(), curve_csv(reports));
      for (const auto& r : reports)
        out << r.task << " K=" << r.k << " " << r.metric << ": "
            << format_summary(r.mean, r.stddev) << "\n";
      out << "report: " << cfg.report.string() << "\n";
      out << "curve: " << cfg.curve_path().string() << "\n";
    }
  } catch (const ExperimentError& e) {
    auto partial = cfg.report;
    partial += ".partial";
    write_file(partial, report_to_json(e.partial()));
    err << "partial log: " << partial.string() << "\n";
    throw;
  }
  return 0;
}

std::string task_file_text(const TaskSpec& t) {
  std::ostringstream s;
  s << "[task]\n";
  s << "name = " << t.name << "\n";
  if (const auto* r = std::get_if<Regression>(&t.kind)) {
    s << "kind = regression\n";
    s << "low = " << r->low << "\nhigh = " << r->high << "\n";
  } else {
    s << "kind = classification\n";
  }
  s << "template = " << t.template_src << "\n";
  s << "label_words = " << join(t.label_words, ", ") << "\n";
  s << "metric = " << metric_name(t.metric) << "\n";
  return s.str();
}

struct SynthFlags {
  std::string kind;
  std::string dir;
  std::size_t pool = 256;
  std::size_t test = 500;
  std::uint64_t seed = 7;
  std::size_t epochs = 100;
};

int cmd_synth(const SynthFlags& f, std::ostream& out) {
  const fs::path dir(f.dir);
  const bool score = f.kind == "score";
  const TaskSpec task =
      score ? synthetic::score_task() : synthetic::sentiment_task();
  auto make = [&](std::size_t n, std::uint64_t seed, const std::string& p) {
    return score ? synthetic::score_examples(n, seed, p)
                 : synthetic::sentiment_examples(n, seed, p);
  };
  fs::create_directories(dir);
  write_file(dir / "task.ini", task_file_text(task));
  synthetic::write_tsv(dir / "train.tsv", make(f.pool, f.seed, "train"));
  synthetic::write_tsv(dir / "test.tsv", make(f.test, f.seed + 1, "test"));
  std::ostringstream run;
  run << "[task]\nname = task.ini\n\n"
      << "[data]\ntrain = train.tsv\ntest = test.tsv\n\n"
      << "[experiment]\nk = 16\nepochs = " << f.epochs << "\n\n"
      << "[output]\nreport = report.json\n";
  write_file(dir / "run.ini", run.str());
  out << "wrote " << (dir / "run.ini").string() << "\n";
  return 0;
}

struct ServeFlags {
  std::string job_file;
  std::string result_file;
  ToyBackendOptions toy;
};

int cmd_serve(const ServeFlags& f, std::ostream& out) {
  if (f.job_file.empty() != f.result_file.empty())
    throw UsageError("--job-file and --result-file go together");
  std::string text;
  if (f.job_file.empty()) {
    std::getline(std::cin, text);
  } else {
    std::ifstream in(f.job_file, std::ios::binary);
    if (!in) throw Error("cannot read " + f.job_file);
    text = read_all(in);
  }
  const BackendJob job = job_from_json(text);
  const std::string result = result_to_json(run_job_toy(job, f.toy)) + "\n";
  if (f.result_file.empty())
    out << result << std::flush;
  else
    write_file(f.result_file, result);
  return 0;
}

}  // namespace

int cmd_tasks(std::ostream& out) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-8s %-18s %-9s %-45s %s\n", "name", "kind",
                "metric", "label words", "template");
  out << buf;
  for (const auto& t : builtin_tasks()) {
    std::snprintf(buf, sizeof buf, "%-8s %-18s %-9s %-45s %s\n",
                  t.name.c_str(), kind_text(t).c_str(),
                  std::string(metric_name(t.metric)).c_str(),
                  join(t.label_words, ", ").c_str(), t.template_src.c_str());
    out << buf;
  }
  return 0;
}

int cmd_render(const std::string& task_name, const std::string& s1,
               const std::optional<std::string>& s2, std::ostream& out) {
  const TaskSpec task = load_task(task_name);
  const auto prompt = render(task.parsed_template(), s1, s2, task.label_words);
  out << prompt.text << "\n";
  for (std::size_t i = 0; i < prompt.label_spans.size(); ++i) {
    const auto& sp = prompt.label_spans[i];
    out << "  label " << i << " " << task.label_words[i] << " [" << sp.start
        << ", " << sp.end << ")\n";
  }
  out << "  s1 [" << prompt.s1_span.start << ", " << prompt.s1_span.end
      << ")\n";
  if (prompt.s2_span)
    out << "  s2 [" << prompt.s2_span->start << ", " << prompt.s2_span->end
        << ")\n";
  return 0;
}

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Few-shot classification and regression as token-replaced "
               "detection",
               "trd"};
  app.require_subcommand(1);

  auto* tasks = app.add_subcommand("tasks", "List built-in tasks");

  std::string r_task, r_s1;
  std::optional<std::string> r_s2;
  auto* rend = app.add_subcommand("render", "Show a task's prompt");
  rend->add_option("task", r_task, "Task name or task file")->required();
  rend->add_option("s1", r_s1, "First sentence")->required();
  rend->add_option("s2", r_s2, "Second sentence");

  RunFlags run_flags, sweep_flags;
  auto* runc = app.add_subcommand("run", "Run the few-shot protocol");
  add_run_flags(runc, run_flags, false);
  auto* sweepc = app.add_subcommand("sweep", "Run the protocol for several K");
  add_run_flags(sweepc, sweep_flags, true);

  SynthFlags synth;
  auto* synthc =
      app.add_subcommand("synth", "Write a synthetic task, data and config");
  synthc->add_option("kind", synth.kind, "sentiment or score")
      ->required()
      ->check(CLI::IsMember({"sentiment", "score"}));
  synthc->add_option("dir", synth.dir, "Output directory")->required();
  synthc->add_option("--pool", synth.pool, "Training pool size");
  synthc->add_option("--test", synth.test, "Test set size");
  synthc->add_option("--seed", synth.seed, "Generator seed");
  synthc->add_option("--epochs", synth.epochs, "Epochs in run.ini");

  ServeFlags serve;
  auto* servec = app.add_subcommand(
      "serve", "Answer one backend job with the toy model (stdin/stdout)");
  servec->add_option("--job-file", serve.job_file, "Read the job here");
  servec->add_option("--result-file", serve.result_file,
                     "Write the result here");
  servec->add_option("--d-model", serve.toy.d_model);
  servec->add_option("--layers", serve.toy.num_layers);
  servec->add_option("--heads", serve.toy.num_heads);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (tasks->parsed()) return cmd_tasks(out);
    if (rend->parsed()) return cmd_render(r_task, r_s1, r_s2, out);
    if (runc->parsed()) return cmd_run(run_flags, false, out, err);
    if (sweepc->parsed()) return cmd_run(sweep_flags, true, out, err);
    if (synthc->parsed()) return cmd_synth(synth, out);
    if (servec->parsed()) return cmd_serve(serve, out);
  } catch (const UsageError& e) {
    err << "trd: usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "trd: error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace trd::cli
