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

#include "trd/run_config.h"

#include <gtest/gtest.h>

#include <cstdlib>

#include "test_util.h"
#include "trd/error.h"

namespace trd {
namespace {

using testing::TempDir;
using testing::write_text;

std::string usage_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const UsageError& e) {
    return e.what();
  }
  return "";
}

class EnvGuard {
 public:
  explicit EnvGuard(const char* value) {
    if (const char* old = std::getenv("TRD_BACKEND")) old_ = old;
    if (value) setenv("TRD_BACKEND", value, 1);
    else unsetenv("TRD_BACKEND");
  }
  ~EnvGuard() {
    if (old_) setenv("TRD_BACKEND", old_->c_str(), 1);
    else unsetenv("TRD_BACKEND");
  }

 private:
  std::optional<std::string> old_;
};

TEST(RunConfig, Defaults) {
  EnvGuard env(nullptr);
  const auto c = default_run_config();
  EXPECT_EQ(c.backend, "toy");
  EXPECT_EQ(c.experiment.k, 16u);
  EXPECT_EQ(c.experiment.seeds, (std::vector<std::uint64_t>{13, 21, 42, 87, 100}));
  EXPECT_EQ(c.experiment.grid.learning_rates,
            (std::vector<double>{1e-5, 2e-5, 3e-5, 4e-5, 5e-5}));
  EXPECT_EQ(c.experiment.grid.batch_sizes, (std::vector<std::size_t>{4, 8}));
  EXPECT_EQ(c.report, "report.json");
  EXPECT_EQ(c.curve_path(), "report.csv");
}

TEST(RunConfig, ReadsFileRelativeToItsDirectory) {
  EnvGuard env(nullptr);
  TempDir dir;
  write_text(dir / "run.ini",
             "[task]\nname = sst-2\n\n"
             "[data]\ntrain = d/train.tsv\ntest = /abs/test.tsv\n"
             "s2_column = none\n\n"
             "[experiment]\nk = 8\nseeds = 1, 2\nlearning_rates = 1e-4,2e-4\n"
             "batch_sizes = 2\nepochs = 3\nloss_scope = label-positions-only\n"
             "concurrency = 2\n\n"
             "[backend]\nselector = external:python3 b.py\n"
             "timeout_seconds = 5\nfile_handoff = yes\n\n"
             "[toy]\nd_model = 16\nnum_heads = 2\n\n"
             "[output]\nreport = out/r.json\n");
  auto c = default_run_config();
  apply_run_config_file(c, dir / "run.ini");
  EXPECT_EQ(c.task, "sst-2");
  EXPECT_EQ(c.train, dir.path() / "d/train.tsv");
  EXPECT_EQ(c.test, "/abs/test.tsv");
  EXPECT_EQ(c.experiment.k, 8u);
  EXPECT_EQ(c.experiment.seeds, (std::vector<std::uint64_t>{1, 2}));
  EXPECT_EQ(c.experiment.grid.learning_rates, (std::vector<double>{1e-4, 2e-4}));
  EXPECT_EQ(c.experiment.grid.batch_sizes, (std::vector<std::size_t>{2}));
  EXPECT_EQ(c.experiment.epochs, 3u);
  EXPECT_EQ(c.experiment.loss_scope, LossScope::kLabelPositions);
  EXPECT_EQ(c.experiment.concurrency, 2u);
  EXPECT_EQ(c.backend, "external:python3 b.py");
  EXPECT_EQ(c.backend_timeout, std::chrono::seconds(5));
  EXPECT_TRUE(c.file_handoff);
  EXPECT_EQ(c.toy.d_model, 16u);
  EXPECT_EQ(c.report, dir.path() / "out/r.json");
  EXPECT_EQ(c.curve_path(), dir.path() / "out/r.csv");
  EXPECT_NO_THROW(c.validate());
}

TEST(RunConfig, MalformedValuesNameTheField) {
  RunConfig c;
  EXPECT_EQ(usage_message([&] { set_run_field(c, "experiment.k", "sixteen"); }),
            "experiment.k: expected a non-negative integer, got 'sixteen'");
  EXPECT_NE(usage_message([&] {
              set_run_field(c, "experiment.learning_rates", "1e-5,fast");
            }).find("experiment.learning_rates"),
            std::string::npos);
  EXPECT_NE(usage_message([&] { set_run_field(c, "backend.file_handoff", "maybe"); })
                .find("backend.file_handoff"),
            std::string::npos);
  EXPECT_NE(usage_message([&] { set_run_field(c, "data.format", "xml"); })
                .find("data.format"),
            std::string::npos);
  EXPECT_NE(usage_message([&] { set_run_field(c, "experiment.seeds", ""); })
                .find("experiment.seeds"),
            std::string::npos);
  EXPECT_NE(usage_message([&] { set_run_field(c, "experiment.lr", "1"); })
                .find("unknown config field 'experiment.lr'"),
            std::string::npos);
}

TEST(RunConfig, FileErrors) {
  TempDir dir;
  RunConfig c;
  EXPECT_THROW(apply_run_config_file(c, dir / "missing.ini"), UsageError);
  write_text(dir / "bad.ini", "[experiment]\nk = many\n");
  EXPECT_NE(usage_message([&] { apply_run_config_file(c, dir / "bad.ini"); })
                .find("experiment.k"),
            std::string::npos);
  write_text(dir / "unknown.ini", "[experiment]\nlearning_rate = 1e-5\n");
  EXPECT_NE(usage_message([&] { apply_run_config_file(c, dir / "unknown.ini"); })
                .find("experiment.learning_rate"),
            std::string::npos);
  write_text(dir / "broken.ini", "[experiment\nk = 3\n");
  EXPECT_THROW(apply_run_config_file(c, dir / "broken.ini"), UsageError);
}

TEST(RunConfig, ValidateNamesMissingFields) {
  RunConfig c;
  EXPECT_NE(usage_message([&] { c.validate(); }).find("task.name"),
            std::string::npos);
  c.task = "sst-2";
  EXPECT_NE(usage_message([&] { c.validate(); }).find("data.train"),
            std::string::npos);
  c.train = "a";
  c.test = "b";
  EXPECT_NO_THROW(c.validate());
  c.k_sweep = {32, 16};
  EXPECT_NE(usage_message([&] { c.validate(); }).find("experiment.k_sweep"),
            std::string::npos);
  c.k_sweep.clear();
  c.toy.d_model = 30;
  c.toy.num_heads = 4;
  EXPECT_THROW(c.validate(), UsageError);
}

TEST(RunConfig, Precedence) {
  TempDir dir;
  write_text(dir / "run.ini", "[backend]\nselector = external:from-file\n");
  {
    EnvGuard env("external:from-env");
    auto c = default_run_config();
    EXPECT_EQ(c.backend, "external:from-env");
    apply_run_config_file(c, dir / "run.ini");
    EXPECT_EQ(c.backend, "external:from-file");
    set_run_field(c, "backend.selector", "external:from-flag");
    EXPECT_EQ(c.backend, "external:from-flag");
  }
  {
    EnvGuard env("external:from-env");
    write_text(dir / "empty.ini", "[experiment]\nk = 4\n");
    auto c = default_run_config();
    apply_run_config_file(c, dir / "empty.ini");
    EXPECT_EQ(c.backend, "external:from-env");
  }
  EnvGuard env(nullptr);
  EXPECT_EQ(default_run_config().backend, "toy");
}

TEST(RunConfig, EveryKeyIsSettable) {
  const auto& keys = run_config_keys();
  EXPECT_GE(keys.size(), 25u);
  for (const auto& k : keys) {
    RunConfig c;
    EXPECT_EQ(usage_message([&] { set_run_field(c, k, "\x01"); })
                  .find("unknown config field"),
              std::string::npos)
        << k;
  }
}

}  // namespace
}  // namespace trd
