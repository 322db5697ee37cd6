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

#include <gtest/gtest.h>

#include <sstream>

#include <json.hpp>

#include "test_util.h"

namespace trd::cli {
namespace {

using trd::testing::read_text;
using trd::testing::TempDir;
using trd::testing::write_text;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

TEST(Cli, TasksListsSixteen) {
  const auto r = call({"tasks"});
  ASSERT_EQ(r.code, 0);
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 17u);
  bool sst5 = false, stsb = false;
  for (const auto& l : ls) {
    if (l.starts_with("sst-5 ")) {
      sst5 = true;
      EXPECT_NE(l.find("classification(5)"), std::string::npos) << l;
    }
    if (l.starts_with("sts-b ")) {
      stsb = true;
      EXPECT_NE(l.find("regression"), std::string::npos) << l;
    }
  }
  EXPECT_TRUE(sst5);
  EXPECT_TRUE(stsb);
}

TEST(Cli, RenderPrintsPrompt) {
  auto r = call({"render", "sst-2", "A gripping film."});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(r.out)[0], "A gripping film. It was great terrible");
  r = call({"render", "mnli", "A man is sleeping.", "A person rests."});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(r.out)[0],
            "A man is sleeping. ? Yes Maybe No, A person rests.");
  r = call({"render", "sts-b", "A dog runs.", "A dog is running."});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(r.out)[0], "A dog runs. No Yes, A dog is running.");
  EXPECT_NE(r.out.find("label 1 Yes"), std::string::npos);
}

TEST(Cli, RenderErrors) {
  auto r = call({"render", "mnli", "Only one sentence."});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
  r = call({"render", "no-such-task", "x"});
  EXPECT_NE(r.code, 0);
  EXPECT_EQ(call({}).code, 2);
  EXPECT_EQ(call({"frobnicate"}).code, 2);
}

TEST(Cli, MalformedConfigNamesField) {
  TempDir dir;
  write_text(dir / "run.ini", "[task]\nname = sst-2\n[experiment]\nk = lots\n");
  auto r = call({"run", (dir / "run.ini").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("experiment.k"), std::string::npos) << r.err;
  r = call({"run", "--task", "sst-2", "--train", "a", "--test", "b",
            "--set", "experiment.bogus=1"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("experiment.bogus"), std::string::npos) << r.err;
  r = call({"run", "--task", "nope", "--train", "a", "--test", "b"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("task.name"), std::string::npos) << r.err;
}

TEST(Cli, MissingDataIsRuntimeError) {
  TempDir dir;
  const auto r = call({"run", "--task", "sst-2", "--train",
                       (dir / "none.tsv").string(), "--test",
                       (dir / "none.tsv").string(), "-q"});
  EXPECT_EQ(r.code, 1);
}

class CliRun : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_EQ(call({"synth", "sentiment", dir.path().string(), "--pool", "80",
                    "--test", "40"})
                  .code,
              0);
  }
  std::vector<std::string> quick(const std::string& report) {
    return {"run",          (dir / "run.ini").string(),
            "--k",          "4",
            "--epochs",     "2",
            "--learning-rates", "1e-3",
            "--batch-sizes", "4",
            "--report",     report,
            "-q"};
  }
  TempDir dir;
};

TEST_F(CliRun, ReportIsReproducible) {
  const auto a = (dir / "a.json").string(), b = (dir / "b.json").string();
  const auto r = call(quick(a));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("K=4 accuracy: "), std::string::npos) << r.out;
  ASSERT_EQ(call(quick(b)).code, 0);
  EXPECT_EQ(read_text(a), read_text(b));
  const auto j = nlohmann::json::parse(read_text(a));
  EXPECT_EQ(j["seeds"].size(), 5u);
  EXPECT_EQ(j["jobs"], 5);
  EXPECT_EQ(j["backend"], "toy");

  auto parallel = quick((dir / "c.json").string());
  parallel.insert(parallel.end(), {"-j", "3"});
  ASSERT_EQ(call(parallel).code, 0);
  auto jc = nlohmann::json::parse(read_text(dir / "c.json"));
  EXPECT_EQ(jc["seeds"], j["seeds"]);
  EXPECT_EQ(jc["grid_log"], j["grid_log"]);
}

TEST_F(CliRun, KSweepWritesCurve) {
  auto args = quick((dir / "sweep.json").string());
  args.insert(args.end(), {"--k-sweep", "4,8,16", "--seeds", "13"});
  const auto r = call(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = lines(read_text(dir / "sweep.csv"));
  ASSERT_EQ(csv.size(), 4u);
  EXPECT_EQ(csv[0], "k,mean,std");
  EXPECT_TRUE(csv[1].starts_with("4,"));
  EXPECT_TRUE(csv[2].starts_with("8,"));
  EXPECT_TRUE(csv[3].starts_with("16,"));
  EXPECT_EQ(nlohmann::json::parse(read_text(dir / "sweep.json")).size(), 3u);
}

TEST_F(CliRun, ExternalFailureLeavesPartialLog) {
  auto args = quick((dir / "f.json").string());
  args.insert(args.end(), {"--backend", "external:false"});
  const auto r = call(args);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("seed 13"), std::string::npos) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "f.json.partial"));
}

TEST_F(CliRun, ExternalToyMatchesInProcess) {
  const auto a = (dir / "in.json").string(), b = (dir / "ext.json").string();
  ASSERT_EQ(call(quick(a)).code, 0);
  auto args = quick(b);
  args.insert(args.end(),
              {"--backend", std::string("external:") + TRD_TOOL + " serve",
               "--file-handoff"});
  const auto r = call(args);
  ASSERT_EQ(r.code, 0) << r.err;
  auto ja = nlohmann::json::parse(read_text(a));
  auto jb = nlohmann::json::parse(read_text(b));
  EXPECT_EQ(ja["seeds"], jb["seeds"]);
  EXPECT_EQ(ja["mean"], jb["mean"]);
}

}  // namespace
}  // namespace trd::cli
