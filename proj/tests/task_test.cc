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

#include "trd/task.h"

#include <gtest/gtest.h>

#include <set>

#include "test_util.h"
#include "trd/error.h"

namespace trd {
namespace {

using testing::TempDir;
using testing::write_text;

TEST(Registry, SixteenBuiltins) {
  const auto& tasks = builtin_tasks();
  ASSERT_EQ(tasks.size(), 16u);
  std::set<std::string> names;
  for (const auto& t : tasks) {
    names.insert(t.name);
    EXPECT_NO_THROW(t.validate()) << t.name;
  }
  EXPECT_EQ(names.size(), 16u);
  for (const char* n :
       {"sst-2", "sst-5", "mr", "cr", "mpqa", "subj", "trec", "cola", "mnli",
        "mnli-mm", "snli", "qnli", "rte", "mrpc", "qqp", "sts-b"})
    EXPECT_TRUE(names.contains(n)) << n;
}

TEST(Registry, Entries) {
  const auto sst2 = load_task("sst-2");
  EXPECT_EQ(sst2.template_src, "<S1> It was {LABELS}");
  EXPECT_EQ(sst2.label_words, (std::vector<std::string>{"great", "terrible"}));
  EXPECT_EQ(sst2.metric, Metric::kAccuracy);
  EXPECT_EQ(sst2.sentence_count, 1);

  const auto sst5 = load_task("SST-5");
  EXPECT_EQ(sst5.label_words.size(), 5u);

  const auto stsb = load_task("sts-b");
  ASSERT_TRUE(stsb.is_regression());
  EXPECT_EQ(std::get<Regression>(stsb.kind).low, 0.0);
  EXPECT_EQ(std::get<Regression>(stsb.kind).high, 5.0);
  EXPECT_EQ(stsb.label_words, (std::vector<std::string>{"No", "Yes"}));
  EXPECT_EQ(stsb.metric, Metric::kPearson);
  EXPECT_EQ(stsb.sentence_count, 2);

  EXPECT_EQ(load_task("cola").metric, Metric::kMatthews);
  EXPECT_EQ(load_task("mrpc").metric, Metric::kF1);
  EXPECT_EQ(load_task("qqp").metric, Metric::kF1);
  EXPECT_EQ(load_task("mnli").label_words.size(), 3u);
  EXPECT_EQ(load_task("trec").label_words.size(), 6u);
}

TEST(Registry, UnknownTask) {
  EXPECT_THROW(load_task("no-such-task"), TaskError);
}

TEST(Registry, ValidateRejects) {
  TaskSpec t = load_task("sst-2");
  t.label_words = {"great", "great"};
  EXPECT_THROW(t.validate(), TaskError);
  t.label_words = {"very good", "bad"};
  EXPECT_THROW(t.validate(), TaskError);
  t = load_task("sst-2");
  t.kind = Classification{3};
  EXPECT_THROW(t.validate(), TaskError);
  t = load_task("sts-b");
  t.kind = Regression{5, 0};
  EXPECT_THROW(t.validate(), TaskError);
  t = load_task("mnli");
  t.sentence_count = 1;
  EXPECT_THROW(t.validate(), TaskError);
}

TEST(Registry, MetricNames) {
  EXPECT_EQ(parse_metric("acc"), Metric::kAccuracy);
  EXPECT_EQ(parse_metric("mcc"), Metric::kMatthews);
  EXPECT_EQ(parse_metric("pear"), Metric::kPearson);
  EXPECT_EQ(parse_metric("f1"), Metric::kF1);
  EXPECT_THROW(parse_metric("bleu"), Error);
  for (auto m : {Metric::kAccuracy, Metric::kF1, Metric::kMatthews,
                 Metric::kPearson})
    EXPECT_EQ(parse_metric(metric_name(m)), m);
}

TEST(TaskFile, Loads) {
  TempDir dir;
  write_text(dir / "t.ini",
             "[task]\nname = polar\nkind = classification\n"
             "template = {LABELS}: <S1>\nlabel_words = good, bad, meh\n"
             "metric = accuracy\n");
  const auto t = load_task((dir / "t.ini").string());
  EXPECT_EQ(t.name, "polar");
  EXPECT_EQ(std::get<Classification>(t.kind).num_classes, 3u);
  EXPECT_EQ(t.label_words, (std::vector<std::string>{"good", "bad", "meh"}));

  write_text(dir / "r.ini",
             "name = score\nkind = regression\nlow = 1\nhigh = 3\n"
             "template = <S1> {LABELS} <S2>\nlabel_words = low, high\n");
  const auto r = load_task_file(dir / "r.ini");
  EXPECT_EQ(std::get<Regression>(r.kind).high, 3.0);
  EXPECT_EQ(r.sentence_count, 2);
  EXPECT_EQ(r.metric, Metric::kPearson);
}

TEST(TaskFile, Errors) {
  TempDir dir;
  write_text(dir / "a.ini", "name = x\nkind = classification\n");
  EXPECT_THROW(load_task_file(dir / "a.ini"), TaskError);
  write_text(dir / "b.ini",
             "name = x\nkind = classification\ntemplate = <S1> {LABELS}\n"
             "label_words = a, b\ncolour = red\n");
  EXPECT_THROW(load_task_file(dir / "b.ini"), TaskError);
  write_text(dir / "c.ini",
             "name = x\nkind = sorting\ntemplate = <S1> {LABELS}\n"
             "label_words = a, b\n");
  EXPECT_THROW(load_task_file(dir / "c.ini"), TaskError);
  write_text(dir / "d.ini",
             "name = x\nkind = classification\ntemplate = <S1> {LABEL}\n"
             "label_words = a, b\n");
  EXPECT_THROW(load_task_file(dir / "d.ini"), Error);
}

TEST(Dataset, ReadsTsvWithWordsAndIndices) {
  TempDir dir;
  write_text(dir / "d.tsv", "a fine film\tgreat\nawful\t1\n\nok\t0\r\n");
  const auto rows = read_dataset(dir / "d.tsv", {}, load_task("sst-2"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].gold_class(), 0u);
  EXPECT_EQ(rows[1].gold_class(), 1u);
  EXPECT_EQ(rows[2].s1, "ok");
  EXPECT_EQ(rows[0].id, "d-1");
  EXPECT_EQ(rows[2].id, "d-4");
}

TEST(Dataset, ReadsPairsAndHeader) {
  TempDir dir;
  write_text(dir / "p.tsv", "label\ta\tb\n3.5\tx y\tz\n");
  DatasetSchema s;
  s.has_header = true;
  s.label_column = 0;
  s.s1_column = 1;
  s.s2_column = 2;
  const auto rows = read_dataset(dir / "p.tsv", s, load_task("sts-b"));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].gold_value(), 3.5);
  EXPECT_EQ(*rows[0].s2, "z");
}

TEST(Dataset, ReadsJsonLines) {
  TempDir dir;
  write_text(dir / "d.jsonl",
             "{\"s1\":\"a\",\"s2\":\"b\",\"label\":\"No\",\"id\":\"q1\"}\n"
             "{\"s1\":\"c\",\"s2\":\"d\",\"label\":0}\n");
  const auto rows = read_dataset(dir / "d.jsonl", {}, load_task("qnli"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].id, "q1");
  EXPECT_EQ(rows[0].gold_class(), 1u);
  EXPECT_EQ(rows[1].gold_class(), 0u);
}

TEST(Dataset, ErrorsNameTheLine) {
  TempDir dir;
  write_text(dir / "d.tsv", "good\t0\nbad\t1\nworse\t2\n");
  try {
    read_dataset(dir / "d.tsv", {}, load_task("sst-2"));
    FAIL() << "expected DatasetError";
  } catch (const DatasetError& e) {
    EXPECT_NE(std::string(e.what()).find("d.tsv:3"), std::string::npos)
        << e.what();
  }
  write_text(dir / "r.tsv", "x\t5.5\n");
  DatasetSchema s;
  s.s2_column = 0;
  EXPECT_THROW(read_dataset(dir / "r.tsv", s, load_task("sts-b")),
               DatasetError);
  write_text(dir / "m.tsv", "only one column\n");
  EXPECT_THROW(read_dataset(dir / "m.tsv", {}, load_task("sst-2")),
               DatasetError);
  EXPECT_THROW(read_dataset(dir / "missing.tsv", {}, load_task("sst-2")),
               DatasetError);
  write_text(dir / "two.tsv", "a\t0\n");
  EXPECT_THROW(read_dataset(dir / "two.tsv", {}, load_task("mnli")),
               DatasetError);
}

std::vector<DatasetExample> pool(std::size_t per_class, std::size_t classes) {
  std::vector<DatasetExample> out;
  for (std::size_t i = 0; i < per_class * classes; ++i)
    out.push_back({"e" + std::to_string(i), "s" + std::to_string(i),
                   std::nullopt, i % classes});
  return out;
}

TEST(FewShot, ClassBalancedAndDisjoint) {
  const auto task = load_task("sst-5");
  const auto data = pool(40, 5);
  const auto split = sample_few_shot(data, task, 16, 13);
  ASSERT_EQ(split.train.size(), 80u);
  ASSERT_EQ(split.dev.size(), 80u);
  std::vector<int> tc(5), dc(5);
  std::set<std::string> ids;
  for (const auto& e : split.train) {
    ++tc[e.gold_class()];
    ids.insert(e.id);
  }
  for (const auto& e : split.dev) {
    ++dc[e.gold_class()];
    EXPECT_FALSE(ids.contains(e.id));
  }
  for (int c = 0; c < 5; ++c) {
    EXPECT_EQ(tc[c], 16);
    EXPECT_EQ(dc[c], 16);
  }
}

TEST(FewShot, DeterministicPerSeed) {
  const auto task = load_task("sst-2");
  const auto data = pool(50, 2);
  auto ids = [](const FewShotSplit& s) {
    std::vector<std::string> out;
    for (const auto& e : s.train) out.push_back(e.id);
    for (const auto& e : s.dev) out.push_back(e.id);
    return out;
  };
  EXPECT_EQ(ids(sample_few_shot(data, task, 8, 21)),
            ids(sample_few_shot(data, task, 8, 21)));
  EXPECT_NE(ids(sample_few_shot(data, task, 8, 21)),
            ids(sample_few_shot(data, task, 8, 42)));
}

TEST(FewShot, NeedsEnoughExamples) {
  const auto task = load_task("sst-2");
  EXPECT_THROW(sample_few_shot(pool(31, 2), task, 16, 1), DatasetError);
  EXPECT_NO_THROW(sample_few_shot(pool(32, 2), task, 16, 1));
  EXPECT_THROW(sample_few_shot(pool(32, 2), task, 0, 1), DatasetError);
}

TEST(FewShot, Regression) {
  const auto task = load_task("sts-b");
  std::vector<DatasetExample> data;
  for (int i = 0; i < 70; ++i)
    data.push_back({"r" + std::to_string(i), "a", std::string("b"),
                    static_cast<double>(i % 6)});
  const auto split = sample_few_shot(data, task, 16, 13);
  EXPECT_EQ(split.train.size(), 32u);
  EXPECT_EQ(split.dev.size(), 32u);
  data.resize(63);
  EXPECT_THROW(sample_few_shot(data, task, 16, 13), DatasetError);
}

TEST(FewShot, DefaultSeeds) {
  EXPECT_EQ(default_seeds(), (std::vector<std::uint64_t>{13, 21, 42, 87, 100}));
}

}  // namespace
}  // namespace trd
