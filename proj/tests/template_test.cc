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

#include "trd/template.h"

#include <gtest/gtest.h>

#include <random>

#include "trd/error.h"
#include "trd/task.h"

namespace trd {
namespace {

TEST(Template, SentimentPrompt) {
  const auto t = Template::parse("<S1> It was {LABELS}");
  const auto p = render(t, "I am so excited about the concert.", std::nullopt,
                        {"great", "terrible"});
  EXPECT_EQ(p.text, "I am so excited about the concert. It was great terrible");
  ASSERT_EQ(p.label_spans.size(), 2u);
  EXPECT_EQ(p.text.substr(p.label_spans[0].start, p.label_spans[0].size()),
            "great");
  EXPECT_EQ(p.text.substr(p.label_spans[1].start, p.label_spans[1].size()),
            "terrible");
  EXPECT_EQ(p.s1_span, (Span{0, 34}));
  EXPECT_FALSE(p.s2_span);
}

TEST(Template, FiveClassPrompt) {
  const auto task = load_task("sst-5");
  const auto p = render(task.parsed_template(), "This is one of his best films.",
                        std::nullopt, task.label_words);
  EXPECT_EQ(p.text,
            "This is one of his best films. It was great good okay bad terrible");
  EXPECT_EQ(p.label_spans.size(), 5u);
}

TEST(Template, PairPrompt) {
  const auto task = load_task("sts-b");
  const auto p = render(task.parsed_template(), "Kittens are eating food.",
                        std::string("Kittens are eating from dishes."),
                        task.label_words);
  EXPECT_EQ(p.text,
            "Kittens are eating food. No Yes, Kittens are eating from dishes.");
  ASSERT_TRUE(p.s2_span);
  EXPECT_EQ(p.text.substr(p.s2_span->start, p.s2_span->size()),
            "Kittens are eating from dishes.");
}

TEST(Template, LabelsFirst) {
  const auto p = render(Template::parse("{LABELS}: <S1>"), "Who is it?",
                        std::nullopt, {"Human", "Number"});
  EXPECT_EQ(p.text, "Human Number: Who is it?");
  EXPECT_EQ(p.label_spans[0], (Span{0, 5}));
  EXPECT_EQ(p.label_spans[1], (Span{6, 12}));
}

TEST(Template, EscapedBracesAndAngles) {
  const auto t = Template::parse("{{x}} <S1> a<b {LABELS}");
  const auto p = render(t, "s", std::nullopt, {"u", "v"});
  EXPECT_EQ(p.text, "{x} s a<b u v");
  EXPECT_EQ(Template::parse(t.to_string()), t);
}

TEST(Template, ParseErrors) {
  for (const char* bad :
       {"<S1> It was", "It was {LABELS}", "<S1> {LABELS} {LABELS}",
        "<S1> <S1> {LABELS}", "<S1> <S2> <S2> {LABELS}", "<S1> {LABEL}",
        "<S1> {LABELS", "<S1> } {LABELS}", "<S3> <S1> {LABELS}", "<S1> {"}) {
    EXPECT_THROW(Template::parse(bad), TemplateError) << bad;
  }
}

TEST(Template, SentenceCountMismatch) {
  const auto pair = Template::parse("<S1> ? {LABELS}, <S2>");
  EXPECT_THROW(render(pair, "a", std::nullopt, {"Yes", "No"}), TemplateError);
  const auto single = Template::parse("<S1> {LABELS}");
  EXPECT_THROW(render(single, "a", std::string("b"), {"Yes", "No"}),
               TemplateError);
  EXPECT_THROW(render(single, "a", std::nullopt, {}), TemplateError);
}

// Random templates: spans are ordered, disjoint and point at the words;
// sentence spans point at the sentences; to_string round-trips.
TEST(TemplateProperty, SpansPointAtLabelWords) {
  std::mt19937_64 gen(5);
  const std::vector<std::string> pieces = {" ", "It was ", ": ", "? ", ", ",
                                           "{{", "}}", "<x>", "a<b"};
  const std::vector<std::string> words = {"great", "bad", "Yes", "No",
                                          "maybe", "okay"};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> slots = {"<S1>", "{LABELS}"};
    const bool pair = gen() % 2;
    if (pair) slots.push_back("<S2>");
    std::shuffle(slots.begin(), slots.end(), gen);
    std::string src;
    for (const auto& s : slots) {
      src += pieces[gen() % pieces.size()];
      src += s;
    }
    src += pieces[gen() % pieces.size()];
    const auto t = Template::parse(src);
    ASSERT_EQ(Template::parse(t.to_string()), t) << src;

    std::vector<std::string> labels(words.begin(),
                                    words.begin() + 2 + gen() % 4);
    const std::string s1 = "first sentence " + std::to_string(trial) + ".";
    const std::optional<std::string> s2 =
        pair ? std::optional<std::string>("second one") : std::nullopt;
    const auto p = render(t, s1, s2, labels);
    ASSERT_EQ(p.label_spans.size(), labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto& sp = p.label_spans[i];
      EXPECT_EQ(p.text.substr(sp.start, sp.size()), labels[i]);
      if (i > 0) EXPECT_EQ(sp.start, p.label_spans[i - 1].end + 1);
    }
    EXPECT_EQ(p.text.substr(p.s1_span.start, p.s1_span.size()), s1);
    if (pair) {
      EXPECT_EQ(p.text.substr(p.s2_span->start, p.s2_span->size()), *s2);
    }
  }
}

}  // namespace
}  // namespace trd
