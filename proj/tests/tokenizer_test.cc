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

#include "trd/tokenizer.h"

#include <gtest/gtest.h>

#include <random>

#include "test_util.h"
#include "trd/error.h"
#include "trd/template.h"

namespace trd {
namespace {

TEST(PreTokenize, WordsPunctuationOffsets) {
  const auto toks = pre_tokenize("I am so Excited, really!  Yes");
  std::vector<std::string> words;
  for (const auto& t : toks) words.push_back(t.lowered);
  EXPECT_EQ(words, (std::vector<std::string>{"i", "am", "so", "excited", ",",
                                             "really", "!", "yes"}));
  EXPECT_EQ(toks[3].offsets, (Span{8, 15}));
  EXPECT_EQ(toks[4].offsets, (Span{15, 16}));
  EXPECT_EQ(toks.back().offsets, (Span{26, 29}));
  EXPECT_TRUE(pre_tokenize("   ").empty());
}

TEST(Vocab, OrderAndReserved) {
  const auto v = Vocab::build({"b a b", "c b a", "A"});
  ASSERT_EQ(v.size(), kNumReserved + 3);
  EXPECT_EQ(v.token(kPadId), "[PAD]");
  EXPECT_EQ(v.token(kUnkId), "[UNK]");
  EXPECT_EQ(v.token(kClsId), "[CLS]");
  EXPECT_EQ(v.token(kSepId), "[SEP]");
  EXPECT_EQ(v.token(4), "a");  // 3 uses, ties broken lexicographically
  EXPECT_EQ(v.token(5), "b");
  EXPECT_EQ(v.token(6), "c");
  EXPECT_EQ(v.id("zzz"), kUnkId);
  EXPECT_EQ(Vocab::build({"x x y"}, 2).size(), kNumReserved + 1);
}

TEST(Vocab, SaveLoadRoundTrip) {
  testing::TempDir dir;
  const auto v = Vocab::build({"the cat sat on the mat ."});
  v.save(dir / "vocab.txt");
  EXPECT_EQ(Vocab::load(dir / "vocab.txt"), v);
  testing::write_text(dir / "bad.txt", "a\nb\n");
  EXPECT_THROW(Vocab::load(dir / "bad.txt"), TokenizerError);
}

TEST(Encode, WrapsAndTruncates) {
  const auto v = Vocab::build({"it was great terrible"});
  const auto seq = encode(v, "It was GREAT terrible", 256);
  ASSERT_EQ(seq.size(), 6u);
  EXPECT_EQ(seq.ids.front(), kClsId);
  EXPECT_EQ(seq.ids.back(), kSepId);
  EXPECT_EQ(seq.ids[3], v.id("great"));
  EXPECT_EQ(seq.offsets.size(), 4u);

  const auto cut = encode(v, "It was great terrible", 4);
  ASSERT_EQ(cut.size(), 4u);
  EXPECT_EQ(cut.ids.back(), kSepId);
  EXPECT_EQ(cut.offsets.size(), 2u);
  EXPECT_THROW(encode(v, "x", 2), TokenizerError);
}

TEST(MapSpans, ExactMatchOnly) {
  const auto v = Vocab::build({"a b"});
  const std::string text = "good movie. It was great terrible";
  const auto seq = encode(v, text, 256);
  EXPECT_EQ(map_spans(seq, {{19, 24}, {25, 33}}),
            (std::vector<std::size_t>{6, 7}));
  EXPECT_THROW(map_spans(seq, {{19, 23}}), AlignmentError);
  EXPECT_THROW(map_spans(seq, {{18, 24}}), AlignmentError);
  EXPECT_THROW(map_spans(seq, {{19, 33}}), AlignmentError);
  const auto cut = encode(v, text, 7);
  EXPECT_THROW(map_spans(cut, {{19, 24}, {25, 33}}), AlignmentError);
  // "so-so" splits into three tokens.
  const auto hy = encode(v, "It was so-so", 256);
  EXPECT_THROW(map_spans(hy, {{7, 12}}), AlignmentError);
}

// Rendered prompts with single-word labels always map, and each mapped
// token is the lowered label word.
TEST(MapSpansProperty, RenderedPromptsAlign) {
  std::mt19937_64 gen(11);
  const std::vector<std::string> vocab_words = {
      "the", "movie", "was", "fine", "Really", "plot", "acting", "dull"};
  const std::vector<std::string> labels = {"great", "Terrible", "okay", "Yes"};
  const auto t = Template::parse("<S1> It was {LABELS}.");
  std::vector<std::string> corpus;
  for (int trial = 0; trial < 300; ++trial) {
    std::string s;
    const int n = 1 + static_cast<int>(gen() % 12);
    for (int i = 0; i < n; ++i) {
      if (i) s += (gen() % 5 == 0) ? ", " : " ";
      s += vocab_words[gen() % vocab_words.size()];
    }
    if (gen() % 2) s += "!";
    const auto p = render(t, s, std::nullopt, labels);
    corpus.push_back(p.text);
    const auto v = Vocab::build(corpus);
    const auto seq = encode(v, p.text, 256);
    const auto pos = map_spans(seq, p.label_spans);
    ASSERT_EQ(pos.size(), labels.size());
    for (std::size_t i = 0; i < pos.size(); ++i) {
      std::string lowered = labels[i];
      for (auto& c : lowered) c = static_cast<char>(std::tolower(c));
      EXPECT_EQ(v.token(seq.ids[pos[i]]), lowered);
      if (i) EXPECT_GT(pos[i], pos[i - 1]);
    }
  }
}

}  // namespace
}  // namespace trd
