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

#include "trd/codec.h"

#include <gtest/gtest.h>

#include <random>

#include "trd/error.h"

namespace trd {
namespace {

PromptEncoding encoding(std::size_t length, std::vector<std::size_t> labels) {
  PromptEncoding e;
  e.tokens.ids.assign(length, 7);
  e.label_positions = std::move(labels);
  return e;
}

TEST(Targets, FiveClassTrailingPattern) {
  // "... films . It was great good okay bad terrible" plus [SEP]: labels
  // are the five positions before [SEP]; gold is "great".
  const auto enc = encoding(14, {8, 9, 10, 11, 12});
  const auto t = build_classification_targets(enc, 0);
  ASSERT_EQ(t.values.size(), 14u);
  const std::vector<double> tail(t.values.end() - 6, t.values.end() - 1);
  EXPECT_EQ(tail, (std::vector<double>{0, 1, 1, 1, 1}));
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(t.values[i], 0.0);
  EXPECT_EQ(t.values[13], 0.0);
  for (bool m : t.loss_mask) EXPECT_TRUE(m);
}

TEST(Targets, LabelOnlyMask) {
  const auto enc = encoding(6, {2, 4});
  const auto t = build_classification_targets(enc, 1, LossScope::kLabelPositions);
  EXPECT_EQ(t.values, (std::vector<double>{0, 0, 1, 0, 0, 0}));
  EXPECT_EQ(t.loss_mask,
            (std::vector<bool>{false, false, true, false, true, false}));
}

TEST(Targets, RegressionSoftTargets) {
  const auto enc = encoding(12, {5, 6});
  const auto t = build_regression_targets(enc, 4.0, 0.0, 5.0);
  EXPECT_NEAR(t.values[5], 0.8, 1e-12);
  EXPECT_NEAR(t.values[6], 0.2, 1e-12);
  EXPECT_EQ(t.values[4], 0.0);
  EXPECT_EQ(t.values[7], 0.0);
  EXPECT_THROW(build_regression_targets(encoding(12, {1, 2, 3}), 1, 0, 5),
               CodecError);
  EXPECT_THROW(regression_word_targets(6.0, 0.0, 5.0), CodecError);
  EXPECT_THROW(regression_word_targets(1.0, 2.0, 2.0), CodecError);
}

TEST(Targets, WordTargetErrors) {
  EXPECT_THROW(classification_word_targets(2, 2), CodecError);
  EXPECT_THROW(classification_word_targets(1, 0), CodecError);
  EXPECT_THROW(build_classification_targets(encoding(5, {3, 2}), 0),
               CodecError);
  EXPECT_THROW(build_classification_targets(encoding(5, {3, 5}), 0),
               CodecError);
}

TEST(Decode, ClassificationArgminAndTies) {
  EXPECT_EQ(decode_classification({{0.9, 0.1}}).index, 1u);
  EXPECT_EQ(decode_classification({{0.5, 0.5}}).index, 0u);
  EXPECT_EQ(decode_classification({{0.7, 0.2, 0.2, 0.9}}).index, 1u);
  EXPECT_THROW(decode_classification({{0.5}}), CodecError);
  EXPECT_THROW(decode_classification({{0.5, 1.5}}), CodecError);
  EXPECT_THROW(decode_classification({{0.5, std::nan("")}}), CodecError);
}

TEST(Decode, RegressionExamples) {
  // Original probabilities 0.2 and 0.8 interpolate to 4.0.
  const auto v = decode_regression(0.8, 0.2, 0.0, 5.0);
  EXPECT_NEAR(v.value, 4.0, 1e-12);
  EXPECT_FALSE(v.degenerate);
  // Unnormalised pairs renormalise: originals 0.1 and 0.1 give the midpoint.
  EXPECT_NEAR(decode_regression(0.9, 0.9, 0.0, 5.0).value, 2.5, 1e-12);
  const auto d = decode_regression(1.0, 1.0, 1.0, 3.0);
  EXPECT_TRUE(d.degenerate);
  EXPECT_EQ(d.value, 2.0);
  EXPECT_THROW(decode_regression(-0.1, 0.5, 0.0, 5.0), CodecError);
}

// Targets carry a proper distribution over the two poles and every value
// stays inside [0, 1].
TEST(TargetsProperty, RegressionTargetsAreComplementary) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double lo = -10 + 20 * u(gen), hi = lo + 0.01 + 10 * u(gen);
    const double y = lo + (hi - lo) * u(gen);
    const auto t = regression_word_targets(y, lo, hi);
    ASSERT_EQ(t.size(), 2u);
    EXPECT_NEAR((1 - t[0]) + (1 - t[1]), 1.0, 1e-12);
    for (double x : t) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
    }
  }
}

TEST(TargetsProperty, ClassificationHasOneZero) {
  for (std::size_t k = 2; k <= 10; ++k)
    for (std::size_t g = 0; g < k; ++g) {
      const auto t = classification_word_targets(k, g);
      for (std::size_t i = 0; i < k; ++i) EXPECT_EQ(t[i], i == g ? 0.0 : 1.0);
    }
}

}  // namespace
}  // namespace trd
