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
#include <span>
#include <variant>
#include <vector>

#include "trd/tokenizer.h"

namespace trd {

// Which positions contribute to the detection loss.
enum class LossScope {
  kFullSequence,    // every token, off-label tokens with target 0
  kLabelPositions,  // label description words only
};

struct PromptEncoding {
  TokenSeq tokens;
  // Token indices t_1..t_k of the label words, strictly ascending.
  std::vector<std::size_t> label_positions;

  // Throws CodecError unless positions are strictly ascending, in range and
  // number at least two.
  void validate() const;
};

struct TargetVector {
  std::vector<double> values;
  std::vector<bool> loss_mask;
};

struct LabelProbabilities {
  // p[i] = probability that label word i was replaced.
  std::vector<double> p;
};

struct ClassPrediction {
  std::size_t index = 0;
};

struct ValuePrediction {
  double value = 0.0;
  // Both pole probabilities were zero; value is the interval midpoint.
  bool degenerate = false;
};

using Prediction = std::variant<ClassPrediction, ValuePrediction>;

// Per-label-word targets: 0 for the gold word ("original"), 1 for every
// other word ("replaced").
std::vector<double> classification_word_targets(std::size_t num_labels,
                                                std::size_t gold);

// Soft targets for the two pole words. With the interpolated posteriors
//   P(low)  = (high - y) / (high - low)
//   P(high) = (y - low)  / (high - low)
// the words get 1 - P(low) and 1 - P(high).
std::vector<double> regression_word_targets(double y, double low, double high);

// Places word_targets at the label positions, 0 everywhere else.
TargetVector expand_targets(const PromptEncoding& enc,
                            std::span<const double> word_targets,
                            LossScope scope = LossScope::kFullSequence);

TargetVector build_classification_targets(
    const PromptEncoding& enc, std::size_t gold,
    LossScope scope = LossScope::kFullSequence);

TargetVector build_regression_targets(
    const PromptEncoding& enc, double y, double low, double high,
    LossScope scope = LossScope::kFullSequence);

// The least-replaced word wins: argmin_i p_i, lowest index on ties.
ClassPrediction decode_classification(const LabelProbabilities& probs);

// y_low / y_high are the replaced probabilities of the two pole words.
// The original-probabilities 1 - y are renormalised to sum to one and the
// value interpolated between the poles.
ValuePrediction decode_regression(double y_low, double y_high, double low,
                                  double high);

}  // namespace trd
