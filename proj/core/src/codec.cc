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

#include <algorithm>
#include <cmath>
#include <string>

#include "trd/error.h"

namespace trd {
namespace {

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0))
    throw CodecError(std::string(what) + " must lie in [0, 1], got " +
                     std::to_string(p));
}

}  // namespace

void PromptEncoding::validate() const {
  if (label_positions.size() < 2)
    throw CodecError("a prompt needs at least two label positions");
  for (std::size_t i = 0; i < label_positions.size(); ++i) {
    if (label_positions[i] >= tokens.size())
      throw CodecError("label position " +
                       std::to_string(label_positions[i]) +
                       " outside a sequence of " +
                       std::to_string(tokens.size()) + " tokens");
    if (i > 0 && label_positions[i] <= label_positions[i - 1])
      throw CodecError("label positions must be strictly ascending");
  }
}

std::vector<double> classification_word_targets(std::size_t num_labels,
                                                std::size_t gold) {
  if (num_labels < 2)
    throw CodecError("a task needs at least two label words");
  if (gold >= num_labels)
    throw CodecError("gold class " + std::to_string(gold) +
                     " out of range for " + std::to_string(num_labels) +
                     " labels");
  std::vector<double> t(num_labels, 1.0);
  t[gold] = 0.0;
  return t;
}

std::vector<double> regression_word_targets(double y, double low,
                                            double high) {
  if (!(low < high)) throw CodecError("regression interval needs low < high");
  if (!(y >= low && y <= high))
    throw CodecError("regression target " + std::to_string(y) +
                     " outside [" + std::to_string(low) + ", " +
                     std::to_string(high) + "]");
  const double p_low = (high - y) / (high - low);
  const double p_high = (y - low) / (high - low);
  return {1.0 - p_low, 1.0 - p_high};
}

TargetVector expand_targets(const PromptEncoding& enc,
                            std::span<const double> word_targets,
                            LossScope scope) {
  enc.validate();
  if (word_targets.size() != enc.label_positions.size())
    throw CodecError("got " + std::to_string(word_targets.size()) +
                     " word targets for " +
                     std::to_string(enc.label_positions.size()) +
                     " label positions");
  const std::size_t n = enc.tokens.size();
  TargetVector tv;
  tv.values.assign(n, 0.0);
  tv.loss_mask.assign(n, scope == LossScope::kFullSequence);
  for (std::size_t i = 0; i < word_targets.size(); ++i) {
    check_probability(word_targets[i], "word target");
    const auto pos = enc.label_positions[i];
    if (pos >= n) throw CodecError("label position outside the sequence");
    tv.values[pos] = word_targets[i];
    tv.loss_mask[pos] = true;
  }
  return tv;
}

TargetVector build_classification_targets(const PromptEncoding& enc,
                                          std::size_t gold, LossScope scope) {
  const auto words =
      classification_word_targets(enc.label_positions.size(), gold);
  return expand_targets(enc, words, scope);
}

TargetVector build_regression_targets(const PromptEncoding& enc, double y,
                                      double low, double high,
                                      LossScope scope) {
  if (enc.label_positions.size() != 2)
    throw CodecError("regression prompts carry exactly two label words");
  const auto words = regression_word_targets(y, low, high);
  return expand_targets(enc, words, scope);
}

ClassPrediction decode_classification(const LabelProbabilities& probs) {
  if (probs.p.size() < 2)
    throw CodecError("decoding needs at least two label probabilities");
  std::size_t best = 0;
  for (std::size_t i = 0; i < probs.p.size(); ++i) {
    check_probability(probs.p[i], "label probability");
    if (probs.p[i] < probs.p[best]) best = i;
  }
  return {best};
}

ValuePrediction decode_regression(double y_low, double y_high, double low,
                                  double high) {
  check_probability(y_low, "y_low");
  check_probability(y_high, "y_high");
  if (!(low < high)) throw CodecError("regression interval needs low < high");
  const double p_low = 1.0 - y_low;
  const double p_high = 1.0 - y_high;
  const double z = p_low + p_high;
  if (z == 0.0) return {0.5 * (low + high), true};
  const double q_low = p_low / z;
  const double q_high = p_high / z;
  return {std::clamp(low * q_low + high * q_high, low, high), false};
}

}  // namespace trd
