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
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "trd/codec.h"
#include "trd/tokenizer.h"

namespace trd {

// A small pre-norm transformer encoder with a per-token sigmoid detection
// head: P(replaced | x_t) = sigmoid(w . h(x_t)). The head is one vector
// shared by every position; there are no per-class parameters.
struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 64;
  std::size_t num_layers = 2;
  std::size_t num_heads = 4;
  std::size_t ff_dim = 0;  // 0 means 4 * d_model
  std::size_t max_length = 256;

  std::size_t head_dim() const { return d_model / num_heads; }
  std::size_t ff() const { return ff_dim == 0 ? 4 * d_model : ff_dim; }
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct TensorInfo {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
  bool decay = false;  // subject to weight decay
};

// All trainable weights live in one flat vector; TensorInfo entries name
// the slices. Sinusoidal position encodings are fixed and not stored.
class ModelParams {
 public:
  // Matrices and embeddings are Xavier-uniform, layer-norm gains 1,
  // offsets and biases 0. Bitwise reproducible given the seed.
  static ModelParams init(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  const TensorInfo& tensor_info(std::string_view name) const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> tensor(std::string_view name);
  std::span<const double> tensor(std::string_view name) const;
  std::span<double> head() { return tensor("head.w"); }

  std::vector<std::uint8_t> decay_mask() const;
  std::size_t size() const { return values_.size(); }

  // Versioned little-endian binary; layout in docs/checkpoint.md.
  void save(const std::filesystem::path& path) const;
  static ModelParams load(const std::filesystem::path& path);

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    return a.config_ == b.config_ && a.values_ == b.values_;
  }

 private:
  explicit ModelParams(const ModelConfig& config);
  ModelConfig config_;
  std::vector<TensorInfo> tensors_;
  std::vector<double> values_;
};

// Replaced-token probability per position. Positions holding [PAD] are
// masked out as attention keys.
std::vector<double> forward(const ModelParams& params,
                            std::span<const TokenId> ids);

inline constexpr double kProbClip = 1e-7;

// Mean binary cross-entropy over the masked positions, with predictions
// clipped to [1e-7, 1 - 1e-7]. Soft targets are allowed.
double bce_loss(std::span<const double> probs, const TargetVector& target);

// Adds d(sum of masked BCE terms)/d(params) into grad and returns that sum.
// Divide both by the masked count to get the mean loss and its gradient.
double accumulate_gradient(const ModelParams& params,
                           std::span<const TokenId> ids,
                           const TargetVector& target, std::span<double> grad);

struct TrainConfig {
  double learning_rate = 2e-5;
  std::size_t batch_size = 4;
  std::size_t epochs = 20;
  double weight_decay = 2e-3;
  double adam_epsilon = 1e-8;
  std::size_t max_length = 256;
  std::uint64_t seed = 42;
  LossScope loss_scope = LossScope::kFullSequence;
  double clip_norm = 1.0;  // <= 0 disables clipping

  void validate() const;
};

struct TrainingExample {
  PromptEncoding encoding;
  TargetVector target;
};

struct TrainResult {
  ModelParams params;
  // Mean batch loss of each epoch.
  std::vector<double> epoch_loss;
};

// Mini-batch AdamW. Batch loss is the mean over every masked position in
// the batch; the global gradient norm is clipped to clip_norm. The shuffle
// order comes from cfg.seed, so the result is a pure function of the
// inputs. Throws TrainingError on a non-finite loss.
TrainResult train(ModelParams params, std::span<const TrainingExample> data,
                  const TrainConfig& cfg);

// Replaced probabilities at the label positions of one prompt.
LabelProbabilities score_labels(const ModelParams& params,
                                const PromptEncoding& enc);

// Gradient of the mean loss of one example: fills grad, returns the loss.
using GradientFn = std::function<double(
    const ModelParams&, const TrainingExample&, std::span<double>)>;

GradientFn analytic_gradient();

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_abs_analytic = 0.0;
  double max_abs_numeric = 0.0;
  std::size_t coordinates = 0;
  std::string worst_tensor;
};

// Compares the gradient against central finite differences on a random
// subset of coordinates: a few from every tensor, topped up uniformly to
// at least `coordinates` entries. Relative error per coordinate is
// |a - n| / max(|a| + |n|, 1e-6).
GradCheckResult grad_check(const ModelParams& params,
                           const TrainingExample& sample, double epsilon,
                           std::size_t coordinates = 256,
                           std::uint64_t seed = 0,
                           const GradientFn& gradient = analytic_gradient());

}  // namespace trd
