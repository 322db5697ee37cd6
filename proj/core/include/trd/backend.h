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

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trd/codec.h"
#include "trd/template.h"

namespace trd {

// Backend contract: a backend receives prompt text with label-word
// character spans and word-level targets, fine-tunes a discriminator and
// answers with one replaced probability per label word for every dev and
// test record. Token ids never cross the boundary.

enum class JobKind { kClassification, kRegression };

std::string_view job_kind_name(JobKind kind);
std::string_view loss_scope_name(LossScope scope);
LossScope parse_loss_scope(std::string_view name);

struct Hyperparams {
  double learning_rate = 2e-5;
  std::size_t batch_size = 4;
  std::size_t epochs = 20;
  double weight_decay = 2e-3;
  double adam_epsilon = 1e-8;
  std::size_t max_length = 256;
  std::uint64_t seed = 42;
  LossScope loss_scope = LossScope::kFullSequence;
};

struct PromptRecord {
  std::string id;
  std::string text;
  std::vector<Span> spans;
  // One target per span; absent for test records.
  std::optional<std::vector<double>> targets;
};

struct BackendJob {
  JobKind kind = JobKind::kClassification;
  Hyperparams hyperparams;
  std::vector<PromptRecord> train;
  std::vector<PromptRecord> dev;
  std::vector<PromptRecord> test;

  // Throws ProtocolError: spans in range, ascending and non-overlapping;
  // targets sized to spans and in [0, 1]; train targets present; ids
  // unique across all three sets.
  void validate() const;
};

struct BackendResult {
  // Record id -> replaced probability per label word, in span order.
  std::map<std::string, std::vector<double>> probs;
};

inline constexpr int kWireVersion = 1;

// Single-line JSON encodings used on the wire.
std::string job_to_json(const BackendJob& job);
BackendJob job_from_json(std::string_view text);
std::string result_to_json(const BackendResult& result);
BackendResult result_from_json(std::string_view text);

// Result ids must equal dev ids plus test ids exactly, every list must have
// one probability per span, every probability in [0, 1]. Errors name the
// offending id.
void validate_result(const BackendJob& job, const BackendResult& result);

class Backend {
 public:
  virtual ~Backend() = default;
  // Must be safe to call concurrently on distinct jobs.
  virtual BackendResult run(const BackendJob& job) = 0;
  virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// Toy backend: word-level tokenizer plus the from-scratch discriminator.

struct ToyBackendOptions {
  std::size_t d_model = 64;
  std::size_t num_layers = 2;
  std::size_t num_heads = 4;
  std::size_t ff_dim = 0;
  std::size_t min_count = 1;
};

// Builds the vocabulary from the training prompts (unseen words map to
// [UNK]), expands word targets to per-token targets, trains and scores the
// dev and test records at their label positions. Initialisation and
// shuffling are both keyed by hyperparams.seed.
BackendResult run_job_toy(const BackendJob& job,
                          const ToyBackendOptions& options = {});

class ToyBackend final : public Backend {
 public:
  explicit ToyBackend(ToyBackendOptions options = {}) : options_(options) {}
  BackendResult run(const BackendJob& job) override {
    return run_job_toy(job, options_);
  }
  std::string name() const override { return "toy"; }

 private:
  ToyBackendOptions options_;
};

// ---------------------------------------------------------------------------
// External backend: any executable speaking the line-delimited protocol.

struct ExternalBackendOptions {
  // Run through /bin/sh -c.
  std::string command;
  std::chrono::milliseconds timeout{std::chrono::minutes(60)};
  // Pass --job-file/--result-file instead of using stdin/stdout.
  bool file_handoff = false;
};

BackendResult run_job_external(const BackendJob& job,
                               const ExternalBackendOptions& options);

class ExternalBackend final : public Backend {
 public:
  explicit ExternalBackend(ExternalBackendOptions options)
      : options_(std::move(options)) {}
  BackendResult run(const BackendJob& job) override {
    return run_job_external(job, options_);
  }
  std::string name() const override { return "external:" + options_.command; }

 private:
  ExternalBackendOptions options_;
};

// "toy" or "external:<command>".
std::unique_ptr<Backend> make_backend(
    std::string_view selector, const ToyBackendOptions& toy = {},
    std::chrono::milliseconds timeout = std::chrono::minutes(60),
    bool file_handoff = false);

}  // namespace trd
