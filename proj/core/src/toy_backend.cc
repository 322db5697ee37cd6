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

#include <string>

#include "trd/backend.h"
#include "trd/discriminator.h"
#include "trd/error.h"
#include "trd/tokenizer.h"

namespace trd {
namespace {

PromptEncoding encode_record(const Vocab& vocab, const PromptRecord& r,
                             std::size_t max_length) {
  PromptEncoding enc;
  enc.tokens = encode(vocab, r.text, max_length);
  try {
    enc.label_positions = map_spans(enc.tokens, r.spans);
  } catch (const AlignmentError& e) {
    throw AlignmentError("record '" + r.id + "': " + e.what());
  }
  return enc;
}

}  // namespace

BackendResult run_job_toy(const BackendJob& job,
                          const ToyBackendOptions& options) {
  job.validate();
  if (job.train.empty()) throw BackendError("toy backend: no training records");
  const auto& hp = job.hyperparams;

  std::vector<std::string> corpus;
  corpus.reserve(job.train.size());
  for (const auto& r : job.train) corpus.push_back(r.text);
  const Vocab vocab = Vocab::build(corpus, options.min_count);

  std::vector<TrainingExample> data;
  data.reserve(job.train.size());
  for (const auto& r : job.train) {
    TrainingExample ex;
    ex.encoding = encode_record(vocab, r, hp.max_length);
    ex.target = expand_targets(ex.encoding, *r.targets, hp.loss_scope);
    data.push_back(std::move(ex));
  }

  ModelConfig mc;
  mc.vocab_size = vocab.size();
  mc.d_model = options.d_model;
  mc.num_layers = options.num_layers;
  mc.num_heads = options.num_heads;
  mc.ff_dim = options.ff_dim;
  mc.max_length = hp.max_length;

  TrainConfig tc;
  tc.learning_rate = hp.learning_rate;
  tc.batch_size = hp.batch_size;
  tc.epochs = hp.epochs;
  tc.weight_decay = hp.weight_decay;
  tc.adam_epsilon = hp.adam_epsilon;
  tc.max_length = hp.max_length;
  tc.seed = hp.seed;
  tc.loss_scope = hp.loss_scope;

  const auto trained = train(ModelParams::init(mc, hp.seed), data, tc);

  BackendResult result;
  for (const auto* set : {&job.dev, &job.test}) {
    for (const auto& r : *set) {
      const auto enc = encode_record(vocab, r, hp.max_length);
      result.probs.emplace(r.id, score_labels(trained.params, enc).p);
    }
  }
  return result;
}

}  // namespace trd
