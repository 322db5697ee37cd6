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
#include <string>
#include <vector>

#include "trd/task.h"

namespace trd::synthetic {

// Keyword-separable sentiment data over a ~200 word vocabulary. Every
// sentence mixes neutral filler words with keywords drawn from a positive
// or a negative pool. Used for end-to-end checks of the toy pipeline.

const std::vector<std::string>& positive_keywords();
const std::vector<std::string>& negative_keywords();
const std::vector<std::string>& filler_words();

// Two classes, template "<S1> It was {LABELS}", words [great, terrible];
// class 0 sentences carry positive keywords only, class 1 negative only.
TaskSpec sentiment_task();

// Regression on [0, 5], same template, words [terrible, great] for the low
// and high pole. Gold = 5 * (positive keywords / all keywords).
TaskSpec score_task();

struct Options {
  std::size_t min_words = 6;
  std::size_t max_words = 10;
  std::size_t keywords = 4;  // per sentiment sentence
  // Keywords drawn from the first pool_size words of each pool; 0 = all.
  std::size_t pool_size = 6;
};

// Balanced classes, alternating 0/1 before shuffling.
std::vector<DatasetExample> sentiment_examples(std::size_t count,
                                               std::uint64_t seed,
                                               const std::string& id_prefix,
                                               const Options& opt = {});

// Each sentence holds opt.keywords to opt.keywords + 2 keywords with a
// uniformly drawn positive share.
std::vector<DatasetExample> score_examples(std::size_t count,
                                           std::uint64_t seed,
                                           const std::string& id_prefix,
                                           const Options& opt = {});

// Tab-separated "s1<TAB>label" rows, readable with the default schema.
void write_tsv(const std::filesystem::path& path,
               const std::vector<DatasetExample>& examples);

}  // namespace trd::synthetic
