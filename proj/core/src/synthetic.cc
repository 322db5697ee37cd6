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

#include "trd/synthetic.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "trd/error.h"
#include "trd/rng.h"

namespace trd::synthetic {
namespace {

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& pool, std::size_t limit = 0) {
  const std::size_t n =
      limit == 0 ? pool.size() : std::min(limit, pool.size());
  return pool[rng.uniform_index(n)];
}

// Builds a sentence of filler words and splices the keywords in at random
// positions.
std::string make_sentence(Rng& rng, const std::vector<std::string>& keywords,
                          const Options& opt) {
  const std::size_t span = opt.max_words - opt.min_words + 1;
  std::size_t length = opt.min_words + rng.uniform_index(span);
  if (length < keywords.size()) length = keywords.size();
  std::vector<std::string> words;
  for (std::size_t i = 0; i + keywords.size() < length; ++i)
    words.push_back(pick(rng, filler_words()));
  for (const auto& kw : keywords) {
    const auto at = rng.uniform_index(words.size() + 1);
    words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), kw);
  }
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += words[i];
  }
  out.push_back('.');
  return out;
}

}  // namespace

const std::vector<std::string>& positive_keywords() {
  static const std::vector<std::string> words = {
      "wonderful", "brilliant", "delightful", "superb",   "charming",
      "excellent", "moving",    "beautiful",  "fantastic", "enjoyable",
      "masterful", "stunning",  "touching",   "witty",    "gripping",
      "lovely",    "inspired",  "marvelous",  "pleasant", "remarkable"};
  return words;
}

const std::vector<std::string>& negative_keywords() {
  static const std::vector<std::string> words = {
      "awful",     "boring",    "dull",     "horrible", "tedious",
      "clumsy",    "painful",   "dreadful", "lifeless", "mediocre",
      "annoying",  "bland",     "messy",    "pointless", "weak",
      "stale",     "sloppy",    "tiresome", "forgettable", "lousy"};
  return words;
}

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = [] {
    const char* text =
        "the a an this that these those it its his her their our my your "
        "movie film story plot script scene scenes cast actor actress "
        "director camera music score sound ending opening middle "
        "character characters dialogue pace tone style visuals effects "
        "version sequel premise theme setting drama comedy thriller "
        "romance mystery documentary feature series episode show "
        "audience viewer critics people family friends kids adults "
        "was is are were seems felt looks feels becomes remains stays "
        "turns goes comes makes takes gives shows tells brings keeps "
        "and but or so yet while with without about around through "
        "over under after before during into onto from for of in on "
        "at by as like than then also still just really quite rather "
        "mostly mainly often sometimes always never almost nearly "
        "fairly somewhat very too much more most less least "
        "first second final last whole entire full long short new old "
        "early late recent other another same different each every "
        "some many few several both either neither all any enough "
        "today tonight yesterday week year hour minute moment time "
        "city town house room street night day morning evening summer";
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string w; in >> w;) out.push_back(w);
    return out;
  }();
  return words;
}

TaskSpec sentiment_task() {
  TaskSpec t;
  t.name = "synth-sentiment";
  t.kind = Classification{2};
  t.template_src = "<S1> It was {LABELS}";
  t.label_words = {"great", "terrible"};
  t.metric = Metric::kAccuracy;
  t.sentence_count = 1;
  t.validate();
  return t;
}

TaskSpec score_task() {
  TaskSpec t;
  t.name = "synth-score";
  t.kind = Regression{0.0, 5.0};
  t.template_src = "<S1> It was {LABELS}";
  t.label_words = {"terrible", "great"};
  t.metric = Metric::kPearson;
  t.sentence_count = 1;
  t.validate();
  return t;
}

std::vector<DatasetExample> sentiment_examples(std::size_t count,
                                               std::uint64_t seed,
                                               const std::string& id_prefix,
                                               const Options& opt) {
  Rng rng(seed);
  std::vector<DatasetExample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t label = i % 2;
    const auto& pool = label == 0 ? positive_keywords() : negative_keywords();
    std::vector<std::string> kws;
    for (std::size_t k = 0; k < opt.keywords; ++k)
      kws.push_back(pick(rng, pool, opt.pool_size));
    out.push_back({id_prefix + "-" + std::to_string(i),
                   make_sentence(rng, kws, opt), std::nullopt, Gold{label}});
  }
  return out;
}

std::vector<DatasetExample> score_examples(std::size_t count,
                                           std::uint64_t seed,
                                           const std::string& id_prefix,
                                           const Options& opt) {
  Rng rng(seed);
  std::vector<DatasetExample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t total = opt.keywords + rng.uniform_index(3);
    const std::size_t positive = rng.uniform_index(total + 1);
    std::vector<std::string> kws;
    for (std::size_t k = 0; k < total; ++k)
      kws.push_back(pick(rng,
                         k < positive ? positive_keywords() : negative_keywords(),
                         opt.pool_size));
    const double gold =
        5.0 * static_cast<double>(positive) / static_cast<double>(total);
    out.push_back({id_prefix + "-" + std::to_string(i),
                   make_sentence(rng, kws, opt), std::nullopt, Gold{gold}});
  }
  return out;
}

void write_tsv(const std::filesystem::path& path,
               const std::vector<DatasetExample>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write " + path.string());
  for (const auto& ex : examples) {
    out << ex.s1 << '\t';
    if (const auto* c = std::get_if<std::size_t>(&ex.gold)) {
      out << *c;
    } else {
      std::ostringstream v;
      v.precision(17);
      v << std::get<double>(ex.gold);
      out << v.str();
    }
    out << '\n';
  }
  if (!out) throw DatasetError("I/O error writing " + path.string());
}

}  // namespace trd::synthetic
