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

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "trd/error.h"

namespace trd {
namespace {

const char* const kReserved[kNumReserved] = {"[PAD]", "[UNK]", "[CLS]",
                                             "[SEP]"};

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_punct(unsigned char c) {
  return c < 0x80 && std::ispunct(c) != 0;
}

char lower(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a')
                                : static_cast<char>(c);
}

}  // namespace

std::vector<RawToken> pre_tokenize(std::string_view text) {
  std::vector<RawToken> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      ++i;
    } else if (is_punct(c)) {
      out.push_back({std::string(1, lower(c)), {i, i + 1}});
      ++i;
    } else {
      const std::size_t start = i;
      std::string word;
      while (i < text.size()) {
        const auto d = static_cast<unsigned char>(text[i]);
        if (is_space(d) || is_punct(d)) break;
        word.push_back(lower(d));
        ++i;
      }
      out.push_back({std::move(word), {start, i}});
    }
  }
  return out;
}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second)
      throw TokenizerError("duplicate vocabulary entry '" + tokens_[i] + "'");
  }
}

Vocab Vocab::build(const std::vector<std::string>& corpus,
                   std::size_t min_count) {
  if (corpus.empty()) throw TokenizerError("cannot build a vocab from an empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& line : corpus)
    for (auto& tok : pre_tokenize(line)) ++counts[std::move(tok.lowered)];

  std::vector<std::pair<std::string, std::size_t>> types;
  for (auto& [word, n] : counts) {
    if (n < min_count) continue;
    if (std::find(std::begin(kReserved), std::end(kReserved), word) !=
        std::end(kReserved))
      continue;
    types.emplace_back(word, n);
  }
  std::stable_sort(types.begin(), types.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  std::vector<std::string> tokens(std::begin(kReserved), std::end(kReserved));
  for (auto& [word, n] : types) tokens.push_back(std::move(word));
  return Vocab(std::move(tokens));
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TokenizerError("cannot open vocab " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  if (tokens.size() < kNumReserved)
    throw TokenizerError("vocab file is missing reserved tokens");
  for (std::size_t i = 0; i < kNumReserved; ++i)
    if (tokens[i] != kReserved[i])
      throw TokenizerError("vocab line " + std::to_string(i + 1) +
                           " must be " + kReserved[i]);
  return Vocab(std::move(tokens));
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TokenizerError("cannot write vocab " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw TokenizerError("I/O error writing " + path.string());
}

TokenId Vocab::id(std::string_view lowered_token) const {
  const auto it = index_.find(std::string(lowered_token));
  return it == index_.end() ? kUnkId : it->second;
}

TokenSeq encode(const Vocab& vocab, std::string_view text,
                std::size_t max_length) {
  if (max_length < 3)
    throw TokenizerError("max_length must be at least 3");
  const auto raw = pre_tokenize(text);
  const std::size_t keep = std::min(raw.size(), max_length - 2);
  TokenSeq seq;
  seq.ids.reserve(keep + 2);
  seq.offsets.reserve(keep);
  seq.ids.push_back(kClsId);
  for (std::size_t j = 0; j < keep; ++j) {
    seq.ids.push_back(vocab.id(raw[j].lowered));
    seq.offsets.push_back(raw[j].offsets);
  }
  seq.ids.push_back(kSepId);
  return seq;
}

std::vector<std::size_t> map_spans(const TokenSeq& seq,
                                   const std::vector<Span>& spans) {
  std::vector<std::size_t> positions;
  positions.reserve(spans.size());
  for (const auto& span : spans) {
    const auto it = std::lower_bound(
        seq.offsets.begin(), seq.offsets.end(), span.start,
        [](const Span& off, std::size_t start) { return off.start < start; });
    if (it == seq.offsets.end() || *it != span) {
      const bool truncated =
          !seq.offsets.empty() && span.start >= seq.offsets.back().end;
      throw AlignmentError(
          "label span [" + std::to_string(span.start) + ", " +
          std::to_string(span.end) + ") " +
          (truncated ? "was truncated away"
                     : "does not coincide with exactly one token"));
    }
    positions.push_back(
        static_cast<std::size_t>(it - seq.offsets.begin()) + 1);
  }
  return positions;
}

}  // namespace trd
