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
#include <string_view>
#include <unordered_map>
#include <vector>

#include "trd/template.h"

namespace trd {

using TokenId = std::uint32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr TokenId kClsId = 2;
inline constexpr TokenId kSepId = 3;
inline constexpr std::size_t kNumReserved = 4;

// Word-level vocabulary with four reserved ids. Immutable once built.
class Vocab {
 public:
  // Lowercased word types with count >= min_count, ordered by descending
  // frequency and then lexicographically, after the reserved tokens.
  static Vocab build(const std::vector<std::string>& corpus,
                     std::size_t min_count = 1);

  // One token per line; line i holds id i, reserved tokens first.
  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  TokenId id(std::string_view lowered_token) const;
  const std::string& token(TokenId id) const { return tokens_.at(id); }

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  explicit Vocab(std::vector<std::string> tokens);
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

struct RawToken {
  std::string lowered;
  Span offsets;
};

// Splits on whitespace; every ASCII punctuation character is a token of
// its own, runs of other bytes form words. Offsets are byte offsets.
std::vector<RawToken> pre_tokenize(std::string_view text);

struct TokenSeq {
  std::vector<TokenId> ids;
  // One entry per non-special token; ids[j + 1] pairs with offsets[j]
  // because the sequence opens with [CLS].
  std::vector<Span> offsets;

  std::size_t size() const { return ids.size(); }
  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

// [CLS] tokens... [SEP], cut to max_length by dropping trailing tokens.
TokenSeq encode(const Vocab& vocab, std::string_view text,
                std::size_t max_length);

// Maps each character span to the index (in seq.ids) of the single token
// whose offsets equal it. Throws AlignmentError when a span straddles or
// splits tokens, or its token was truncated away.
std::vector<std::size_t> map_spans(const TokenSeq& seq,
                                   const std::vector<Span>& spans);

}  // namespace trd
