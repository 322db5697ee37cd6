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
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace trd {

// Half-open byte range [start, end) into a rendered string.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct Literal {
  std::string text;
  friend bool operator==(const Literal&, const Literal&) = default;
};
struct SlotS1 {
  friend bool operator==(const SlotS1&, const SlotS1&) = default;
};
struct SlotS2 {
  friend bool operator==(const SlotS2&, const SlotS2&) = default;
};
struct SlotLabels {
  friend bool operator==(const SlotLabels&, const SlotLabels&) = default;
};

using Segment = std::variant<Literal, SlotS1, SlotS2, SlotLabels>;

// Parsed prompt template. Holds exactly one <S1>, exactly one {LABELS} and
// at most one <S2>; everything else is literal text, spacing included.
class Template {
 public:
  // Grammar:
  //   template := ( literal | "<S1>" | "<S2>" | "{LABELS}" )*
  //   "{{" and "}}" are literal braces. Any other "{" or "}" is an error, as
  //   is "<S" followed by anything other than "1>" or "2>". A "<" that does
  //   not start "<S" is literal.
  static Template parse(std::string_view src);

  const std::vector<Segment>& segments() const { return segments_; }
  bool has_s2() const;

  // Canonical source form; parse(to_string()) == *this.
  std::string to_string() const;

  friend bool operator==(const Template&, const Template&) = default;

 private:
  explicit Template(std::vector<Segment> segments)
      : segments_(std::move(segments)) {}
  std::vector<Segment> segments_;
};

struct RenderedPrompt {
  std::string text;
  // One span per label word, in label-word order.
  std::vector<Span> label_spans;
  Span s1_span;
  std::optional<Span> s2_span;
};

// Expands the template. {LABELS} becomes the label words joined by one
// space; no other whitespace is inserted anywhere.
RenderedPrompt render(const Template& tmpl, std::string_view s1,
                      const std::optional<std::string>& s2,
                      const std::vector<std::string>& label_words);

}  // namespace trd
