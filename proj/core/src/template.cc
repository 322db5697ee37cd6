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

#include "trd/template.h"

#include "trd/error.h"

namespace trd {
namespace {

constexpr std::string_view kS1 = "<S1>";
constexpr std::string_view kS2 = "<S2>";
constexpr std::string_view kLabels = "{LABELS}";

std::string position_note(std::size_t pos) {
  return " at offset " + std::to_string(pos);
}

}  // namespace

Template Template::parse(std::string_view src) {
  std::vector<Segment> segments;
  std::string pending;
  int s1_count = 0, s2_count = 0, labels_count = 0;

  auto flush = [&] {
    if (!pending.empty()) {
      segments.emplace_back(Literal{std::move(pending)});
      pending.clear();
    }
  };

  std::size_t i = 0;
  while (i < src.size()) {
    const std::string_view rest = src.substr(i);
    if (rest.starts_with("{{")) {
      pending.push_back('{');
      i += 2;
    } else if (rest.starts_with("}}")) {
      pending.push_back('}');
      i += 2;
    } else if (rest.starts_with(kLabels)) {
      if (++labels_count > 1)
        throw TemplateError("duplicate {LABELS} slot" + position_note(i));
      flush();
      segments.emplace_back(SlotLabels{});
      i += kLabels.size();
    } else if (rest.front() == '{') {
      throw TemplateError("unbalanced placeholder: '{' does not open {LABELS}" +
                          position_note(i));
    } else if (rest.front() == '}') {
      throw TemplateError("unbalanced placeholder: stray '}'" +
                          position_note(i));
    } else if (rest.starts_with(kS1)) {
      if (++s1_count > 1)
        throw TemplateError("duplicate <S1> slot" + position_note(i));
      flush();
      segments.emplace_back(SlotS1{});
      i += kS1.size();
    } else if (rest.starts_with(kS2)) {
      if (++s2_count > 1)
        throw TemplateError("duplicate <S2> slot" + position_note(i));
      flush();
      segments.emplace_back(SlotS2{});
      i += kS2.size();
    } else if (rest.starts_with("<S")) {
      throw TemplateError("unbalanced placeholder: expected <S1> or <S2>" +
                          position_note(i));
    } else {
      pending.push_back(rest.front());
      ++i;
    }
  }
  flush();

  if (labels_count == 0) throw TemplateError("template is missing {LABELS}");
  if (s1_count == 0) throw TemplateError("template is missing <S1>");
  return Template(std::move(segments));
}

bool Template::has_s2() const {
  for (const auto& seg : segments_)
    if (std::holds_alternative<SlotS2>(seg)) return true;
  return false;
}

std::string Template::to_string() const {
  std::string out;
  for (const auto& seg : segments_) {
    if (const auto* lit = std::get_if<Literal>(&seg)) {
      for (char c : lit->text) {
        if (c == '{' || c == '}') out.push_back(c);
        out.push_back(c);
      }
    } else if (std::holds_alternative<SlotS1>(seg)) {
      out += kS1;
    } else if (std::holds_alternative<SlotS2>(seg)) {
      out += kS2;
    } else {
      out += kLabels;
    }
  }
  return out;
}

RenderedPrompt render(const Template& tmpl, std::string_view s1,
                      const std::optional<std::string>& s2,
                      const std::vector<std::string>& label_words) {
  if (label_words.empty()) throw TemplateError("no label words to render");
  if (tmpl.has_s2() && !s2)
    throw TemplateError("template has <S2> but no second sentence was given");
  if (!tmpl.has_s2() && s2)
    throw TemplateError(
        "second sentence given but the template has no <S2> slot");

  RenderedPrompt out;
  for (const auto& seg : tmpl.segments()) {
    if (const auto* lit = std::get_if<Literal>(&seg)) {
      out.text += lit->text;
    } else if (std::holds_alternative<SlotS1>(seg)) {
      out.s1_span = {out.text.size(), out.text.size() + s1.size()};
      out.text += s1;
    } else if (std::holds_alternative<SlotS2>(seg)) {
      out.s2_span = Span{out.text.size(), out.text.size() + s2->size()};
      out.text += *s2;
    } else {
      for (std::size_t w = 0; w < label_words.size(); ++w) {
        if (w > 0) out.text.push_back(' ');
        const std::size_t start = out.text.size();
        out.text += label_words[w];
        out.label_spans.push_back({start, out.text.size()});
      }
    }
  }
  return out;
}

}  // namespace trd
