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

#include "trd/task.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "trd/error.h"
#include "trd/rng.h"

namespace trd {
namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    if (auto item = trim(s.substr(pos, end - pos)); !item.empty())
      out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

TaskSpec cls(std::string name, std::string tmpl,
             std::vector<std::string> words, Metric metric, int sentences) {
  TaskSpec t;
  t.name = std::move(name);
  t.kind = Classification{words.size()};
  t.template_src = std::move(tmpl);
  t.label_words = std::move(words);
  t.metric = metric;
  t.sentence_count = sentences;
  return t;
}

std::vector<TaskSpec> make_builtins() {
  const std::string it_was = "<S1> It was {LABELS}";
  const std::string this_is = "<S1> This is {LABELS}";
  const std::string nli = "<S1> ? {LABELS}, <S2>";
  const std::string pair = "<S1> {LABELS}, <S2>";
  const std::vector<std::string> pos_neg = {"great", "terrible"};
  const std::vector<std::string> three_way = {"Yes", "Maybe", "No"};
  const std::vector<std::string> yes_no = {"Yes", "No"};

  std::vector<TaskSpec> tasks = {
      cls("sst-2", it_was, pos_neg, Metric::kAccuracy, 1),
      cls("sst-5", it_was, {"great", "good", "okay", "bad", "terrible"},
          Metric::kAccuracy, 1),
      cls("mr", it_was, pos_neg, Metric::kAccuracy, 1),
      cls("cr", it_was, pos_neg, Metric::kAccuracy, 1),
      cls("mpqa", it_was, pos_neg, Metric::kAccuracy, 1),
      cls("subj", this_is, {"subjective", "objective"}, Metric::kAccuracy, 1),
      cls("trec", "{LABELS}: <S1>",
          {"Expression", "Entity", "Description", "Human", "Location",
           "Number"},
          Metric::kAccuracy, 1),
      cls("cola", this_is, {"correct", "incorrect"}, Metric::kMatthews, 1),
      cls("mnli", nli, three_way, Metric::kAccuracy, 2),
      cls("mnli-mm", nli, three_way, Metric::kAccuracy, 2),
      cls("snli", nli, three_way, Metric::kAccuracy, 2),
      cls("qnli", nli, yes_no, Metric::kAccuracy, 2),
      cls("rte", nli, yes_no, Metric::kAccuracy, 2),
      cls("mrpc", pair, yes_no, Metric::kF1, 2),
      cls("qqp", pair, yes_no, Metric::kF1, 2),
  };

  TaskSpec stsb;
  stsb.name = "sts-b";
  stsb.kind = Regression{0.0, 5.0};
  stsb.template_src = pair;
  stsb.label_words = {"No", "Yes"};
  stsb.metric = Metric::kPearson;
  stsb.sentence_count = 2;
  tasks.push_back(std::move(stsb));

  for (const auto& t : tasks) t.validate();
  return tasks;
}

double parse_double(std::string_view text, const std::string& what) {
  const std::string s = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw DatasetError(what + ": '" + s + "' is not a number");
  return value;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t pos = 0;
  while (true) {
    const auto tab = line.find('\t', pos);
    cols.push_back(line.substr(pos, tab == std::string::npos
                                        ? std::string::npos
                                        : tab - pos));
    if (tab == std::string::npos) break;
    pos = tab + 1;
  }
  return cols;
}

Gold parse_gold(const std::string& raw, const TaskSpec& task,
                const std::string& where) {
  if (const auto* reg = std::get_if<Regression>(&task.kind)) {
    const double v = parse_double(raw, where + ": label");
    if (!(v >= reg->low && v <= reg->high))
      throw DatasetError(where + ": label " + trim(raw) +
                         " outside the task interval [" +
                         std::to_string(reg->low) + ", " +
                         std::to_string(reg->high) + "]");
    return v;
  }
  const std::string s = trim(raw);
  const auto k = task.num_labels();
  for (std::size_t i = 0; i < k; ++i)
    if (task.label_words[i] == s) return i;
  long long idx = -1;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), idx);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw DatasetError(where + ": label '" + s +
                       "' is neither a class index nor a label word");
  if (idx < 0 || static_cast<std::size_t>(idx) >= k)
    throw DatasetError(where + ": label " + s + " out of range for a " +
                       std::to_string(k) + "-class task");
  return static_cast<std::size_t>(idx);
}

bool looks_like_jsonl(const std::filesystem::path& path) {
  const auto ext = lowercase(path.extension().string());
  return ext == ".jsonl" || ext == ".json" || ext == ".ndjson";
}

}  // namespace

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::kAccuracy: return "accuracy";
    case Metric::kF1: return "f1";
    case Metric::kMatthews: return "matthews";
    case Metric::kPearson: return "pearson";
  }
  return "accuracy";
}

Metric parse_metric(std::string_view name) {
  const auto n = lowercase(trim(name));
  if (n == "accuracy" || n == "acc") return Metric::kAccuracy;
  if (n == "f1") return Metric::kF1;
  if (n == "matthews" || n == "matt" || n == "mcc") return Metric::kMatthews;
  if (n == "pearson" || n == "pear") return Metric::kPearson;
  throw TaskError("unknown metric '" + std::string(name) + "'");
}

void TaskSpec::validate() const {
  const std::string who = "task '" + name + "': ";
  if (name.empty()) throw TaskError("task has no name");
  if (const auto* c = std::get_if<Classification>(&kind)) {
    if (c->num_classes < 2)
      throw TaskError(who + "classification needs at least 2 classes");
    if (label_words.size() != c->num_classes)
      throw TaskError(who + "expected " + std::to_string(c->num_classes) +
                      " label words, got " +
                      std::to_string(label_words.size()));
    if (metric == Metric::kPearson)
      throw TaskError(who + "pearson needs a regression task");
  } else {
    const auto& r = std::get<Regression>(kind);
    if (!(r.low < r.high))
      throw TaskError(who + "regression interval needs low < high");
    if (label_words.size() != 2)
      throw TaskError(who + "regression needs exactly 2 label words");
    if (metric != Metric::kPearson)
      throw TaskError(who + "regression tasks are scored with pearson");
  }
  std::set<std::string> seen;
  for (const auto& w : label_words) {
    if (w.empty()) throw TaskError(who + "empty label word");
    if (w.find_first_of(" \t\r\n") != std::string::npos)
      throw TaskError(who + "label word '" + w + "' contains whitespace");
    if (!seen.insert(w).second)
      throw TaskError(who + "duplicate label word '" + w + "'");
  }
  if (sentence_count != 1 && sentence_count != 2)
    throw TaskError(who + "sentence_count must be 1 or 2");
  Template tmpl = [&] {
    try {
      return Template::parse(template_src);
    } catch (const TemplateError& e) {
      throw TaskError(who + e.what());
    }
  }();
  if (tmpl.has_s2() != (sentence_count == 2))
    throw TaskError(who + "template <S2> slot disagrees with sentence_count");
}

const std::vector<TaskSpec>& builtin_tasks() {
  static const std::vector<TaskSpec> tasks = make_builtins();
  return tasks;
}

TaskSpec load_task(std::string_view name) {
  const auto key = lowercase(trim(name));
  for (const auto& t : builtin_tasks())
    if (t.name == key) return t;
  const std::filesystem::path path{std::string(name)};
  if (std::filesystem::is_regular_file(path)) return load_task_file(path);
  throw TaskError("unknown task '" + std::string(name) +
                  "' (not a built-in task or a task file)");
}

TaskSpec load_task_file(const std::filesystem::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree root;
  try {
    pt::read_ini(path.string(), root);
  } catch (const pt::ini_parser_error& e) {
    throw TaskError("malformed task file: " + std::string(e.what()));
  }
  const pt::ptree& tree =
      root.get_child_optional("task") ? root.get_child("task") : root;
  auto required = [&](const char* key) {
    auto v = tree.get_optional<std::string>(key);
    if (!v || trim(*v).empty())
      throw TaskError("malformed task file " + path.string() + ": missing '" +
                      key + "'");
    return trim(*v);
  };
  static const std::set<std::string> known = {
      "name", "kind", "low", "high", "template", "label_words", "metric",
      "sentence_count"};
  for (const auto& [key, child] : tree) {
    if (!child.empty()) continue;
    if (!known.contains(key))
      throw TaskError("malformed task file " + path.string() +
                      ": unknown key '" + key + "'");
  }

  TaskSpec t;
  t.name = required("name");
  t.template_src = required("template");
  t.label_words = split_list(required("label_words"));
  const auto kind = lowercase(required("kind"));
  try {
    if (kind == "classification") {
      t.kind = Classification{t.label_words.size()};
      t.metric = parse_metric(tree.get<std::string>("metric", "accuracy"));
    } else if (kind == "regression") {
      t.kind = Regression{parse_double(required("low"), "low"),
                          parse_double(required("high"), "high")};
      t.metric = parse_metric(tree.get<std::string>("metric", "pearson"));
    } else {
      throw TaskError("kind must be classification or regression, got '" +
                      kind + "'");
    }
    t.sentence_count = t.template_src.find("<S2>") != std::string::npos ? 2 : 1;
    if (auto sc = tree.get_optional<std::string>("sentence_count"))
      t.sentence_count = static_cast<int>(parse_double(*sc, "sentence_count"));
  } catch (const Error& e) {
    throw TaskError("malformed task file " + path.string() + ": " + e.what());
  }
  t.validate();
  return t;
}

std::vector<DatasetExample> read_dataset(const std::filesystem::path& path,
                                         const DatasetSchema& schema,
                                         const TaskSpec& task) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset " + path.string());
  const bool jsonl =
      schema.format == DatasetFormat::kJsonLines ||
      (schema.format == DatasetFormat::kAuto && looks_like_jsonl(path));
  const std::string prefix =
      schema.id_prefix.empty() ? path.stem().string() : schema.id_prefix;
  const bool two = task.sentence_count == 2;

  std::vector<DatasetExample> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && schema.has_header && !jsonl) continue;
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);

    DatasetExample ex;
    ex.id = prefix + "-" + std::to_string(line_no);
    if (jsonl) {
      nlohmann::json row;
      try {
        row = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw DatasetError(where + ": invalid JSON: " + e.what());
      }
      if (!row.is_object() || !row.contains("s1") || !row["s1"].is_string() ||
          !row.contains("label"))
        throw DatasetError(where + ": expected an object with s1 and label");
      ex.s1 = row["s1"].get<std::string>();
      if (row.contains("s2") && !row["s2"].is_null()) {
        if (!row["s2"].is_string())
          throw DatasetError(where + ": s2 must be a string");
        ex.s2 = row["s2"].get<std::string>();
      }
      if (row.contains("id")) {
        const auto& id = row["id"];
        ex.id = id.is_string() ? id.get<std::string>() : id.dump();
      }
      const auto& label = row["label"];
      ex.gold = parse_gold(label.is_string() ? label.get<std::string>()
                                             : label.dump(),
                           task, where);
    } else {
      const auto cols = split_tabs(line);
      auto col = [&](std::size_t c, const char* what) -> const std::string& {
        if (c >= cols.size())
          throw DatasetError(where + ": missing column " + std::to_string(c) +
                             " (" + what + ")");
        return cols[c];
      };
      ex.s1 = col(schema.s1_column, "s1");
      if (schema.s2_column) ex.s2 = col(*schema.s2_column, "s2");
      ex.gold = parse_gold(col(schema.label_column, "label"), task, where);
    }
    if (two && !ex.s2)
      throw DatasetError(where + ": task '" + task.name +
                         "' needs a second sentence");
    if (!two && ex.s2)
      throw DatasetError(where + ": task '" + task.name +
                         "' takes one sentence but s2 was given");
    if (!ids.insert(ex.id).second)
      throw DatasetError(where + ": duplicate id '" + ex.id + "'");
    out.push_back(std::move(ex));
  }
  if (in.bad()) throw DatasetError("I/O error reading " + path.string());
  return out;
}

FewShotSplit sample_few_shot(const std::vector<DatasetExample>& data,
                             const TaskSpec& task, std::size_t k_per_class,
                             std::uint64_t seed) {
  if (k_per_class == 0) throw DatasetError("k_per_class must be positive");
  FewShotSplit split;
  split.seed = seed;
  split.k_per_class = k_per_class;

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  if (task.is_regression()) {
    const std::size_t n = 2 * k_per_class;
    if (data.size() < 2 * n)
      throw DatasetError("regression split needs at least " +
                         std::to_string(2 * n) + " examples, have " +
                         std::to_string(data.size()));
    for (std::size_t i = 0; i < n; ++i) split.train.push_back(data[order[i]]);
    for (std::size_t i = n; i < 2 * n; ++i)
      split.dev.push_back(data[order[i]]);
    return split;
  }

  const std::size_t k = task.num_labels();
  std::vector<std::size_t> per_class(k, 0);
  for (const auto& ex : data) ++per_class[ex.gold_class()];
  for (std::size_t c = 0; c < k; ++c)
    if (per_class[c] < 2 * k_per_class)
      throw DatasetError("class " + std::to_string(c) + " ('" +
                         task.label_words[c] + "') has " +
                         std::to_string(per_class[c]) + " examples, need " +
                         std::to_string(2 * k_per_class));

  std::vector<std::size_t> train_n(k, 0), dev_n(k, 0);
  for (const std::size_t i : order) {
    const auto c = data[i].gold_class();
    if (train_n[c] < k_per_class) {
      ++train_n[c];
      split.train.push_back(data[i]);
    } else if (dev_n[c] < k_per_class) {
      ++dev_n[c];
      split.dev.push_back(data[i]);
    }
  }
  return split;
}

}  // namespace trd
