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

#include "trd/run_config.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <functional>
#include <map>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "trd/error.h"

namespace trd {
namespace {

using Setter = std::function<void(RunConfig&, const std::string&,
                                  const std::filesystem::path&)>;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto end = std::min(s.find(',', pos), s.size());
    if (auto item = trim(std::string_view(s).substr(pos, end - pos));
        !item.empty())
      out.push_back(std::move(item));
    pos = end + 1;
  }
  return out;
}

[[noreturn]] void bad(const std::string& field, const std::string& expected,
                      const std::string& got) {
  throw UsageError(field + ": expected " + expected + ", got '" + got + "'");
}

std::size_t to_size(const std::string& field, const std::string& v) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    bad(field, "a non-negative integer", v);
  return out;
}

std::uint64_t to_u64(const std::string& field, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    bad(field, "a non-negative integer", v);
  return out;
}

double to_double(const std::string& field, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    bad(field, "a number", v);
  return out;
}

bool to_bool(const std::string& field, const std::string& v) {
  std::string l = v;
  std::transform(l.begin(), l.end(), l.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (l == "true" || l == "yes" || l == "on" || l == "1") return true;
  if (l == "false" || l == "no" || l == "off" || l == "0") return false;
  bad(field, "true or false", v);
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& field, const std::string& v, F f) {
  std::vector<T> out;
  for (const auto& item : split_list(v)) out.push_back(f(field, item));
  if (out.empty()) bad(field, "a non-empty comma-separated list", v);
  return out;
}

std::filesystem::path to_path(const std::string& v,
                              const std::filesystem::path& base) {
  std::filesystem::path p(v);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

const std::map<std::string, Setter>& setters() {
  using P = const std::filesystem::path&;
  using S = const std::string&;
  static const std::map<std::string, Setter> table = {
      {"task.name",
       [](RunConfig& c, S v, P base) {
         // Built-in names stay as they are; anything that exists relative
         // to the config file is taken as a task file.
         const auto p = to_path(v, base);
         c.task = (!base.empty() && std::filesystem::exists(p)) ? p.string() : v;
       }},
      {"data.train", [](RunConfig& c, S v, P base) { c.train = to_path(v, base); }},
      {"data.test", [](RunConfig& c, S v, P base) { c.test = to_path(v, base); }},
      {"data.format",
       [](RunConfig& c, S v, P) {
         if (v == "auto") c.schema.format = DatasetFormat::kAuto;
         else if (v == "tsv") c.schema.format = DatasetFormat::kTsv;
         else if (v == "jsonl") c.schema.format = DatasetFormat::kJsonLines;
         else bad("data.format", "auto, tsv or jsonl", v);
       }},
      {"data.s1_column",
       [](RunConfig& c, S v, P) { c.schema.s1_column = to_size("data.s1_column", v); }},
      {"data.s2_column",
       [](RunConfig& c, S v, P) {
         if (v == "none") c.schema.s2_column.reset();
         else c.schema.s2_column = to_size("data.s2_column", v);
       }},
      {"data.label_column",
       [](RunConfig& c, S v, P) {
         c.schema.label_column = to_size("data.label_column", v);
       }},
      {"data.header",
       [](RunConfig& c, S v, P) { c.schema.has_header = to_bool("data.header", v); }},
      {"experiment.k",
       [](RunConfig& c, S v, P) { c.experiment.k = to_size("experiment.k", v); }},
      {"experiment.seeds",
       [](RunConfig& c, S v, P) {
         c.experiment.seeds = to_list<std::uint64_t>("experiment.seeds", v, to_u64);
       }},
      {"experiment.learning_rates",
       [](RunConfig& c, S v, P) {
         c.experiment.grid.learning_rates =
             to_list<double>("experiment.learning_rates", v, to_double);
       }},
      {"experiment.batch_sizes",
       [](RunConfig& c, S v, P) {
         c.experiment.grid.batch_sizes =
             to_list<std::size_t>("experiment.batch_sizes", v, to_size);
       }},
      {"experiment.epochs",
       [](RunConfig& c, S v, P) {
         c.experiment.epochs = to_size("experiment.epochs", v);
       }},
      {"experiment.weight_decay",
       [](RunConfig& c, S v, P) {
         c.experiment.weight_decay = to_double("experiment.weight_decay", v);
       }},
      {"experiment.adam_epsilon",
       [](RunConfig& c, S v, P) {
         c.experiment.adam_epsilon = to_double("experiment.adam_epsilon", v);
       }},
      {"experiment.max_length",
       [](RunConfig& c, S v, P) {
         c.experiment.max_length = to_size("experiment.max_length", v);
       }},
      {"experiment.loss_scope",
       [](RunConfig& c, S v, P) {
         try {
           c.experiment.loss_scope = parse_loss_scope(v);
         } catch (const UsageError&) {
           bad("experiment.loss_scope", "full-sequence or label-only", v);
         }
       }},
      {"experiment.concurrency",
       [](RunConfig& c, S v, P) {
         c.experiment.concurrency = to_size("experiment.concurrency", v);
       }},
      {"experiment.k_sweep",
       [](RunConfig& c, S v, P) {
         c.k_sweep = v == "none" ? std::vector<std::size_t>{}
                                 : to_list<std::size_t>("experiment.k_sweep", v,
                                                        to_size);
       }},
      {"backend.selector", [](RunConfig& c, S v, P) { c.backend = v; }},
      {"backend.timeout_seconds",
       [](RunConfig& c, S v, P) {
         const double s = to_double("backend.timeout_seconds", v);
         if (!(s > 0.0)) bad("backend.timeout_seconds", "a positive number", v);
         c.backend_timeout =
             std::chrono::milliseconds(static_cast<long long>(s * 1000.0));
       }},
      {"backend.file_handoff",
       [](RunConfig& c, S v, P) {
         c.file_handoff = to_bool("backend.file_handoff", v);
       }},
      {"toy.d_model",
       [](RunConfig& c, S v, P) { c.toy.d_model = to_size("toy.d_model", v); }},
      {"toy.num_layers",
       [](RunConfig& c, S v, P) { c.toy.num_layers = to_size("toy.num_layers", v); }},
      {"toy.num_heads",
       [](RunConfig& c, S v, P) { c.toy.num_heads = to_size("toy.num_heads", v); }},
      {"toy.ff_dim",
       [](RunConfig& c, S v, P) { c.toy.ff_dim = to_size("toy.ff_dim", v); }},
      {"toy.min_count",
       [](RunConfig& c, S v, P) { c.toy.min_count = to_size("toy.min_count", v); }},
      {"output.report",
       [](RunConfig& c, S v, P base) { c.report = to_path(v, base); }},
      {"output.curve",
       [](RunConfig& c, S v, P base) { c.curve = to_path(v, base); }},
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  if (task.empty()) throw UsageError("task.name is required");
  if (train.empty()) throw UsageError("data.train is required");
  if (test.empty()) throw UsageError("data.test is required");
  if (report.empty()) throw UsageError("output.report must not be empty");
  if (backend.empty()) throw UsageError("backend.selector must not be empty");
  try {
    experiment.validate();
  } catch (const UsageError& e) {
    throw UsageError(std::string("experiment: ") + e.what());
  }
  for (std::size_t i = 1; i < k_sweep.size(); ++i)
    if (k_sweep[i] <= k_sweep[i - 1])
      throw UsageError("experiment.k_sweep: values must be strictly ascending");
  if (toy.d_model == 0 || toy.num_heads == 0 || toy.d_model % toy.num_heads)
    throw UsageError("toy.d_model must be a positive multiple of toy.num_heads");
  if (toy.num_layers == 0) throw UsageError("toy.num_layers must be positive");
}

std::filesystem::path RunConfig::curve_path() const {
  if (!curve.empty()) return curve;
  auto p = report;
  p.replace_extension(".csv");
  return p;
}

RunConfig default_run_config() {
  RunConfig c;
  if (const char* env = std::getenv("TRD_BACKEND"); env && *env)
    c.backend = env;
  return c;
}

void set_run_field(RunConfig& cfg, std::string_view key, std::string_view value,
                   const std::filesystem::path& base_dir) {
  const auto& table = setters();
  const auto it = table.find(trim(key));
  if (it == table.end())
    throw UsageError("unknown config field '" + std::string(key) + "'");
  it->second(cfg, trim(value), base_dir);
}

void apply_run_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  namespace pt = boost::property_tree;
  if (!std::filesystem::is_regular_file(path))
    throw UsageError("config file " + path.string() + " does not exist");
  pt::ptree root;
  try {
    pt::read_ini(path.string(), root);
  } catch (const pt::ini_parser_error& e) {
    throw UsageError("malformed config: " + std::string(e.what()));
  }
  const auto base = path.parent_path();
  for (const auto& [section, tree] : root) {
    if (tree.empty())
      throw UsageError("config field '" + section +
                       "' must be inside a section");
    for (const auto& [key, leaf] : tree) {
      const std::string field = section + "." + key;
      if (!setters().contains(field))
        throw UsageError("unknown config field '" + field + "'");
      set_run_field(cfg, field, leaf.data(), base.empty() ? "." : base);
    }
  }
}

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, v] : setters()) out.push_back(k);
    return out;
  }();
  return keys;
}

}  // namespace trd
