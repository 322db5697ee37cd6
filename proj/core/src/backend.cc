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

#include "trd/backend.h"

#include <set>

#include <json.hpp>

#include "trd/error.h"

namespace trd {
namespace {

using nlohmann::json;

json record_to_json(const PromptRecord& r) {
  json spans = json::array();
  for (const auto& s : r.spans) spans.push_back({s.start, s.end});
  json out = {{"id", r.id}, {"text", r.text}, {"spans", std::move(spans)}};
  if (r.targets) out["targets"] = *r.targets;
  return out;
}

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw ProtocolError(where + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ProtocolError(where + ": field '" + key + "' has the wrong type");
  }
}

PromptRecord record_from_json(const json& j, const std::string& where) {
  PromptRecord r;
  r.id = field<std::string>(j, "id", where);
  const std::string at = where + " record '" + r.id + "'";
  r.text = field<std::string>(j, "text", at);
  for (const auto& pair : field<std::vector<std::vector<std::size_t>>>(
           j, "spans", at)) {
    if (pair.size() != 2)
      throw ProtocolError(at + ": each span must be [start, end]");
    r.spans.push_back({pair[0], pair[1]});
  }
  if (j.contains("targets") && !j["targets"].is_null())
    r.targets = field<std::vector<double>>(j, "targets", at);
  return r;
}

json hyperparams_to_json(const Hyperparams& h) {
  return {{"learning_rate", h.learning_rate},
          {"batch_size", h.batch_size},
          {"epochs", h.epochs},
          {"weight_decay", h.weight_decay},
          {"adam_epsilon", h.adam_epsilon},
          {"max_length", h.max_length},
          {"seed", h.seed},
          {"loss_scope", std::string(loss_scope_name(h.loss_scope))}};
}

Hyperparams hyperparams_from_json(const json& j) {
  const std::string where = "hyperparams";
  if (!j.is_object()) throw ProtocolError("hyperparams must be an object");
  Hyperparams h;
  h.learning_rate = field<double>(j, "learning_rate", where);
  h.batch_size = field<std::size_t>(j, "batch_size", where);
  h.epochs = field<std::size_t>(j, "epochs", where);
  h.weight_decay = field<double>(j, "weight_decay", where);
  h.adam_epsilon = field<double>(j, "adam_epsilon", where);
  h.max_length = field<std::size_t>(j, "max_length", where);
  h.seed = field<std::uint64_t>(j, "seed", where);
  if (j.contains("loss_scope"))
    h.loss_scope = parse_loss_scope(field<std::string>(j, "loss_scope", where));
  return h;
}

json parse_line(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed ") + what + ": " + e.what());
  }
}

void check_version(const json& j, const char* what) {
  const int v = field<int>(j, "version", what);
  if (v != kWireVersion)
    throw ProtocolError(std::string(what) + " has unsupported version " +
                        std::to_string(v));
}

}  // namespace

std::string_view job_kind_name(JobKind kind) {
  return kind == JobKind::kRegression ? "regression" : "classification";
}

std::string_view loss_scope_name(LossScope scope) {
  return scope == LossScope::kLabelPositions ? "label-only" : "full-sequence";
}

LossScope parse_loss_scope(std::string_view name) {
  if (name == "full-sequence") return LossScope::kFullSequence;
  if (name == "label-only" || name == "label-positions-only")
    return LossScope::kLabelPositions;
  throw UsageError("loss_scope must be full-sequence or label-only, got '" +
                   std::string(name) + "'");
}

void BackendJob::validate() const {
  std::set<std::string> ids;
  auto check = [&](const std::vector<PromptRecord>& set, const char* name,
                   bool need_targets) {
    for (const auto& r : set) {
      const std::string at =
          std::string(name) + " record '" + r.id + "'";
      if (!ids.insert(r.id).second)
        throw ProtocolError(at + ": id appears more than once");
      if (r.spans.empty()) throw ProtocolError(at + ": no label spans");
      for (std::size_t i = 0; i < r.spans.size(); ++i) {
        const auto& s = r.spans[i];
        if (s.start >= s.end || s.end > r.text.size())
          throw ProtocolError(at + ": span " + std::to_string(i) +
                              " is not a valid range of the text");
        if (i > 0 && s.start < r.spans[i - 1].end)
          throw ProtocolError(at + ": spans overlap or are out of order");
      }
      if (need_targets && !r.targets)
        throw ProtocolError(at + ": training records need targets");
      if (r.targets) {
        if (r.targets->size() != r.spans.size())
          throw ProtocolError(at + ": " + std::to_string(r.targets->size()) +
                              " targets for " +
                              std::to_string(r.spans.size()) + " spans");
        for (double t : *r.targets)
          if (!(t >= 0.0 && t <= 1.0))
            throw ProtocolError(at + ": target outside [0, 1]");
      }
    }
  };
  check(train, "train", true);
  check(dev, "dev", false);
  check(test, "test", false);
}

std::string job_to_json(const BackendJob& job) {
  json out;
  out["version"] = kWireVersion;
  out["kind"] = std::string(job_kind_name(job.kind));
  out["hyperparams"] = hyperparams_to_json(job.hyperparams);
  for (const auto& [key, set] :
       {std::pair{"train", &job.train}, std::pair{"dev", &job.dev},
        std::pair{"test", &job.test}}) {
    json arr = json::array();
    for (const auto& r : *set) arr.push_back(record_to_json(r));
    out[key] = std::move(arr);
  }
  return out.dump();
}

BackendJob job_from_json(std::string_view text) {
  const json j = parse_line(text, "job");
  check_version(j, "job");
  BackendJob job;
  const auto kind = field<std::string>(j, "kind", "job");
  if (kind == "classification") {
    job.kind = JobKind::kClassification;
  } else if (kind == "regression") {
    job.kind = JobKind::kRegression;
  } else {
    throw ProtocolError("job kind must be classification or regression");
  }
  if (!j.contains("hyperparams"))
    throw ProtocolError("job: missing field 'hyperparams'");
  job.hyperparams = hyperparams_from_json(j["hyperparams"]);
  for (const auto& [key, set] :
       {std::pair{"train", &job.train}, std::pair{"dev", &job.dev},
        std::pair{"test", &job.test}}) {
    if (!j.contains(key) || !j[key].is_array())
      throw ProtocolError(std::string("job: '") + key + "' must be an array");
    for (const auto& r : j[key]) set->push_back(record_from_json(r, key));
  }
  job.validate();
  return job;
}

std::string result_to_json(const BackendResult& result) {
  json probs = json::object();
  for (const auto& [id, p] : result.probs) probs[id] = p;
  return json{{"version", kWireVersion}, {"probs", std::move(probs)}}.dump();
}

BackendResult result_from_json(std::string_view text) {
  const json j = parse_line(text, "result");
  check_version(j, "result");
  if (!j.contains("probs") || !j["probs"].is_object())
    throw ProtocolError("result: 'probs' must be an object");
  BackendResult r;
  for (const auto& [id, arr] : j["probs"].items()) {
    if (!arr.is_array())
      throw ProtocolError("result id '" + id + "': expected a list");
    std::vector<double> p;
    for (const auto& v : arr) {
      if (!v.is_number())
        throw ProtocolError("result id '" + id + "': non-numeric probability");
      p.push_back(v.get<double>());
    }
    r.probs.emplace(id, std::move(p));
  }
  return r;
}

void validate_result(const BackendJob& job, const BackendResult& result) {
  std::size_t expected = 0;
  for (const auto* set : {&job.dev, &job.test}) {
    for (const auto& r : *set) {
      ++expected;
      const auto it = result.probs.find(r.id);
      if (it == result.probs.end())
        throw ProtocolError("backend result is missing id '" + r.id + "'");
      if (it->second.size() != r.spans.size())
        throw ProtocolError("backend result for '" + r.id + "' has " +
                            std::to_string(it->second.size()) +
                            " probabilities for " +
                            std::to_string(r.spans.size()) + " label words");
      for (double p : it->second)
        if (!(p >= 0.0 && p <= 1.0))
          throw ProtocolError("backend result for '" + r.id +
                              "' has a probability outside [0, 1]");
    }
  }
  if (result.probs.size() != expected) {
    std::set<std::string> known;
    for (const auto* set : {&job.dev, &job.test})
      for (const auto& r : *set) known.insert(r.id);
    for (const auto& [id, p] : result.probs)
      if (!known.contains(id))
        throw ProtocolError("backend result has unexpected id '" + id + "'");
  }
}

std::unique_ptr<Backend> make_backend(std::string_view selector,
                                      const ToyBackendOptions& toy,
                                      std::chrono::milliseconds timeout,
                                      bool file_handoff) {
  if (selector == "toy") return std::make_unique<ToyBackend>(toy);
  constexpr std::string_view kExternal = "external:";
  if (selector.starts_with(kExternal)) {
    ExternalBackendOptions opt;
    opt.command = std::string(selector.substr(kExternal.size()));
    if (opt.command.empty())
      throw UsageError("external backend selector has no command");
    opt.timeout = timeout;
    opt.file_handoff = file_handoff;
    return std::make_unique<ExternalBackend>(std::move(opt));
  }
  throw UsageError("backend must be 'toy' or 'external:<command>', got '" +
                   std::string(selector) + "'");
}

}  // namespace trd
