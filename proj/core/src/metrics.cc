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

#include "trd/metrics.h"

#include <cmath>
#include <string>

#include "trd/error.h"

namespace trd {
namespace {

template <typename T>
void check_sizes(std::span<const T> preds, std::span<const T> golds) {
  if (preds.size() != golds.size())
    throw MetricError("metric inputs differ in length: " +
                      std::to_string(preds.size()) + " vs " +
                      std::to_string(golds.size()));
  if (preds.empty()) throw MetricError("metric inputs are empty");
}

}  // namespace

Confusion binary_confusion(std::span<const std::size_t> preds,
                           std::span<const std::size_t> golds) {
  check_sizes(preds, golds);
  Confusion c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] > 1 || golds[i] > 1)
      throw MetricError("binary metric got class index above 1");
    const bool p = preds[i] == 1, g = golds[i] == 1;
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

MetricResult metric_accuracy(std::span<const std::size_t> preds,
                             std::span<const std::size_t> golds) {
  check_sizes(preds, golds);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i] == golds[i];
  return {static_cast<double>(hit) / static_cast<double>(preds.size()), false};
}

MetricResult f1_from_confusion(const Confusion& c) {
  const double denom = 2.0 * c.tp + c.fp + c.fn;
  if (denom == 0.0) return {0.0, true};
  return {2.0 * c.tp / denom, false};
}

MetricResult matthews_from_confusion(const Confusion& c) {
  const double tp = c.tp, fp = c.fp, fn = c.fn, tn = c.tn;
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom == 0.0) return {0.0, true};
  return {(tp * tn - fp * fn) / std::sqrt(denom), false};
}

MetricResult metric_f1(std::span<const std::size_t> preds,
                       std::span<const std::size_t> golds) {
  return f1_from_confusion(binary_confusion(preds, golds));
}

MetricResult metric_matthews(std::span<const std::size_t> preds,
                             std::span<const std::size_t> golds) {
  return matthews_from_confusion(binary_confusion(preds, golds));
}

MetricResult metric_pearson(std::span<const double> preds,
                            std::span<const double> golds) {
  check_sizes(preds, golds);
  const double mp = mean(preds), mg = mean(golds);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double dx = preds[i] - mp, dy = golds[i] - mg;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return {0.0, true};
  return {sxy / std::sqrt(sxx * syy), false};
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw MetricError("mean of an empty list");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double population_stddev(std::span<const double> xs) {
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

}  // namespace trd
