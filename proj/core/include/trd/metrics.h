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
#include <span>
#include <vector>

#include "trd/task.h"

namespace trd {

struct MetricResult {
  double value = 0.0;
  // The metric's denominator vanished; value is reported as 0.
  bool degenerate = false;
};

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

// Binary confusion counts with class index 1 as the positive class.
Confusion binary_confusion(std::span<const std::size_t> preds,
                           std::span<const std::size_t> golds);

// All functions need equal, non-empty inputs (MetricError otherwise).
MetricResult metric_accuracy(std::span<const std::size_t> preds,
                             std::span<const std::size_t> golds);
// Binary, positive class 1. No positive predictions and no positive golds
// is degenerate.
MetricResult metric_f1(std::span<const std::size_t> preds,
                       std::span<const std::size_t> golds);
MetricResult metric_matthews(std::span<const std::size_t> preds,
                             std::span<const std::size_t> golds);
MetricResult metric_pearson(std::span<const double> preds,
                            std::span<const double> golds);

MetricResult f1_from_confusion(const Confusion& c);
MetricResult matthews_from_confusion(const Confusion& c);

double mean(std::span<const double> xs);
// Population standard deviation (divides by n).
double population_stddev(std::span<const double> xs);

}  // namespace trd
