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

#include "trd/adamw.h"

#include <cmath>

#include "trd/error.h"

namespace trd {

AdamW::AdamW(std::size_t parameter_count, Options options,
             std::vector<std::uint8_t> decay_mask)
    : options_(options),
      decay_mask_(std::move(decay_mask)),
      m_(parameter_count, 0.0),
      v_(parameter_count, 0.0) {
  if (decay_mask_.size() != parameter_count)
    throw ModelError("decay mask size does not match the parameter count");
  if (!(options_.learning_rate >= 0.0))
    throw ModelError("learning rate must be non-negative");
}

void AdamW::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw ModelError("AdamW step called with mismatched sizes");
  ++step_;
  const auto& o = options_;
  const double bias1 = 1.0 - std::pow(o.beta1, static_cast<double>(step_));
  const double bias2 = 1.0 - std::pow(o.beta2, static_cast<double>(step_));
  const double decay = o.learning_rate * o.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (decay_mask_[i]) params[i] -= decay * params[i];
    m_[i] = o.beta1 * m_[i] + (1.0 - o.beta1) * grads[i];
    v_[i] = o.beta2 * v_[i] + (1.0 - o.beta2) * grads[i] * grads[i];
    const double m_hat = m_[i] / bias1;
    const double v_hat = v_[i] / bias2;
    params[i] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
  }
}

}  // namespace trd
