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
#include <span>
#include <vector>

namespace trd {

// Adam with decoupled weight decay over one flat parameter vector.
//
//   theta <- theta - lr * wd * theta          (decayed entries only)
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
//   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
class AdamW {
 public:
  struct Options {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 2e-3;
  };

  // decay_mask[i] != 0 marks entries subject to weight decay.
  AdamW(std::size_t parameter_count, Options options,
        std::vector<std::uint8_t> decay_mask);

  void step(std::span<double> params, std::span<const double> grads);

  std::uint64_t steps_taken() const { return step_; }
  const Options& options() const { return options_; }

 private:
  Options options_;
  std::vector<std::uint8_t> decay_mask_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t step_ = 0;
};

}  // namespace trd
