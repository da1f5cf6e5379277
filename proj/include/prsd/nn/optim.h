// Copyright (c) 2026 The prsd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PRSD_NN_OPTIM_H_
#define PRSD_NN_OPTIM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "prsd/nn/tensor.h"

namespace prsd::nn {

struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::int64_t step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Zero moments shaped like params.
AdamState make_adam_state(std::span<const Tensor> params, double learning_rate = 1e-3,
                          double beta1 = 0.9, double beta2 = 0.999,
                          double epsilon = 1e-8);

// One bias-corrected Adam update using each parameter's accumulated gradient
// (a parameter that never received a gradient counts as zero). If any
// gradient is non-finite, throws NumericError and leaves params and state
// untouched.
void adam_step(std::span<Tensor> params, AdamState& state);

// Rescales all gradients so their joint L2 norm is at most max_norm. Returns
// the norm before clipping.
double clip_grad_norm(std::span<Tensor> params, double max_norm);

}  // namespace prsd::nn

#endif  // PRSD_NN_OPTIM_H_
