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

#include "prsd/nn/optim.h"

#include <cmath>

#include "prsd/errors.h"

namespace prsd::nn {

AdamState make_adam_state(std::span<const Tensor> params, double learning_rate,
                          double beta1, double beta2, double epsilon) {
  AdamState s;
  s.learning_rate = learning_rate;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  for (const auto& p : params) {
    s.first_moment.emplace_back(p.size(), 0.0);
    s.second_moment.emplace_back(p.size(), 0.0);
  }
  return s;
}

void adam_step(std::span<Tensor> params, AdamState& state) {
  if (params.size() != state.first_moment.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) +
                         " params vs " + std::to_string(state.first_moment.size()) +
                         " moment buffers");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].size() != params[i].size()) {
      throw DimensionError("adam_step: moment buffer " + std::to_string(i) +
                           " does not match parameter shape " +
                           shape_string(params[i].shape()));
    }
    if (params[i].has_grad() && !all_finite(params[i].grad())) {
      throw NumericError("adam_step: non-finite gradient in parameter " +
                         std::to_string(i) + " " + shape_string(params[i].shape()) +
                         "; update rejected at step " +
                         std::to_string(state.step_count + 1));
    }
  }

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) {
      // Zero gradient still decays the moments.
      for (std::size_t j = 0; j < params[i].size(); ++j) {
        state.first_moment[i][j] *= state.beta1;
        state.second_moment[i][j] *= state.beta2;
      }
    }
    auto g = params[i].has_grad() ? params[i].grad() : std::span<const double>();
    auto w = params[i].mutable_data();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (!g.empty()) {
        m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
        v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      }
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

double clip_grad_norm(std::span<Tensor> params, double max_norm) {
  double sq = 0.0;
  for (auto& p : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / norm;
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (double& g : p.mutable_grad()) g *= f;
    }
  }
  return norm;
}

}  // namespace prsd::nn
