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

#include "prsd/diffusion/schedule.h"

#include <cmath>
#include <string>

#include "prsd/errors.h"

namespace prsd::diffusion {

NoiseSchedule::NoiseSchedule(int steps, double beta_first, double beta_last) {
  if (steps < 1) throw ParameterError("noise schedule needs T >= 1, got " + std::to_string(steps));
  if (!(beta_first > 0.0 && beta_first <= beta_last && beta_last < 1.0)) {
    throw ParameterError("noise schedule needs 0 < beta1 <= betaT < 1");
  }
  beta_.resize(steps);
  alpha_.resize(steps);
  alpha_bar_.resize(steps);
  double running = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    beta_[i] = beta_first + frac * (beta_last - beta_first);
    alpha_[i] = 1.0 - beta_[i];
    running *= alpha_[i];
    alpha_bar_[i] = running;
  }
}

std::size_t NoiseSchedule::index(int t) const {
  if (t < 1 || t > T()) {
    throw ParameterError("diffusion step " + std::to_string(t) + " outside [1, " +
                         std::to_string(T()) + "]");
  }
  return static_cast<std::size_t>(t - 1);
}

double NoiseSchedule::posterior_variance(int t) const {
  return beta(t) * (1.0 - alpha_bar(t - 1)) / (1.0 - alpha_bar(t));
}

NoiseSchedule build_schedule(int T, double beta1, double betaT) {
  return NoiseSchedule(T, beta1, betaT);
}

std::vector<double> q_sample_at(std::span<const double> x0, double alpha_bar,
                                std::span<const double> noise) {
  if (x0.size() != noise.size()) {
    throw DimensionError("q_sample: x0 has " + std::to_string(x0.size()) + " values, noise " +
                         std::to_string(noise.size()));
  }
  if (!(alpha_bar >= 0.0 && alpha_bar <= 1.0)) {
    throw ParameterError("q_sample: alpha_bar must lie in [0, 1]");
  }
  const double a = std::sqrt(alpha_bar);
  const double b = std::sqrt(1.0 - alpha_bar);
  std::vector<double> out(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + b * noise[i];
  return out;
}

std::vector<double> q_sample(std::span<const double> x0, int t, std::span<const double> noise,
                             const NoiseSchedule& schedule) {
  return q_sample_at(x0, schedule.alpha_bar(t), noise);
}

}  // namespace prsd::diffusion
