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

#ifndef PRSD_DIFFUSION_SCHEDULE_H_
#define PRSD_DIFFUSION_SCHEDULE_H_

#include <span>
#include <vector>

namespace prsd::diffusion {

// Linear variance schedule. Accessors take the 1-based step t in [1, T];
// alpha_bar(0) is 1 so the t = 1 posterior needs no special case.
class NoiseSchedule {
 public:
  NoiseSchedule() = default;
  NoiseSchedule(int steps, double beta_first, double beta_last);

  int T() const { return static_cast<int>(beta_.size()); }
  double beta(int t) const { return beta_[index(t)]; }
  double alpha(int t) const { return alpha_[index(t)]; }
  double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bar_[index(t)]; }
  // Posterior variance beta_t * (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t).
  double posterior_variance(int t) const;

  const std::vector<double>& betas() const { return beta_; }
  const std::vector<double>& alphas() const { return alpha_; }
  const std::vector<double>& alpha_bars() const { return alpha_bar_; }

 private:
  std::size_t index(int t) const;

  std::vector<double> beta_;
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
};

NoiseSchedule build_schedule(int T = 400, double beta1 = 1e-4, double betaT = 0.02);

// x_t = sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * noise.
std::vector<double> q_sample_at(std::span<const double> x0, double alpha_bar,
                                std::span<const double> noise);
std::vector<double> q_sample(std::span<const double> x0, int t, std::span<const double> noise,
                             const NoiseSchedule& schedule);

}  // namespace prsd::diffusion

#endif  // PRSD_DIFFUSION_SCHEDULE_H_
