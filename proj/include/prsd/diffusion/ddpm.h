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

#ifndef PRSD_DIFFUSION_DDPM_H_
#define PRSD_DIFFUSION_DDPM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "prsd/diffusion/networks.h"
#include "prsd/diffusion/schedule.h"

namespace prsd::diffusion {

// ---- training ----------------------------------------------------------------

// Random quantities of one training step, drawn separately from the loss so a
// step can be replayed exactly.
struct TrainingDraw {
  std::vector<int> steps;                // per item, uniform in [1, T]
  std::vector<double> noise;             // standard normal, shape of x0
  std::vector<std::uint8_t> drop;        // per item: train the null branch
  std::vector<std::uint8_t> drop_prosody;  // per item: null p/e only
};

struct TrainingOptions {
  double dropout_prob = 0.1;
  double prosody_dropout_prob = 0.0;
};

TrainingDraw draw_training(std::size_t batch, std::size_t values_per_item,
                           const NoiseSchedule& schedule, const TrainingOptions& opts,
                           nn::Rng& rng);

// Bundles with null_flag / prosody_null set per the draw.
std::vector<ConditioningBundle> apply_dropout(std::span<const ConditioningBundle> cond,
                                              const TrainingDraw& draw);

// Mean squared error between predicted and drawn noise at x_t = q_sample(x0).
// Returns the graph so the caller can backpropagate.
nn::Tensor diffusion_loss(NoisePredictor& model, std::span<const double> x0,
                          std::span<const ConditioningBundle> cond, const TrainingDraw& draw,
                          const NoiseSchedule& schedule);

// Draw, loss and backward in one call; gradients accumulate on the model.
// Throws TrainingError naming `step_index` when the loss is not finite.
double training_step(NoisePredictor& model, std::span<const double> x0,
                     std::span<const ConditioningBundle> cond, const NoiseSchedule& schedule,
                     const TrainingOptions& opts, nn::Rng& rng, std::int64_t step_index = 0);

// Cross-entropy of the classifier on noised inputs; returns the loss graph.
nn::Tensor classifier_loss(NoisyClassifier& classifier, std::span<const double> x0,
                           std::size_t n_frames, std::span<const int> labels,
                           const TrainingDraw& draw, const NoiseSchedule& schedule);

// ---- guidance ----------------------------------------------------------------

struct GuidanceConfig {
  double w1 = 2.0;     // classifier-free weight
  double w2 = 1.5;     // classifier weight
  bool grad_normalize = true;
};

struct ClassifierTarget {
  NoisyClassifier* classifier = nullptr;
  std::vector<int> labels;  // one per item
};

// Gradient of sum_b log p(label_b | x_t^b) with respect to x_t. Items are
// independent so each block of the result is that item's own gradient.
std::vector<double> classifier_gradient(NoisyClassifier& classifier, std::span<const double> x_t,
                                        std::span<const int> steps, std::size_t n_frames,
                                        std::span<const int> labels);

// (1 + w1) eps_c - w1 eps_u - w2 * sqrt(1 - alpha_bar_t) * G, evaluated per
// item of `item_size` values. With normalization on, each item's G is first
// rescaled to the Frobenius norm of that item's first two terms (skipped when
// the gradient is zero). `grad` may be empty for "no classifier".
std::vector<double> combine_guidance(std::span<const double> eps_cond,
                                     std::span<const double> eps_uncond,
                                     std::span<const double> grad, double w1, double w2,
                                     double sqrt_one_minus_alpha_bar, bool normalize,
                                     std::size_t item_size);

// Guided noise estimate for a batch sharing step t. The conditional and
// unconditional branches run as separate passes; the unconditional pass is
// skipped when w1 = 0 and the classifier when w2 = 0 or target is null.
std::vector<double> guided_epsilon(NoisePredictor& model, std::span<const double> x_t, int t,
                                   std::span<const ConditioningBundle> cond,
                                   const GuidanceConfig& g, const ClassifierTarget* target,
                                   const NoiseSchedule& schedule);

// ---- sampling ----------------------------------------------------------------

// Ancestral sampling from t = T down to 1 for every bundle in `cond`. Chain b
// draws x_T and its per-step noise from its own generator seeded by
// (seed, chain_ids[b]); chain_ids defaults to 0..B-1. Returns
// [B * n_frames, data_dim] values. Throws SamplingError on a non-finite state.
std::vector<double> ddpm_sample(NoisePredictor& model, std::span<const ConditioningBundle> cond,
                                const GuidanceConfig& g, const ClassifierTarget* target,
                                const NoiseSchedule& schedule, std::uint64_t seed,
                                std::span<const std::uint64_t> chain_ids = {});

}  // namespace prsd::diffusion

#endif  // PRSD_DIFFUSION_DDPM_H_
