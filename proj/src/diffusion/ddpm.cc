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

#include "prsd/diffusion/ddpm.h"

#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "prsd/errors.h"

namespace prsd::diffusion {

using nn::Tensor;

TrainingDraw draw_training(std::size_t batch, std::size_t values_per_item,
                           const NoiseSchedule& schedule, const TrainingOptions& opts,
                           nn::Rng& rng) {
  if (batch == 0) throw DimensionError("training batch is empty");
  if (!(opts.dropout_prob >= 0.0 && opts.dropout_prob <= 1.0) ||
      !(opts.prosody_dropout_prob >= 0.0 && opts.prosody_dropout_prob <= 1.0)) {
    throw ParameterError("dropout probabilities must lie in [0, 1]");
  }
  TrainingDraw d;
  std::uniform_int_distribution<int> step(1, schedule.T());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t b = 0; b < batch; ++b) d.steps.push_back(step(rng));
  d.noise.resize(batch * values_per_item);
  for (double& z : d.noise) z = normal(rng);
  for (std::size_t b = 0; b < batch; ++b) {
    d.drop.push_back(unit(rng) < opts.dropout_prob);
    d.drop_prosody.push_back(unit(rng) < opts.prosody_dropout_prob);
  }
  return d;
}

std::vector<ConditioningBundle> apply_dropout(std::span<const ConditioningBundle> cond,
                                              const TrainingDraw& draw) {
  std::vector<ConditioningBundle> out(cond.begin(), cond.end());
  for (std::size_t b = 0; b < out.size(); ++b) {
    if (draw.drop[b]) out[b].null_flag = true;
    if (draw.drop_prosody[b]) out[b].prosody_null = true;
  }
  return out;
}

namespace {

std::vector<double> noised_batch(std::span<const double> x0, const TrainingDraw& draw,
                                 const NoiseSchedule& schedule) {
  const std::size_t B = draw.steps.size();
  if (x0.size() != draw.noise.size() || x0.size() % B != 0) {
    throw DimensionError("x0 has " + std::to_string(x0.size()) + " values, draw expects " +
                         std::to_string(draw.noise.size()));
  }
  const std::size_t per = x0.size() / B;
  std::vector<double> x_t(x0.size());
  for (std::size_t b = 0; b < B; ++b) {
    auto item = q_sample(x0.subspan(b * per, per), draw.steps[b],
                         std::span<const double>(draw.noise).subspan(b * per, per), schedule);
    std::copy(item.begin(), item.end(), x_t.begin() + b * per);
  }
  return x_t;
}

}  // namespace

Tensor diffusion_loss(NoisePredictor& model, std::span<const double> x0,
                      std::span<const ConditioningBundle> cond, const TrainingDraw& draw,
                      const NoiseSchedule& schedule) {
  if (cond.size() != draw.steps.size()) {
    throw DimensionError("conditioning batch and draw sizes differ");
  }
  const std::size_t M = model.data_dim();
  const std::size_t rows = x0.size() / M;
  auto x_t = noised_batch(x0, draw, schedule);
  auto dropped = apply_dropout(cond, draw);
  Tensor pred = model.predict_noise(Tensor::from_data({rows, M}, std::move(x_t)), draw.steps,
                                    dropped);
  return nn::mse_loss(pred, Tensor::from_data({rows, M}, draw.noise));
}

double training_step(NoisePredictor& model, std::span<const double> x0,
                     std::span<const ConditioningBundle> cond, const NoiseSchedule& schedule,
                     const TrainingOptions& opts, nn::Rng& rng, std::int64_t step_index) {
  if (cond.empty()) throw DimensionError("training batch is empty");
  auto draw = draw_training(cond.size(), x0.size() / cond.size(), schedule, opts, rng);
  Tensor loss = diffusion_loss(model, x0, cond, draw, schedule);
  const double value = loss.item();
  if (!std::isfinite(value)) {
    throw TrainingError("non-finite diffusion loss at training step " +
                        std::to_string(step_index));
  }
  loss.backward();
  return value;
}

Tensor classifier_loss(NoisyClassifier& classifier, std::span<const double> x0,
                       std::size_t n_frames, std::span<const int> labels,
                       const TrainingDraw& draw, const NoiseSchedule& schedule) {
  const std::size_t B = draw.steps.size();
  if (labels.size() != B) throw DimensionError("one label per item required");
  const std::size_t M = x0.size() / (B * n_frames);
  auto x_t = noised_batch(x0, draw, schedule);
  Tensor logits = classifier.logits(Tensor::from_data({B * n_frames, M}, std::move(x_t)),
                                    draw.steps, n_frames);
  return nn::scale(nn::sum(nn::gather_cols(nn::log_softmax(logits), labels)),
                   -1.0 / static_cast<double>(B));
}

std::vector<double> classifier_gradient(NoisyClassifier& classifier, std::span<const double> x_t,
                                        std::span<const int> steps, std::size_t n_frames,
                                        std::span<const int> labels) {
  const std::size_t B = steps.size();
  if (labels.size() != B) throw DimensionError("one label per item required");
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= classifier.num_classes()) {
      throw DimensionError("classifier label " + std::to_string(l) + " out of range");
    }
  }
  nn::FreezeGuard freeze(classifier);
  const std::size_t M = x_t.size() / (B * n_frames);
  Tensor x = Tensor::from_data({B * n_frames, M}, std::vector<double>(x_t.begin(), x_t.end()),
                               true);
  Tensor logp = nn::gather_cols(nn::log_softmax(classifier.logits(x, steps, n_frames)), labels);
  nn::sum(logp).backward();
  return std::vector<double>(x.grad().begin(), x.grad().end());
}

std::vector<double> combine_guidance(std::span<const double> eps_cond,
                                     std::span<const double> eps_uncond,
                                     std::span<const double> grad, double w1, double w2,
                                     double sqrt_one_minus_alpha_bar, bool normalize,
                                     std::size_t item_size) {
  const std::size_t n = eps_cond.size();
  if (eps_uncond.size() != n || (!grad.empty() && grad.size() != n) || item_size == 0 ||
      n % item_size != 0) {
    throw DimensionError("guidance terms have mismatched sizes");
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (1.0 + w1) * eps_cond[i] - w1 * eps_uncond[i];
  if (grad.empty()) return out;

  for (std::size_t start = 0; start < n; start += item_size) {
    double scale = w2 * sqrt_one_minus_alpha_bar;
    if (normalize) {
      double g2 = 0.0, e2 = 0.0;
      for (std::size_t i = start; i < start + item_size; ++i) {
        g2 += grad[i] * grad[i];
        e2 += out[i] * out[i];
      }
      if (g2 == 0.0) continue;
      scale *= std::sqrt(e2) / std::sqrt(g2);
    }
    for (std::size_t i = start; i < start + item_size; ++i) out[i] -= scale * grad[i];
  }
  return out;
}

std::vector<double> guided_epsilon(NoisePredictor& model, std::span<const double> x_t, int t,
                                   std::span<const ConditioningBundle> cond,
                                   const GuidanceConfig& g, const ClassifierTarget* target,
                                   const NoiseSchedule& schedule) {
  if (g.w1 < 0.0 || g.w2 < 0.0) throw ParameterError("guidance weights must be >= 0");
  for (const auto& b : cond) {
    if (b.null_flag) throw ContractError("guided_epsilon expects conditional bundles");
  }
  nn::FreezeGuard freeze(model);
  const std::size_t B = cond.size();
  const std::size_t M = model.data_dim();
  const std::size_t F = cond.empty() ? 0 : cond.front().n_frames;
  const std::vector<int> steps(B, t);
  const Tensor x = Tensor::from_data({B * F, M}, std::vector<double>(x_t.begin(), x_t.end()));
  batch_frames(cond, x, M);

  Tensor eps_c = model.predict_noise(x, steps, cond);
  std::vector<double> eps_u(eps_c.size(), 0.0);
  if (g.w1 != 0.0) {
    std::vector<ConditioningBundle> null_cond(cond.begin(), cond.end());
    for (auto& b : null_cond) b.null_flag = true;
    Tensor u = model.predict_noise(x, steps, null_cond);
    eps_u.assign(u.data().begin(), u.data().end());
  }
  std::vector<double> grad;
  if (target != nullptr && target->classifier != nullptr && g.w2 != 0.0) {
    grad = classifier_gradient(*target->classifier, x_t, steps, F, target->labels);
  }
  return combine_guidance(eps_c.data(), eps_u, grad, g.w1, g.w2,
                          std::sqrt(1.0 - schedule.alpha_bar(t)), g.grad_normalize, F * M);
}

std::vector<double> ddpm_sample(NoisePredictor& model, std::span<const ConditioningBundle> cond,
                                const GuidanceConfig& g, const ClassifierTarget* target,
                                const NoiseSchedule& schedule, std::uint64_t seed,
                                std::span<const std::uint64_t> chain_ids) {
  const std::size_t B = cond.size();
  if (B == 0) throw DimensionError("nothing to sample");
  if (!chain_ids.empty() && chain_ids.size() != B) {
    throw DimensionError("one chain id per conditioning bundle required");
  }
  const std::size_t per = cond.front().n_frames * model.data_dim();
  std::vector<nn::Rng> rngs;
  rngs.reserve(B);
  for (std::size_t b = 0; b < B; ++b) {
    const std::uint64_t id = chain_ids.empty() ? b : chain_ids[b];
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32)};
    rngs.emplace_back(seq);
  }
  // One distribution per chain: normal_distribution caches a spare value.
  std::vector<std::normal_distribution<double>> normal(B);
  std::vector<double> x(B * per);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < per; ++i) x[b * per + i] = normal[b](rngs[b]);
  }

  for (int t = schedule.T(); t >= 1; --t) {
    const auto eps = guided_epsilon(model, x, t, cond, g, target, schedule);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(schedule.alpha(t));
    const double coef = schedule.beta(t) / std::sqrt(1.0 - schedule.alpha_bar(t));
    const double sigma = t > 1 ? std::sqrt(schedule.posterior_variance(t)) : 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t i = b * per; i < (b + 1) * per; ++i) {
        x[i] = (x[i] - coef * eps[i]) * inv_sqrt_alpha;
        if (t > 1) x[i] += sigma * normal[b](rngs[b]);
      }
    }
    if (!nn::all_finite(x)) {
      throw SamplingError("non-finite sampler state at step t = " + std::to_string(t));
    }
  }
  return x;
}

}  // namespace prsd::diffusion
