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

#ifndef PRSD_DIFFUSION_NETWORKS_H_
#define PRSD_DIFFUSION_NETWORKS_H_

#include <span>
#include <vector>

#include "prsd/diffusion/schedule.h"
#include "prsd/nn/layers.h"

namespace prsd::diffusion {

// Conditioning attached to one clip. `c`, `p` and `e` are frame-aligned with
// the target mel; a network that does not use a field leaves it empty.
struct ConditioningBundle {
  std::vector<double> s;          // speaker embedding [D_s]
  std::vector<double> c;          // content embedding [n_frames x D_c]
  std::vector<double> p;          // normalized pitch [n_frames]
  std::vector<double> e;          // energy [n_frames]
  std::size_t n_frames = 1;
  bool null_flag = false;         // unconditional branch: every field nulled
  bool prosody_null = false;      // p and e nulled, s and c kept
};

// Frames per item shared by a batch; throws DimensionError otherwise.
std::size_t batch_frames(std::span<const ConditioningBundle> cond, const nn::Tensor& x_t,
                         std::size_t data_dim);

class NoisePredictor : public nn::Module {
 public:
  virtual std::size_t data_dim() const = 0;
  // x_t: [B * n_frames, data_dim] with items stacked; one step and one
  // bundle per item. Returns the predicted noise with x_t's shape.
  virtual nn::Tensor predict_noise(const nn::Tensor& x_t, std::span<const int> steps,
                                   std::span<const ConditioningBundle> cond) = 0;
};

class NoisyClassifier : public nn::Module {
 public:
  virtual std::size_t num_classes() const = 0;
  // Unnormalized class scores [B, K] for noised inputs x_t [B * n_frames, M].
  virtual nn::Tensor logits(const nn::Tensor& x_t, std::span<const int> steps,
                            std::size_t n_frames) = 0;
};

// Sinusoidal embeddings of the diffusion step, one row per item: [B, dim].
nn::Tensor step_embedding(std::span<const int> steps, std::size_t dim);

struct DenoiserConfig {
  std::size_t n_mels = 16;
  std::size_t speaker_dim = 8;
  std::size_t content_dim = 8;
  std::size_t model_dim = 32;
  std::size_t heads = 2;
  std::size_t ffn_dim = 64;
  std::size_t blocks = 2;
  std::size_t time_dim = 32;
  std::size_t cond_hidden = 64;
};

// Mel denoiser: per-frame projection of [x_t | c | p | e], plus projected
// speaker embedding, step embedding and sinusoidal frame positions, then
// pre-LN self-attention blocks and a zero-initialized output head. A small
// per-frame MLP over [c | p | e | s] adds a nonlinear conditioning path.
class DiffusionDenoiser : public NoisePredictor {
 public:
  DiffusionDenoiser(const DenoiserConfig& cfg, nn::Rng& rng);

  std::size_t data_dim() const override { return cfg_.n_mels; }
  nn::Tensor predict_noise(const nn::Tensor& x_t, std::span<const int> steps,
                           std::span<const ConditioningBundle> cond) override;
  void visit(const std::string& prefix, const Visitor& fn) override;

  // Pitch/energy standardization applied before the input projection.
  void set_prosody_stats(double p_mean, double p_std, double e_mean, double e_std);
  // With a schedule attached the head output F is read as a v-prediction and
  // the returned noise is sqrt(abar_t) * F + sqrt(1 - abar_t) * x_t. At high
  // noise levels F then only has to regress -x0 from the conditioning. The
  // table is stored as a buffer, so attach it before loading a checkpoint.
  void set_schedule(const NoiseSchedule& schedule);
  const DenoiserConfig& config() const { return cfg_; }

 private:
  DenoiserConfig cfg_;
  nn::Linear input_, speaker_, output_;
  nn::Mlp time_, cond_;
  std::vector<nn::AttentionBlock> blocks_;
  nn::LayerNorm final_norm_;
  nn::Tensor null_s_, null_c_, null_pe_;
  nn::Tensor prosody_stats_;  // buffer [p_mean, p_std, e_mean, e_std]
  nn::Tensor alpha_bar_table_;  // buffer [T], empty for a plain noise head
  std::vector<double> position_table_;  // sinusoidal rows for position_frames_
  std::size_t position_frames_ = 0;
};

struct MlpDenoiserConfig {
  std::size_t data_dim = 1;
  std::size_t cond_dim = 0;      // length of s; 0 for an unconditional model
  std::size_t hidden = 64;
  std::size_t layers = 3;
  std::size_t time_dim = 32;
};

// Dense denoiser over [x_t | step embedding | s] rows for low-dimensional
// data. Null conditioning swaps s for a learned vector.
class MlpDenoiser : public NoisePredictor {
 public:
  MlpDenoiser(const MlpDenoiserConfig& cfg, nn::Rng& rng);

  std::size_t data_dim() const override { return cfg_.data_dim; }
  nn::Tensor predict_noise(const nn::Tensor& x_t, std::span<const int> steps,
                           std::span<const ConditioningBundle> cond) override;
  void visit(const std::string& prefix, const Visitor& fn) override;

 private:
  MlpDenoiserConfig cfg_;
  nn::Mlp net_;
  nn::Tensor null_s_;
};

struct ClassifierConfig {
  std::size_t data_dim = 16;
  std::size_t num_classes = 6;
  std::size_t hidden = 64;
  std::size_t time_dim = 32;
  std::size_t position_dim = 0;  // sinusoidal frame-position features, 0 for none
};

// Per-frame MLP over [x_t | step embedding | frame position], mean-pooled
// over frames, then a linear class head.
class FrameClassifier : public NoisyClassifier {
 public:
  FrameClassifier(const ClassifierConfig& cfg, nn::Rng& rng);

  std::size_t num_classes() const override { return cfg_.num_classes; }
  nn::Tensor logits(const nn::Tensor& x_t, std::span<const int> steps,
                    std::size_t n_frames) override;
  void visit(const std::string& prefix, const Visitor& fn) override;

  // Removes the component of every input frame along `direction` before
  // scoring, which makes the scores and their input gradient blind to it.
  // Stored as a buffer: set it before loading a checkpoint.
  void set_invariant_direction(std::span<const double> direction);

 private:
  ClassifierConfig cfg_;
  nn::Mlp frame_;
  nn::Linear head_;
  nn::Tensor invariant_;  // buffer [data_dim, 1], unit norm; empty when unused
};

}  // namespace prsd::diffusion

#endif  // PRSD_DIFFUSION_NETWORKS_H_
