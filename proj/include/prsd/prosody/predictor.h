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

#ifndef PRSD_PROSODY_PREDICTOR_H_
#define PRSD_PROSODY_PREDICTOR_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prsd/nn/layers.h"

namespace prsd::prosody {

// Frozen upstream features of one clip: speaker s, emotion o (both
// clip-level) and a frame-wise content sequence c.
struct ProsodyInputs {
  std::vector<double> s;
  std::vector<double> o;
  std::vector<double> c;  // [n_frames x D_c]
  std::size_t n_frames = 0;
};

struct PredictorConfig {
  std::size_t speaker_dim = 8;
  std::size_t emotion_dim = 6;
  std::size_t content_dim = 8;
  std::size_t model_dim = 64;
  std::size_t heads = 4;
  std::size_t ffn_dim = 128;
  std::size_t blocks = 2;
  // false: the o columns are zeroed, keeping the input width unchanged.
  bool use_emotion = true;

  std::size_t input_dim() const { return speaker_dim + emotion_dim + content_dim; }
};

// Row t = [s | o | c_t]; s and o are repeated on every frame.
nn::Tensor assemble_conditioning(const ProsodyInputs& in, const PredictorConfig& cfg);

enum class ProsodyKind { kPitch, kEnergy };
const char* kind_name(ProsodyKind kind);

// Self-attention over the assembled sequence (with sinusoidal positions)
// followed by a feed-forward head producing one value per frame. Targets are
// modeled in standardized units; predict() maps back.
class ProsodyPredictor : public nn::Module {
 public:
  ProsodyPredictor(const PredictorConfig& cfg, nn::Rng& rng);

  // Items must share n_frames. Returns standardized predictions [B * F, 1].
  nn::Tensor forward(std::span<const ProsodyInputs> batch);
  std::vector<double> predict(const ProsodyInputs& in);

  void set_target_stats(double mean, double std);
  double target_mean() const { return target_stats_.data()[0]; }
  double target_std() const { return target_stats_.data()[1]; }
  const PredictorConfig& config() const { return cfg_; }
  void visit(const std::string& prefix, const Visitor& fn) override;

 private:
  PredictorConfig cfg_;
  nn::Linear input_;
  std::vector<nn::AttentionBlock> blocks_;
  nn::LayerNorm final_norm_;
  nn::Mlp head_;
  nn::Tensor target_stats_;  // buffer [mean, std]
};

struct ProsodyExample {
  std::string clip_id;
  ProsodyInputs inputs;
  std::vector<double> target;  // per frame
};

struct PredictorTrainOptions {
  int steps = 1500;
  std::size_t batch = 8;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  bool fit_target_stats = true;
};

// Adam on frame-wise MSE. Returns the per-step training loss. Throws
// DatasetError naming the clip when a target is not frame-aligned with c.
std::vector<double> train_predictor(ProsodyPredictor& predictor,
                                    std::span<const ProsodyExample> data,
                                    const PredictorTrainOptions& opts);

// Mean squared error over every frame of every example.
double evaluate_predictor(ProsodyPredictor& predictor, std::span<const ProsodyExample> data);

struct ProsodyPrediction {
  std::vector<double> pitch_hat;
  std::vector<double> energy_hat;
};

ProsodyPrediction predict_prosody(ProsodyPredictor& pitch, ProsodyPredictor& energy,
                                  const ProsodyInputs& inputs);

}  // namespace prsd::prosody

#endif  // PRSD_PROSODY_PREDICTOR_H_
