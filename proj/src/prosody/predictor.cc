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

#include "prsd/prosody/predictor.h"

#include <cmath>
#include <map>
#include <random>

#include "prsd/errors.h"
#include "prsd/nn/optim.h"

namespace prsd::prosody {

using nn::Tensor;

const char* kind_name(ProsodyKind kind) {
  return kind == ProsodyKind::kPitch ? "pitch" : "energy";
}

namespace {

void check_inputs(const ProsodyInputs& in, const PredictorConfig& cfg) {
  if (in.s.size() != cfg.speaker_dim || in.o.size() != cfg.emotion_dim ||
      in.c.size() != in.n_frames * cfg.content_dim || in.n_frames == 0) {
    throw DimensionError("prosody inputs: s " + std::to_string(in.s.size()) + ", o " +
                         std::to_string(in.o.size()) + ", c " + std::to_string(in.c.size()) +
                         " for " + std::to_string(in.n_frames) + " frames; expected D_s " +
                         std::to_string(cfg.speaker_dim) + ", D_o " +
                         std::to_string(cfg.emotion_dim) + ", D_c " +
                         std::to_string(cfg.content_dim));
  }
}

void append_rows(std::vector<double>& out, const ProsodyInputs& in, const PredictorConfig& cfg) {
  for (std::size_t f = 0; f < in.n_frames; ++f) {
    out.insert(out.end(), in.s.begin(), in.s.end());
    if (cfg.use_emotion) {
      out.insert(out.end(), in.o.begin(), in.o.end());
    } else {
      out.insert(out.end(), cfg.emotion_dim, 0.0);
    }
    const auto* c = in.c.data() + f * cfg.content_dim;
    out.insert(out.end(), c, c + cfg.content_dim);
  }
}

}  // namespace

Tensor assemble_conditioning(const ProsodyInputs& in, const PredictorConfig& cfg) {
  check_inputs(in, cfg);
  std::vector<double> rows;
  rows.reserve(in.n_frames * cfg.input_dim());
  append_rows(rows, in, cfg);
  return Tensor::from_data({in.n_frames, cfg.input_dim()}, std::move(rows));
}

ProsodyPredictor::ProsodyPredictor(const PredictorConfig& cfg, nn::Rng& rng)
    : cfg_(cfg),
      input_(cfg.input_dim(), cfg.model_dim, rng),
      final_norm_(cfg.model_dim),
      head_({cfg.model_dim, cfg.model_dim, 1}, rng, /*zero_last=*/true),
      target_stats_(Tensor::from_data({1, 2}, {0.0, 1.0})) {
  for (std::size_t i = 0; i < cfg.blocks; ++i) {
    blocks_.emplace_back(nn::AttentionConfig{cfg.model_dim, cfg.heads, cfg.ffn_dim}, rng);
  }
}

void ProsodyPredictor::set_target_stats(double mean, double std) {
  if (!(std > 0.0)) throw ParameterError("target std must be positive");
  auto d = target_stats_.mutable_data();
  d[0] = mean;
  d[1] = std;
}

Tensor ProsodyPredictor::forward(std::span<const ProsodyInputs> batch) {
  if (batch.empty()) throw DimensionError("empty prosody batch");
  const std::size_t F = batch.front().n_frames;
  std::vector<double> rows;
  rows.reserve(batch.size() * F * cfg_.input_dim());
  for (const auto& in : batch) {
    check_inputs(in, cfg_);
    if (in.n_frames != F) throw DimensionError("items in one batch must share n_frames");
    append_rows(rows, in, cfg_);
  }
  const std::size_t B = batch.size();
  Tensor h = input_.forward(Tensor::from_data({B * F, cfg_.input_dim()}, std::move(rows)));
  h = nn::add(h, nn::positional_encoding(B, F, cfg_.model_dim));
  for (const auto& block : blocks_) h = block.forward(h, F);
  return head_.forward(final_norm_.forward(h));
}

std::vector<double> ProsodyPredictor::predict(const ProsodyInputs& in) {
  nn::FreezeGuard freeze(*this);
  Tensor z = forward(std::span<const ProsodyInputs>(&in, 1));
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = target_mean() + target_std() * z.data()[i];
  }
  return out;
}

void ProsodyPredictor::visit(const std::string& prefix, const Visitor& fn) {
  input_.visit(prefix + "input.", fn);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].visit(prefix + "block" + std::to_string(i) + ".", fn);
  }
  final_norm_.visit(prefix + "final_norm.", fn);
  head_.visit(prefix + "head.", fn);
  fn(prefix + "target_stats", target_stats_, false);
}

namespace {

void check_alignment(std::span<const ProsodyExample> data) {
  if (data.empty()) throw DatasetError("prosody training set is empty");
  for (const auto& ex : data) {
    if (ex.target.size() != ex.inputs.n_frames) {
      throw DatasetError("clip '" + ex.clip_id + "': target has " +
                         std::to_string(ex.target.size()) + " frames, content has " +
                         std::to_string(ex.inputs.n_frames));
    }
  }
}

// Loss over a set of examples, grouped by length so each group runs as one
// batch. Frames are weighted equally across groups.
Tensor batch_loss(ProsodyPredictor& p, std::span<const ProsodyExample> data,
                  const std::vector<std::size_t>& idx) {
  std::map<std::size_t, std::vector<std::size_t>> groups;
  std::size_t frames = 0;
  for (auto i : idx) {
    groups[data[i].inputs.n_frames].push_back(i);
    frames += data[i].inputs.n_frames;
  }
  Tensor total;
  for (const auto& [F, members] : groups) {
    std::vector<ProsodyInputs> inputs;
    std::vector<double> target;
    for (auto i : members) {
      inputs.push_back(data[i].inputs);
      for (double v : data[i].target) target.push_back((v - p.target_mean()) / p.target_std());
    }
    Tensor pred = p.forward(inputs);
    Tensor loss = nn::scale(nn::mse_loss(pred, Tensor::from_data(pred.shape(), target)),
                            static_cast<double>(pred.size()) / frames);
    total = total.defined() ? nn::add(total, loss) : loss;
  }
  return total;
}

}  // namespace

std::vector<double> train_predictor(ProsodyPredictor& predictor,
                                    std::span<const ProsodyExample> data,
                                    const PredictorTrainOptions& opts) {
  check_alignment(data);
  if (opts.fit_target_stats) {
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (const auto& ex : data) {
      for (double v : ex.target) {
        sum += v;
        ++n;
      }
    }
    const double mean = sum / n;
    for (const auto& ex : data) {
      for (double v : ex.target) sq += (v - mean) * (v - mean);
    }
    const double std = std::sqrt(sq / n);
    predictor.set_target_stats(mean, std > 1e-8 ? std : 1.0);
  }

  nn::Rng rng(opts.seed);
  auto params = predictor.parameters();
  auto adam = nn::make_adam_state(params, opts.learning_rate);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  const std::size_t batch = std::min(opts.batch, data.size());
  std::vector<double> history;
  history.reserve(opts.steps);
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  for (int step = 0; step < opts.steps; ++step) {
    std::vector<std::size_t> idx;
    if (batch == data.size()) {
      idx = all;
    } else {
      for (std::size_t k = 0; k < batch; ++k) idx.push_back(pick(rng));
    }
    predictor.zero_grad();
    Tensor loss = batch_loss(predictor, data, idx);
    if (!std::isfinite(loss.item())) {
      throw TrainingError("non-finite prosody loss at step " + std::to_string(step));
    }
    loss.backward();
    nn::adam_step(params, adam);
    history.push_back(loss.item());
  }
  return history;
}

double evaluate_predictor(ProsodyPredictor& predictor, std::span<const ProsodyExample> data) {
  check_alignment(data);
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& ex : data) {
    auto pred = predictor.predict(ex.inputs);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      total += (pred[i] - ex.target[i]) * (pred[i] - ex.target[i]);
      ++n;
    }
  }
  return total / n;
}

ProsodyPrediction predict_prosody(ProsodyPredictor& pitch, ProsodyPredictor& energy,
                                  const ProsodyInputs& inputs) {
  return {pitch.predict(inputs), energy.predict(inputs)};
}

}  // namespace prsd::prosody
