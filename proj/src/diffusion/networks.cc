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

#include "prsd/diffusion/networks.h"

#include <cmath>
#include <string>

#include "prsd/errors.h"

namespace prsd::diffusion {

using nn::Tensor;

namespace {

Tensor small_normal(nn::Shape shape, nn::Rng& rng, double scale) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(nn::shape_size(shape));
  for (double& x : v) x = d(rng);
  return Tensor::from_data(std::move(shape), std::move(v), true);
}

void check_steps(std::span<const int> steps, std::size_t batch) {
  if (steps.size() != batch) {
    throw DimensionError("expected " + std::to_string(batch) + " diffusion steps, got " +
                         std::to_string(steps.size()));
  }
}

}  // namespace

std::size_t batch_frames(std::span<const ConditioningBundle> cond, const Tensor& x_t,
                         std::size_t data_dim) {
  if (cond.empty()) throw DimensionError("empty conditioning batch");
  const std::size_t F = cond.front().n_frames;
  for (const auto& b : cond) {
    if (b.n_frames != F) throw DimensionError("items in one batch must share n_frames");
  }
  if (x_t.rows() != cond.size() * F || x_t.cols() != data_dim) {
    throw DimensionError("x_t shape " + nn::shape_string(x_t.shape()) + " vs expected [" +
                         std::to_string(cond.size() * F) + ", " + std::to_string(data_dim) +
                         "]");
  }
  return F;
}

Tensor step_embedding(std::span<const int> steps, std::size_t dim) {
  std::vector<double> out;
  out.reserve(steps.size() * dim);
  for (int t : steps) {
    auto row = nn::sinusoidal_embedding(static_cast<double>(t), dim);
    out.insert(out.end(), row.begin(), row.end());
  }
  return Tensor::from_data({steps.size(), dim}, std::move(out));
}

// ---- DiffusionDenoiser -----------------------------------------------------

DiffusionDenoiser::DiffusionDenoiser(const DenoiserConfig& cfg, nn::Rng& rng)
    : cfg_(cfg),
      input_(cfg.n_mels + cfg.content_dim + 2, cfg.model_dim, rng),
      speaker_(cfg.speaker_dim, cfg.model_dim, rng),
      output_(cfg.model_dim, cfg.n_mels, rng, /*zero_init=*/true),
      time_({cfg.time_dim, cfg.model_dim, cfg.model_dim}, rng),
      cond_({cfg.content_dim + 2 + cfg.speaker_dim, cfg.cond_hidden, cfg.model_dim}, rng),
      final_norm_(cfg.model_dim) {
  for (std::size_t i = 0; i < cfg.blocks; ++i) {
    blocks_.emplace_back(nn::AttentionConfig{cfg.model_dim, cfg.heads, cfg.ffn_dim}, rng);
  }
  null_s_ = small_normal({1, cfg.speaker_dim}, rng, 0.1);
  null_c_ = small_normal({1, cfg.content_dim}, rng, 0.1);
  null_pe_ = small_normal({1, 2}, rng, 0.1);
  prosody_stats_ = Tensor::from_data({1, 4}, {0.0, 1.0, 0.0, 1.0});
  alpha_bar_table_ = Tensor::from_data({0}, {});
}

void DiffusionDenoiser::set_prosody_stats(double p_mean, double p_std, double e_mean,
                                          double e_std) {
  if (!(p_std > 0.0 && e_std > 0.0)) throw ParameterError("prosody std must be positive");
  auto d = prosody_stats_.mutable_data();
  d[0] = p_mean;
  d[1] = p_std;
  d[2] = e_mean;
  d[3] = e_std;
}

Tensor DiffusionDenoiser::predict_noise(const Tensor& x_t, std::span<const int> steps,
                                        std::span<const ConditioningBundle> cond) {
  const std::size_t F = batch_frames(cond, x_t, cfg_.n_mels);
  const std::size_t B = cond.size();
  check_steps(steps, B);
  const std::size_t Dc = cfg_.content_dim, Ds = cfg_.speaker_dim;
  const auto stats = prosody_stats_.data();

  std::vector<double> c(B * F * Dc), pe(B * F * 2), s(B * Ds);
  std::vector<std::uint8_t> null_frames(B * F), null_pe(B * F), null_items(B);
  for (std::size_t b = 0; b < B; ++b) {
    const auto& cb = cond[b];
    null_items[b] = cb.null_flag;
    if (!cb.null_flag) {
      if (cb.s.size() != Ds || cb.c.size() != F * Dc) {
        throw DimensionError("conditioning item " + std::to_string(b) + ": s has " +
                             std::to_string(cb.s.size()) + " values (want " +
                             std::to_string(Ds) + "), c has " + std::to_string(cb.c.size()) +
                             " (want " + std::to_string(F * Dc) + ")");
      }
      std::copy(cb.s.begin(), cb.s.end(), s.begin() + b * Ds);
      std::copy(cb.c.begin(), cb.c.end(), c.begin() + b * F * Dc);
    }
    const bool drop_pe = cb.null_flag || cb.prosody_null;
    if (!drop_pe && (cb.p.size() != F || cb.e.size() != F)) {
      throw DimensionError("conditioning item " + std::to_string(b) +
                           ": pitch/energy length differs from n_frames " + std::to_string(F));
    }
    for (std::size_t f = 0; f < F; ++f) {
      const std::size_t r = b * F + f;
      null_frames[r] = cb.null_flag;
      null_pe[r] = drop_pe;
      if (!drop_pe) {
        pe[r * 2] = (cb.p[f] - stats[0]) / stats[1];
        pe[r * 2 + 1] = (cb.e[f] - stats[2]) / stats[3];
      }
    }
  }

  Tensor c_t = nn::replace_rows(Tensor::from_data({B * F, Dc}, std::move(c)), null_c_, null_frames);
  Tensor pe_t = nn::replace_rows(Tensor::from_data({B * F, 2}, std::move(pe)), null_pe_, null_pe);
  Tensor s_t = nn::replace_rows(Tensor::from_data({B, Ds}, s), null_s_, null_items);

  std::vector<double> s_frames(B * F * Ds);
  for (std::size_t r = 0; r < B * F; ++r) {
    std::copy(s.begin() + (r / F) * Ds, s.begin() + (r / F + 1) * Ds, s_frames.begin() + r * Ds);
  }
  Tensor s_rows =
      nn::replace_rows(Tensor::from_data({B * F, Ds}, std::move(s_frames)), null_s_, null_frames);

  Tensor h = nn::add(input_.forward(nn::concat_cols({x_t, c_t, pe_t})),
                     cond_.forward(nn::concat_cols({c_t, pe_t, s_rows})));
  Tensor item = nn::add(speaker_.forward(s_t), time_.forward(step_embedding(steps, cfg_.time_dim)));
  h = nn::add_segment_rows(h, item, F);
  if (position_frames_ != F) {
    position_table_ = nn::sinusoidal_table(F, cfg_.model_dim);
    position_frames_ = F;
  }
  std::vector<double> positions(B * F * cfg_.model_dim);
  for (std::size_t b = 0; b < B; ++b) {
    std::copy(position_table_.begin(), position_table_.end(),
              positions.begin() + b * F * cfg_.model_dim);
  }
  h = nn::add(h, Tensor::from_data({B * F, cfg_.model_dim}, std::move(positions)));
  for (const auto& block : blocks_) h = block.forward(h, F);
  Tensor head = output_.forward(final_norm_.forward(h));
  if (alpha_bar_table_.size() == 0) return head;

  const auto table = alpha_bar_table_.data();
  const std::size_t M = cfg_.n_mels;
  std::vector<double> a(B * F * M), b(B * F * M);
  for (std::size_t i = 0; i < B; ++i) {
    if (steps[i] < 1 || static_cast<std::size_t>(steps[i]) > table.size()) {
      throw ParameterError("step " + std::to_string(steps[i]) + " outside the attached schedule");
    }
    const double ab = table[steps[i] - 1];
    std::fill(a.begin() + i * F * M, a.begin() + (i + 1) * F * M, std::sqrt(ab));
    std::fill(b.begin() + i * F * M, b.begin() + (i + 1) * F * M, std::sqrt(1.0 - ab));
  }
  return nn::add(nn::mul(head, Tensor::from_data({B * F, M}, std::move(a))),
                 nn::mul(x_t, Tensor::from_data({B * F, M}, std::move(b))));
}

void DiffusionDenoiser::set_schedule(const NoiseSchedule& schedule) {
  const auto& ab = schedule.alpha_bars();
  alpha_bar_table_ = Tensor::from_data({ab.size()}, ab);
}

void DiffusionDenoiser::visit(const std::string& prefix, const Visitor& fn) {
  input_.visit(prefix + "input.", fn);
  speaker_.visit(prefix + "speaker.", fn);
  time_.visit(prefix + "time.", fn);
  cond_.visit(prefix + "cond.", fn);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].visit(prefix + "block" + std::to_string(i) + ".", fn);
  }
  final_norm_.visit(prefix + "final_norm.", fn);
  output_.visit(prefix + "output.", fn);
  fn(prefix + "null_s", null_s_, true);
  fn(prefix + "null_c", null_c_, true);
  fn(prefix + "null_pe", null_pe_, true);
  fn(prefix + "prosody_stats", prosody_stats_, false);
  if (alpha_bar_table_.size() > 0) fn(prefix + "alpha_bar_table", alpha_bar_table_, false);
}

// ---- MlpDenoiser -------------------------------------------------------------

namespace {

std::vector<std::size_t> mlp_dims(std::size_t in, std::size_t hidden, std::size_t layers,
                                  std::size_t out) {
  std::vector<std::size_t> dims{in};
  for (std::size_t i = 0; i < layers; ++i) dims.push_back(hidden);
  dims.push_back(out);
  return dims;
}

}  // namespace

MlpDenoiser::MlpDenoiser(const MlpDenoiserConfig& cfg, nn::Rng& rng)
    : cfg_(cfg),
      net_(mlp_dims(cfg.data_dim + cfg.time_dim + cfg.cond_dim, cfg.hidden, cfg.layers,
                    cfg.data_dim),
           rng, /*zero_last=*/true) {
  if (cfg.cond_dim > 0) null_s_ = small_normal({1, cfg.cond_dim}, rng, 0.1);
}

Tensor MlpDenoiser::predict_noise(const Tensor& x_t, std::span<const int> steps,
                                  std::span<const ConditioningBundle> cond) {
  const std::size_t F = batch_frames(cond, x_t, cfg_.data_dim);
  const std::size_t B = cond.size();
  check_steps(steps, B);
  std::vector<double> temb(B * F * cfg_.time_dim);
  for (std::size_t b = 0; b < B; ++b) {
    const auto row = nn::sinusoidal_embedding(static_cast<double>(steps[b]), cfg_.time_dim);
    for (std::size_t f = 0; f < F; ++f) {
      std::copy(row.begin(), row.end(), temb.begin() + (b * F + f) * cfg_.time_dim);
    }
  }
  std::vector<Tensor> parts{x_t, Tensor::from_data({B * F, cfg_.time_dim}, std::move(temb))};
  if (cfg_.cond_dim > 0) {
    const std::size_t D = cfg_.cond_dim;
    std::vector<double> s(B * F * D, 0.0);
    std::vector<std::uint8_t> mask(B * F);
    for (std::size_t b = 0; b < B; ++b) {
      if (!cond[b].null_flag && cond[b].s.size() != D) {
        throw DimensionError("conditioning item " + std::to_string(b) + ": s has " +
                             std::to_string(cond[b].s.size()) + " values, want " +
                             std::to_string(D));
      }
      for (std::size_t f = 0; f < F; ++f) {
        mask[b * F + f] = cond[b].null_flag;
        if (!cond[b].null_flag) {
          std::copy(cond[b].s.begin(), cond[b].s.end(), s.begin() + (b * F + f) * D);
        }
      }
    }
    parts.push_back(nn::replace_rows(Tensor::from_data({B * F, D}, std::move(s)), null_s_, mask));
  }
  return net_.forward(nn::concat_cols(parts));
}

void MlpDenoiser::visit(const std::string& prefix, const Visitor& fn) {
  net_.visit(prefix + "net.", fn);
  if (cfg_.cond_dim > 0) fn(prefix + "null_s", null_s_, true);
}

// ---- FrameClassifier -----------------------------------------------------------

FrameClassifier::FrameClassifier(const ClassifierConfig& cfg, nn::Rng& rng)
    : cfg_(cfg),
      frame_({cfg.data_dim + cfg.time_dim + cfg.position_dim, cfg.hidden, cfg.hidden}, rng),
      head_(cfg.hidden, cfg.num_classes, rng),
      invariant_(Tensor::from_data({0}, {})) {}

void FrameClassifier::set_invariant_direction(std::span<const double> direction) {
  if (direction.size() != cfg_.data_dim) {
    throw DimensionError("invariant direction needs " + std::to_string(cfg_.data_dim) + " values");
  }
  double norm = 0.0;
  for (double v : direction) norm += v * v;
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) throw ParameterError("invariant direction must be nonzero");
  std::vector<double> u(direction.begin(), direction.end());
  for (double& v : u) v /= norm;
  invariant_ = Tensor::from_data({cfg_.data_dim, 1}, std::move(u));
}

Tensor FrameClassifier::logits(const Tensor& x_t, std::span<const int> steps,
                               std::size_t n_frames) {
  if (n_frames == 0 || x_t.rows() != steps.size() * n_frames || x_t.cols() != cfg_.data_dim) {
    throw DimensionError("classifier input " + nn::shape_string(x_t.shape()) + " vs " +
                         std::to_string(steps.size()) + " items of " + std::to_string(n_frames) +
                         " frames x " + std::to_string(cfg_.data_dim));
  }
  const std::size_t B = steps.size();
  std::vector<double> temb(B * n_frames * cfg_.time_dim);
  for (std::size_t b = 0; b < B; ++b) {
    const auto row = nn::sinusoidal_embedding(static_cast<double>(steps[b]), cfg_.time_dim);
    for (std::size_t f = 0; f < n_frames; ++f) {
      std::copy(row.begin(), row.end(), temb.begin() + (b * n_frames + f) * cfg_.time_dim);
    }
  }
  Tensor x = x_t;
  if (invariant_.size() > 0) {
    std::vector<double> ut(invariant_.data().begin(), invariant_.data().end());
    x = nn::sub(x, nn::matmul(nn::matmul(x, invariant_),
                              Tensor::from_data({1, cfg_.data_dim}, std::move(ut))));
  }
  std::vector<Tensor> parts{x, Tensor::from_data({B * n_frames, cfg_.time_dim}, std::move(temb))};
  if (cfg_.position_dim > 0) {
    const auto table = nn::sinusoidal_table(n_frames, cfg_.position_dim);
    std::vector<double> pos;
    pos.reserve(B * table.size());
    for (std::size_t b = 0; b < B; ++b) pos.insert(pos.end(), table.begin(), table.end());
    parts.push_back(Tensor::from_data({B * n_frames, cfg_.position_dim}, std::move(pos)));
  }
  Tensor h = frame_.forward(nn::concat_cols(parts));
  return head_.forward(nn::segment_mean(nn::silu(h), n_frames));
}

void FrameClassifier::visit(const std::string& prefix, const Visitor& fn) {
  frame_.visit(prefix + "frame.", fn);
  head_.visit(prefix + "head.", fn);
  if (invariant_.size() > 0) fn(prefix + "invariant", invariant_, false);
}

}  // namespace prsd::diffusion
