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

#include "prsd/nn/layers.h"

#include <cmath>

#include "prsd/errors.h"

namespace prsd::nn {

std::vector<NamedTensor> Module::state() {
  std::vector<NamedTensor> out;
  visit("", [&](const std::string& name, Tensor& t, bool trainable) {
    out.push_back({name, t, trainable});
  });
  return out;
}

std::vector<Tensor> Module::parameters() {
  std::vector<Tensor> out;
  visit("", [&](const std::string&, Tensor& t, bool trainable) {
    if (trainable) out.push_back(t);
  });
  return out;
}

void Module::zero_grad() {
  for (auto& p : parameters()) p.zero_grad();
}

void Module::set_trainable(bool flag) {
  for (auto& p : parameters()) p.set_requires_grad(flag);
}

void Module::copy_state_from(Module& other) {
  auto mine = state();
  auto theirs = other.state();
  if (mine.size() != theirs.size()) {
    throw DimensionError("copy_state_from: module structures differ");
  }
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i].name != theirs[i].name ||
        mine[i].tensor.shape() != theirs[i].tensor.shape()) {
      throw DimensionError("copy_state_from: mismatch at " + mine[i].name);
    }
    auto src = theirs[i].tensor.data();
    auto dst = mine[i].tensor.mutable_data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

std::size_t Module::parameter_count() {
  std::size_t n = 0;
  for (auto& p : parameters()) n += p.size();
  return n;
}

// ---- Linear ----------------------------------------------------------------

Linear::Linear(std::size_t in, std::size_t out, Rng& rng, bool zero_init) {
  std::vector<double> w(in * out, 0.0);
  if (!zero_init) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : w) v = dist(rng);
  }
  weight_ = Tensor::from_data({in, out}, std::move(w), true);
  bias_ = Tensor::zeros({1, out}, true);
}

Tensor Linear::forward(const Tensor& x) const {
  if (x.cols() != weight_.rows()) {
    throw DimensionError("linear: input shape " + shape_string(x.shape()) +
                         " does not match weight shape " +
                         shape_string(weight_.shape()));
  }
  return add_row(matmul(x, weight_), bias_);
}

void Linear::visit(const std::string& prefix, const Visitor& fn) {
  fn(prefix + "weight", weight_, true);
  fn(prefix + "bias", bias_, true);
}

// ---- LayerNorm -------------------------------------------------------------

LayerNorm::LayerNorm(std::size_t dim)
    : gamma_(Tensor::full({1, dim}, 1.0, true)),
      beta_(Tensor::zeros({1, dim}, true)) {}

Tensor LayerNorm::forward(const Tensor& x) const {
  return layer_norm(x, gamma_, beta_);
}

void LayerNorm::visit(const std::string& prefix, const Visitor& fn) {
  fn(prefix + "gamma", gamma_, true);
  fn(prefix + "beta", beta_, true);
}

// ---- Mlp -------------------------------------------------------------------

Mlp::Mlp(const std::vector<std::size_t>& dims, Rng& rng, bool zero_last) {
  if (dims.size() < 2) throw ParameterError("mlp needs at least two dims");
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const bool last = i + 2 == dims.size();
    layers_.emplace_back(dims[i], dims[i + 1], rng, last && zero_last);
  }
}

Tensor Mlp::forward(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].forward(h);
    if (i + 1 < layers_.size()) h = silu(h);
  }
  return h;
}

void Mlp::visit(const std::string& prefix, const Visitor& fn) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].visit(prefix + std::to_string(i) + ".", fn);
  }
}

// ---- AttentionBlock --------------------------------------------------------

AttentionBlock::AttentionBlock(const AttentionConfig& cfg, Rng& rng)
    : cfg_(cfg),
      ln1_(cfg.model_dim),
      ln2_(cfg.model_dim),
      wq_(cfg.model_dim, cfg.model_dim, rng),
      wk_(cfg.model_dim, cfg.model_dim, rng),
      wv_(cfg.model_dim, cfg.model_dim, rng),
      wo_(cfg.model_dim, cfg.model_dim, rng),
      ff1_(cfg.model_dim, cfg.ffn_dim, rng),
      ff2_(cfg.ffn_dim, cfg.model_dim, rng) {
  if (cfg.heads == 0 || cfg.model_dim % cfg.heads != 0) {
    throw ParameterError("attention block: model_dim " + std::to_string(cfg.model_dim) +
                         " not divisible by heads " + std::to_string(cfg.heads));
  }
}

Tensor AttentionBlock::forward(const Tensor& x, std::size_t seq_len) const {
  if (x.cols() != cfg_.model_dim) {
    throw DimensionError("attention block: input shape " + shape_string(x.shape()) +
                         " vs model dim " + std::to_string(cfg_.model_dim));
  }
  Tensor n1 = ln1_.forward(x);
  Tensor a = attention(wq_.forward(n1), wk_.forward(n1), wv_.forward(n1), cfg_.heads,
                       seq_len);
  Tensor h = add(x, wo_.forward(a));
  Tensor f = ff2_.forward(silu(ff1_.forward(ln2_.forward(h))));
  return add(h, f);
}

void AttentionBlock::visit(const std::string& prefix, const Visitor& fn) {
  ln1_.visit(prefix + "ln1.", fn);
  wq_.visit(prefix + "wq.", fn);
  wk_.visit(prefix + "wk.", fn);
  wv_.visit(prefix + "wv.", fn);
  wo_.visit(prefix + "wo.", fn);
  ln2_.visit(prefix + "ln2.", fn);
  ff1_.visit(prefix + "ff1.", fn);
  ff2_.visit(prefix + "ff2.", fn);
}

// ---- encodings ---------------------------------------------------------------

std::vector<double> sinusoidal_embedding(double position, std::size_t dim) {
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const double freq = std::pow(10000.0, -static_cast<double>(i / 2 * 2) /
                                              static_cast<double>(dim));
    out[i] = (i % 2 == 0) ? std::sin(position * freq) : std::cos(position * freq);
  }
  return out;
}

std::vector<double> sinusoidal_table(std::size_t positions, std::size_t dim) {
  std::vector<double> out(positions * dim);
  for (std::size_t p = 0; p < positions; ++p) {
    auto row = sinusoidal_embedding(static_cast<double>(p), dim);
    std::copy(row.begin(), row.end(), out.begin() + p * dim);
  }
  return out;
}

Tensor positional_encoding(std::size_t batch, std::size_t seq_len, std::size_t dim) {
  auto table = sinusoidal_table(seq_len, dim);
  std::vector<double> out(batch * seq_len * dim);
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy(table.begin(), table.end(), out.begin() + b * seq_len * dim);
  }
  return Tensor::from_data({batch * seq_len, dim}, std::move(out));
}

}  // namespace prsd::nn
