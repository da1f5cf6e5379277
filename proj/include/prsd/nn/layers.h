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

#ifndef PRSD_NN_LAYERS_H_
#define PRSD_NN_LAYERS_H_

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "prsd/nn/tensor.h"

namespace prsd::nn {

using Rng = std::mt19937_64;

struct NamedTensor {
  std::string name;
  Tensor tensor;
  bool trainable = true;
};

// Base for anything holding parameters. Modules are move-only: Tensor is a
// shared handle, so an implicit copy would alias the parameters.
class Module {
 public:
  Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;
  Module(Module&&) = default;
  Module& operator=(Module&&) = default;
  virtual ~Module() = default;

  using Visitor = std::function<void(const std::string& name, Tensor& t, bool trainable)>;
  virtual void visit(const std::string& prefix, const Visitor& fn) = 0;

  // Trainable parameters and non-trainable buffers, in a stable order.
  std::vector<NamedTensor> state();
  std::vector<Tensor> parameters();
  void zero_grad();
  void set_trainable(bool flag);
  // Copies values (not handles) from a module of identical structure.
  void copy_state_from(Module& other);
  std::size_t parameter_count();
};

// Turns off parameter gradients for a scope and restores the previous flags,
// so guards nest.
class FreezeGuard {
 public:
  explicit FreezeGuard(Module& m) : params_(m.parameters()) {
    for (auto& p : params_) {
      previous_.push_back(p.requires_grad());
      p.set_requires_grad(false);
    }
  }
  ~FreezeGuard() {
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i].set_requires_grad(previous_[i]);
  }
  FreezeGuard(const FreezeGuard&) = delete;
  FreezeGuard& operator=(const FreezeGuard&) = delete;

 private:
  std::vector<Tensor> params_;
  std::vector<bool> previous_;
};

class Linear : public Module {
 public:
  Linear() = default;
  // Uniform(-1/sqrt(in), 1/sqrt(in)) weights, zero bias.
  Linear(std::size_t in, std::size_t out, Rng& rng, bool zero_init = false);

  Tensor forward(const Tensor& x) const;
  void visit(const std::string& prefix, const Visitor& fn) override;

  std::size_t in_dim() const { return weight_.rows(); }
  std::size_t out_dim() const { return weight_.cols(); }
  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }

 private:
  Tensor weight_;  // [in, out]
  Tensor bias_;    // [1, out]
};

class LayerNorm : public Module {
 public:
  LayerNorm() = default;
  explicit LayerNorm(std::size_t dim);

  Tensor forward(const Tensor& x) const;
  void visit(const std::string& prefix, const Visitor& fn) override;

 private:
  Tensor gamma_;
  Tensor beta_;
};

// Linear -> SiLU -> ... -> Linear.
class Mlp : public Module {
 public:
  Mlp() = default;
  Mlp(const std::vector<std::size_t>& dims, Rng& rng, bool zero_last = false);

  Tensor forward(const Tensor& x) const;
  void visit(const std::string& prefix, const Visitor& fn) override;
  std::size_t in_dim() const { return layers_.front().in_dim(); }
  std::size_t out_dim() const { return layers_.back().out_dim(); }

 private:
  std::vector<Linear> layers_;
};

struct AttentionConfig {
  std::size_t model_dim = 64;
  std::size_t heads = 4;
  std::size_t ffn_dim = 128;
};

// Pre-layer-norm transformer block:
//   h = x + Wo attn(LN1 x),  y = h + FFN(LN2 h)
// applied independently to each block of seq_len rows.
class AttentionBlock : public Module {
 public:
  AttentionBlock() = default;
  AttentionBlock(const AttentionConfig& cfg, Rng& rng);

  Tensor forward(const Tensor& x, std::size_t seq_len) const;
  void visit(const std::string& prefix, const Visitor& fn) override;
  const AttentionConfig& config() const { return cfg_; }

 private:
  AttentionConfig cfg_;
  LayerNorm ln1_, ln2_;
  Linear wq_, wk_, wv_, wo_;
  Linear ff1_, ff2_;
};

// Standard sinusoidal table: row = position, sin on even columns, cos on odd.
std::vector<double> sinusoidal_table(std::size_t positions, std::size_t dim);
// Sinusoidal embedding of one scalar position (e.g. a diffusion step).
std::vector<double> sinusoidal_embedding(double position, std::size_t dim);
// [B*seq_len, dim] constant tensor repeating the first seq_len table rows.
Tensor positional_encoding(std::size_t batch, std::size_t seq_len, std::size_t dim);

}  // namespace prsd::nn

#endif  // PRSD_NN_LAYERS_H_
