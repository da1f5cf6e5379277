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

#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>

#include "doctest.h"
#include "grad_check.h"
#include "prsd/errors.h"
#include "prsd/nn/checkpoint.h"
#include "prsd/nn/layers.h"
#include "prsd/nn/optim.h"

using namespace prsd;
using namespace prsd::nn;
using prsd::testing::max_grad_error;
using prsd::testing::random_values;
using prsd::testing::weighted_sum;

namespace {

// Naive re-implementation of AttentionBlock::forward with explicit loops.
std::vector<double> scripted_block(std::map<std::string, Tensor>& p,
                                   const std::vector<double>& x, std::size_t F,
                                   std::size_t d, std::size_t heads, std::size_t ffn) {
  auto ln = [&](const std::vector<double>& in, const std::string& name) {
    std::vector<double> out(in.size());
    auto g = p[name + "gamma"].data(), b = p[name + "beta"].data();
    for (std::size_t i = 0; i < F; ++i) {
      double mu = 0, var = 0;
      for (std::size_t j = 0; j < d; ++j) mu += in[i * d + j];
      mu /= d;
      for (std::size_t j = 0; j < d; ++j) var += std::pow(in[i * d + j] - mu, 2);
      var /= d;
      for (std::size_t j = 0; j < d; ++j)
        out[i * d + j] = (in[i * d + j] - mu) / std::sqrt(var + 1e-5) * g[j] + b[j];
    }
    return out;
  };
  auto lin = [&](const std::vector<double>& in, const std::string& name, std::size_t nin,
                 std::size_t nout) {
    std::vector<double> out(F * nout);
    auto w = p[name + "weight"].data(), b = p[name + "bias"].data();
    for (std::size_t i = 0; i < F; ++i)
      for (std::size_t o = 0; o < nout; ++o) {
        double s = b[o];
        for (std::size_t k = 0; k < nin; ++k) s += in[i * nin + k] * w[k * nout + o];
        out[i * nout + o] = s;
      }
    return out;
  };
  auto n1 = ln(x, "ln1.");
  auto q = lin(n1, "wq.", d, d), k = lin(n1, "wk.", d, d), v = lin(n1, "wv.", d, d);
  const std::size_t dh = d / heads;
  std::vector<double> att(F * d, 0.0);
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < F; ++i) {
      std::vector<double> s(F);
      double mx = -1e300;
      for (std::size_t j = 0; j < F; ++j) {
        double dot = 0;
        for (std::size_t c = 0; c < dh; ++c) dot += q[i * d + h * dh + c] * k[j * d + h * dh + c];
        s[j] = dot / std::sqrt(static_cast<double>(dh));
        mx = std::max(mx, s[j]);
      }
      double z = 0;
      for (auto& e : s) z += (e = std::exp(e - mx));
      for (std::size_t j = 0; j < F; ++j)
        for (std::size_t c = 0; c < dh; ++c) att[i * d + h * dh + c] += s[j] / z * v[j * d + h * dh + c];
    }
  }
  auto o = lin(att, "wo.", d, d);
  std::vector<double> h(F * d);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = x[i] + o[i];
  auto f1 = lin(ln(h, "ln2."), "ff1.", d, ffn);
  for (auto& e : f1) e = e / (1 + std::exp(-e));
  auto f2 = lin(f1, "ff2.", ffn, d);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] += f2[i];
  return h;
}

}  // namespace

TEST_CASE("dense layer with identity weights is the identity") {
  Rng rng(1);
  Linear lin(4, 4, rng);
  auto w = lin.weight().mutable_data();
  std::fill(w.begin(), w.end(), 0.0);
  for (int i = 0; i < 4; ++i) w[i * 4 + i] = 1.0;
  auto x = Tensor::from_data({3, 4}, random_values(12, rng));
  auto y = lin.forward(x);
  for (std::size_t i = 0; i < 12; ++i) CHECK(y.data()[i] == x.data()[i]);
}

TEST_CASE("attention over a single key returns the value row") {
  Rng rng(2);
  auto q = Tensor::from_data({1, 4}, random_values(4, rng));
  auto k = Tensor::from_data({1, 4}, random_values(4, rng));
  auto v = Tensor::from_data({1, 4}, random_values(4, rng));
  auto out = attention(q, k, v, 2, 1);
  for (std::size_t i = 0; i < 4; ++i) CHECK(out.data()[i] == doctest::Approx(v.data()[i]).epsilon(1e-15));
}

TEST_CASE("two-head block matches a scripted matrix computation") {
  Rng rng(3);
  AttentionConfig cfg{8, 2, 16};
  AttentionBlock block(cfg, rng);
  std::map<std::string, Tensor> params;
  for (auto& s : block.state()) params[s.name] = s.tensor;
  // Perturb layer-norm parameters away from the identity init.
  for (auto name : {"ln1.gamma", "ln1.beta", "ln2.gamma", "ln2.beta"}) {
    auto d = params[name].mutable_data();
    auto r = random_values(d.size(), rng, 0.3);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += r[i];
  }
  auto xv = random_values(32, rng);
  auto y = block.forward(Tensor::from_data({4, 8}, xv), 4);
  auto expected = scripted_block(params, xv, 4, 8, 2, 16);
  REQUIRE(y.shape() == Shape{4, 8});
  CHECK(all_finite(y.data()));
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(std::abs(y.data()[i] - expected[i]) < 1e-12);
  }
}

TEST_CASE("backward of a linear sum gives all-ones") {
  auto x = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  sum(x).backward();
  for (double g : x.grad()) CHECK(g == 1.0);
}

TEST_CASE("mse at the minimum has zero gradient") {
  auto x = Tensor::from_data({1, 3}, {0.5, -1.0, 2.0}, true);
  auto t = Tensor::from_data({1, 3}, {0.5, -1.0, 2.0});
  mse_loss(x, t).backward();
  for (double g : x.grad()) CHECK(g == 0.0);
}

TEST_CASE("backward on a non-scalar is a contract violation") {
  auto x = Tensor::from_data({1, 2}, {1, 2}, true);
  CHECK_THROWS_AS(scale(x, 2.0).backward(), ContractError);
}

TEST_CASE("shape mismatch errors name both shapes") {
  auto a = Tensor::zeros({2, 3});
  auto b = Tensor::zeros({2, 4});
  try {
    (void)matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    std::string msg = e.what();
    CHECK(msg.find("[2, 3]") != std::string::npos);
    CHECK(msg.find("[2, 4]") != std::string::npos);
  }
  Rng rng(0);
  Linear lin(5, 2, rng);
  CHECK_THROWS_AS(lin.forward(a), DimensionError);
}

TEST_CASE("finite-difference gradients: linear") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    CAPTURE(seed);
    Linear lin(8, 5, rng);
    auto x = Tensor::from_data({3, 8}, random_values(24, rng), true);
    auto w = random_values(15, rng);
    auto params = lin.parameters();
    params.push_back(x);
    CHECK(max_grad_error([&] { return weighted_sum(lin.forward(x), w); }, params) < 1e-3);
  }
}

TEST_CASE("finite-difference gradients: layer norm") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    CAPTURE(seed);
    LayerNorm ln(8);
    for (auto& p : ln.parameters()) {
      auto d = p.mutable_data();
      auto r = random_values(d.size(), rng, 0.5);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += r[i];
    }
    auto x = Tensor::from_data({2, 8}, random_values(16, rng), true);
    auto w = random_values(16, rng);
    auto params = ln.parameters();
    params.push_back(x);
    CHECK(max_grad_error([&] { return weighted_sum(ln.forward(x), w); }, params) < 1e-3);
  }
}

TEST_CASE("finite-difference gradients: self-attention block") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    CAPTURE(seed);
    AttentionBlock block({8, 2, 16}, rng);
    auto x = Tensor::from_data({8, 8}, random_values(64, rng), true);
    auto w = random_values(64, rng);
    auto params = block.parameters();
    params.push_back(x);
    CHECK(max_grad_error([&] { return weighted_sum(block.forward(x, 4), w); }, params) < 1e-3);
  }
}

TEST_CASE("finite-difference gradients: elementwise and reshaping ops") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    CAPTURE(seed);
    auto a = Tensor::from_data({4, 2}, random_values(8, rng), true);
    auto b = Tensor::from_data({4, 2}, random_values(8, rng), true);
    auto row = Tensor::from_data({1, 2}, random_values(2, rng), true);
    auto seg = Tensor::from_data({2, 2}, random_values(2 * 2, rng), true);
    std::vector<std::uint8_t> mask{1, 0, 0, 1};
    std::vector<int> labels{1, 0, 2, 1};
    auto w8 = random_values(8, rng), w4 = random_values(4, rng), w16 = random_values(16, rng);
    auto w4s = random_values(4, rng);
    auto loss = [&] {
      auto h = tanh(add(mul(a, b), scale(sub(a, b), 0.7)));
      h = add_segment_rows(add_row(silu(h), row), seg, 2);
      h = replace_rows(h, row, mask);
      auto cat = concat_cols({h, slice_cols(a, 1, 1)});
      auto logits = concat_cols({cat, segment_mean(slice_cols(b, 0, 1), 1)});
      auto lp = gather_cols(log_softmax(logits), labels);
      return add(add(weighted_sum(h, w8), weighted_sum(lp, w4)),
                 add(add(weighted_sum(logits, w16), mse_loss(a, b)),
                       weighted_sum(segment_mean(b, 2), w4s)));
    };
    CHECK(max_grad_error(loss, {a, b, row, seg}) < 1e-3);
  }
}

TEST_CASE("softmax rows are non-negative and sum to one") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto v = random_values(6 * 9, rng, 5.0);
    softmax_rows(v, 6, 9);
    for (int i = 0; i < 6; ++i) {
      double s = 0;
      for (int j = 0; j < 9; ++j) {
        CHECK(v[i * 9 + j] >= 0.0);
        s += v[i * 9 + j];
      }
      CHECK(std::abs(s - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("self-attention without positions is permutation equivariant") {
  Rng rng(11);
  AttentionBlock block({8, 2, 16}, rng);
  const std::size_t F = 6;
  auto xv = random_values(F * 8, rng);
  std::vector<std::size_t> perm(F);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> xp(F * 8);
  for (std::size_t i = 0; i < F; ++i)
    std::copy_n(xv.begin() + perm[i] * 8, 8, xp.begin() + i * 8);
  auto y = block.forward(Tensor::from_data({F, 8}, xv), F);
  auto yp = block.forward(Tensor::from_data({F, 8}, xp), F);
  for (std::size_t i = 0; i < F; ++i)
    for (std::size_t j = 0; j < 8; ++j)
      CHECK(std::abs(yp.at(i, j) - y.at(perm[i], j)) < 1e-9);
}

TEST_CASE("block output keeps the sequence length for batched segments") {
  Rng rng(5);
  AttentionBlock block({8, 4, 8}, rng);
  auto y = block.forward(Tensor::from_data({3 * 5, 8}, random_values(120, rng)), 5);
  CHECK(y.shape() == Shape{15, 8});
  CHECK_THROWS_AS(block.forward(Tensor::zeros({7, 8}), 5), DimensionError);
}

TEST_CASE("forward, backward and optimizer are deterministic") {
  auto run = [] {
    Rng rng(42);
    AttentionBlock block({8, 2, 16}, rng);
    auto params = block.parameters();
    auto state = make_adam_state(params);
    auto x = Tensor::from_data({4, 8}, random_values(32, rng));
    std::vector<double> trace;
    for (int step = 0; step < 3; ++step) {
      block.zero_grad();
      auto loss = mean(mul(block.forward(x, 4), block.forward(x, 4)));
      loss.backward();
      adam_step(params, state);
      trace.push_back(loss.item());
    }
    for (auto& p : params) trace.insert(trace.end(), p.data().begin(), p.data().end());
    return trace;
  };
  CHECK(run() == run());
}

TEST_CASE("adam with zero gradient and zero moments leaves parameters unchanged") {
  auto p = Tensor::from_data({1, 3}, {0.1, -0.2, 0.3}, true);
  std::vector<Tensor> params{p};
  auto state = make_adam_state(params);
  p.zero_grad();
  p.mutable_grad();  // allocate explicit zeros
  adam_step(params, state);
  CHECK(p.data()[0] == 0.1);
  CHECK(p.data()[1] == -0.2);
  CHECK(p.data()[2] == 0.3);
  CHECK(state.step_count == 1);
}

TEST_CASE("adam moves a scalar opposite a constant gradient") {
  for (double g : {2.5, -0.75}) {
    auto p = Tensor::scalar(1.0, true);
    std::vector<Tensor> params{p};
    auto state = make_adam_state(params, 1e-2);
    for (int i = 0; i < 50; ++i) {
      p.zero_grad();
      p.mutable_grad()[0] = g;
      adam_step(params, state);
    }
    CHECK((p.item() - 1.0) * g < 0.0);
    CHECK(state.step_count == 50);
  }
}

TEST_CASE("adam trajectory on a scalar quadratic matches the hand recursion") {
  // loss = 0.5 * a * (x - c)^2, gradient a * (x - c).
  const double a = 3.0, c = 0.4, lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double x = 2.0, m = 0.0, v = 0.0;
  std::vector<double> expected;
  for (int t = 1; t <= 3; ++t) {
    const double g = a * (x - c);
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    x -= lr * mhat / (std::sqrt(vhat) + eps);
    expected.push_back(x);
  }

  auto p = Tensor::scalar(2.0, true);
  std::vector<Tensor> params{p};
  auto state = make_adam_state(params, lr, b1, b2, eps);
  for (int t = 0; t < 3; ++t) {
    p.zero_grad();
    auto target = Tensor::scalar(c);
    scale(mul(sub(p, target), sub(p, target)), 0.5 * a).backward();
    adam_step(params, state);
    CHECK(std::abs(p.item() - expected[t]) < 1e-12);
  }
}

TEST_CASE("adam rejects non-finite gradients without touching state") {
  auto p = Tensor::from_data({1, 2}, {1.0, 2.0}, true);
  std::vector<Tensor> params{p};
  auto state = make_adam_state(params);
  p.mutable_grad()[0] = std::nan("");
  CHECK_THROWS_AS(adam_step(params, state), NumericError);
  CHECK(state.step_count == 0);
  CHECK(p.data()[0] == 1.0);
  CHECK(state.first_moment[0][1] == 0.0);
}

TEST_CASE("checkpoint container round-trips parameters") {
  Rng rng(9);
  AttentionBlock a({8, 2, 16}, rng), b({8, 2, 16}, rng);
  auto path = std::filesystem::temp_directory_path() / "prsd_nn_ckpt_test.prsd";
  save_checkpoint(path, a, {{"meta.version", {1}, {3.0}}});
  auto bundle = load_checkpoint(path, b);
  CHECK(bundle.scalar("meta.version") == 3.0);
  auto sa = a.state(), sb = b.state();
  for (std::size_t i = 0; i < sa.size(); ++i) {
    CHECK(std::equal(sa[i].tensor.data().begin(), sa[i].tensor.data().end(),
                     sb[i].tensor.data().begin()));
  }
  std::string bytes = encode_container(module_to_arrays(a));
  CHECK(bytes.substr(0, 4) == "PRSD");
  CHECK(bytes[4] == 1);
  CHECK_THROWS_AS(decode_container("XXXX" + bytes.substr(4)), FormatError);
  CHECK_THROWS_AS(decode_container(bytes.substr(0, bytes.size() - 3)), FormatError);

  AttentionBlock wrong({8, 2, 8}, rng);
  CHECK_THROWS_AS(load_checkpoint(path, wrong), DimensionError);
  std::filesystem::remove(path);
}
