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

#include <chrono>
#include <cmath>
#include <random>

#include "doctest.h"
#include "grad_check.h"
#include "prsd/diffusion/ddpm.h"
#include "prsd/errors.h"
#include "toy_diffusion.h"

using namespace prsd;
using namespace prsd::diffusion;
using nn::Tensor;

namespace {

// Predicts exactly the noise that produced x_t from a known x0.
class TrueNoiseStub : public NoisePredictor {
 public:
  TrueNoiseStub(std::vector<double> x0, std::size_t dim, const NoiseSchedule& s)
      : x0_(std::move(x0)), dim_(dim), schedule_(s) {}
  std::size_t data_dim() const override { return dim_; }
  Tensor predict_noise(const Tensor& x_t, std::span<const int> steps,
                       std::span<const ConditioningBundle> cond) override {
    const std::size_t per = x_t.size() / cond.size();
    std::vector<double> out(x_t.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double ab = schedule_.alpha_bar(steps[i / per]);
      out[i] = (x_t.data()[i] - std::sqrt(ab) * x0_[i]) / std::sqrt(1.0 - ab);
    }
    return Tensor::from_data(x_t.shape(), out);
  }
  void visit(const std::string&, const Visitor&) override {}

 private:
  std::vector<double> x0_;
  std::size_t dim_;
  NoiseSchedule schedule_;
};

// Constant outputs: a for the conditional branch, b for the null branch.
class ConstantStub : public NoisePredictor {
 public:
  ConstantStub(std::size_t dim, double a, double b) : dim_(dim), a_(a), b_(b) {}
  std::size_t data_dim() const override { return dim_; }
  Tensor predict_noise(const Tensor& x_t, std::span<const int>,
                       std::span<const ConditioningBundle> cond) override {
    seen_null.clear();
    for (const auto& c : cond) seen_null.push_back(c.null_flag);
    const std::size_t per = x_t.size() / cond.size();
    std::vector<double> out(x_t.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = cond[i / per].null_flag ? b_ : a_;
    if (poison) out[0] = std::nan("");
    return Tensor::from_data(x_t.shape(), out);
  }
  void visit(const std::string&, const Visitor&) override {}

  std::vector<bool> seen_null;
  bool poison = false;

 private:
  std::size_t dim_;
  double a_, b_;
};

// Two-class linear scorer: logits = [sum(x * u), sum(x * v)] per item.
class LinearClassifier : public NoisyClassifier {
 public:
  LinearClassifier(std::vector<double> u, std::vector<double> v, bool constant = false)
      : u_(std::move(u)), v_(std::move(v)), constant_(constant) {}
  std::size_t num_classes() const override { return 2; }
  Tensor logits(const Tensor& x_t, std::span<const int> steps, std::size_t n_frames) override {
    const std::size_t B = steps.size();
    if (constant_) return Tensor::from_data({B, 2}, std::vector<double>(2 * B, 0.3));
    Tensor U = Tensor::from_data({x_t.cols(), 1}, std::vector<double>(u_.begin(), u_.begin() + x_t.cols()));
    Tensor V = Tensor::from_data({x_t.cols(), 1}, std::vector<double>(v_.begin(), v_.begin() + x_t.cols()));
    Tensor lu = nn::segment_mean(nn::matmul(x_t, U), n_frames);
    Tensor lv = nn::segment_mean(nn::matmul(x_t, V), n_frames);
    return nn::scale(nn::concat_cols({lu, lv}), static_cast<double>(n_frames));
  }
  void visit(const std::string&, const Visitor&) override {}

 private:
  std::vector<double> u_, v_;
  bool constant_;
};

std::vector<ConditioningBundle> plain_bundles(std::size_t n, std::size_t frames = 1) {
  ConditioningBundle b;
  b.n_frames = frames;
  return std::vector<ConditioningBundle>(n, b);
}

}  // namespace

TEST_CASE("linear schedule endpoints and interpolation") {
  auto s = build_schedule(400, 1e-4, 0.02);
  CHECK(s.T() == 400);
  CHECK(s.beta(1) == 1e-4);
  CHECK(std::abs(s.beta(400) - 0.02) < 1e-15);
  CHECK(std::abs(s.beta(200) - (1e-4 + 199.0 / 399.0 * (0.02 - 1e-4))) < 1e-15);
  CHECK(std::abs(s.alpha_bar(1) - 0.9999) < 1e-15);
  CHECK(s.alpha_bar(0) == 1.0);
}

TEST_CASE("alpha_bar equals the running product and decreases") {
  for (auto [T, b1, bT] : {std::tuple{400, 1e-4, 0.02}, std::tuple{50, 1e-3, 0.05},
                           std::tuple{1, 0.01, 0.01}, std::tuple{1000, 1e-4, 0.02}}) {
    auto s = build_schedule(T, b1, bT);
    double prod = 1.0;
    for (int t = 1; t <= T; ++t) {
      prod *= 1.0 - s.beta(t);
      CHECK(std::abs(s.alpha_bar(t) - prod) < 1e-12);
      if (t > 1) {
        CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
        if (b1 < bT) CHECK(s.beta(t) > s.beta(t - 1));
      }
    }
    CHECK(s.alpha_bar(T) > 0.0);
    CHECK(s.alpha_bar(1) < 1.0);
  }
}

TEST_CASE("invalid schedules are rejected") {
  CHECK_THROWS_AS(build_schedule(0, 1e-4, 0.02), ParameterError);
  CHECK_THROWS_AS(build_schedule(10, 0.0, 0.02), ParameterError);
  CHECK_THROWS_AS(build_schedule(10, 0.03, 0.02), ParameterError);
  CHECK_THROWS_AS(build_schedule(10, 1e-4, 1.0), ParameterError);
  CHECK_THROWS_AS(build_schedule(10, 1e-4, 0.02).alpha(11), ParameterError);
}

TEST_CASE("q_sample limits") {
  std::vector<double> x0{0.5, -1.0, 2.0}, noise{0.1, 0.2, -0.3};
  CHECK(q_sample_at(x0, 1.0, noise) == x0);
  auto s = build_schedule();
  auto z = q_sample(std::vector<double>(3, 0.0), 123, noise, s);
  for (int i = 0; i < 3; ++i) CHECK(z[i] == std::sqrt(1.0 - s.alpha_bar(123)) * noise[i]);
  CHECK_THROWS_AS(q_sample(x0, 1, std::vector<double>(2, 0.0), s), DimensionError);
}

TEST_CASE("q_sample moments match the forward-process marginal") {
  auto s = build_schedule();
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  const double x0 = 1.3;
  const int draws = 10000;
  for (int t : {1, 200, 400}) {
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < draws; ++i) {
      const double z = n(rng);
      const double x = q_sample(std::vector<double>{x0}, t, std::vector<double>{z}, s)[0];
      sum += x;
      sq += x * x;
    }
    const double mean = sum / draws;
    const double var = (sq - draws * mean * mean) / (draws - 1);
    const double want_var = 1.0 - s.alpha_bar(t);
    CHECK(std::abs(mean - std::sqrt(s.alpha_bar(t)) * x0) < 3.0 * std::sqrt(want_var / draws));
    CHECK(std::abs(var - want_var) < 3.0 * want_var * std::sqrt(2.0 / (draws - 1)));
  }
}

TEST_CASE("a denoiser that returns the true noise has zero loss") {
  auto s = build_schedule();
  nn::Rng rng(3);
  auto x0 = testing::random_values(4 * 6, rng);
  TrueNoiseStub stub(x0, 2, s);
  auto cond = plain_bundles(4, 3);
  for (int k = 0; k < 5; ++k) {
    auto draw = draw_training(4, 6, s, {}, rng);
    CHECK(diffusion_loss(stub, x0, cond, draw, s).item() < 1e-20);
  }
}

TEST_CASE("dropout probability one trains only the null branch") {
  auto s = build_schedule();
  nn::Rng rng(4);
  ConstantStub stub(1, 0.0, 0.0);
  auto cond = plain_bundles(16);
  std::vector<double> x0(16, 0.5);
  for (int k = 0; k < 3; ++k) {
    auto draw = draw_training(16, 1, s, {1.0, 0.0}, rng);
    for (auto d : draw.drop) CHECK(d == 1);
    (void)diffusion_loss(stub, x0, cond, draw, s);
    for (bool seen : stub.seen_null) CHECK(seen);
  }
  auto none = draw_training(16, 1, s, {0.0, 0.0}, rng);
  for (auto d : none.drop) CHECK(d == 0);
}

TEST_CASE("training loss matches a step-by-step recomputation") {
  auto s = build_schedule();
  nn::Rng init(5);
  DenoiserConfig cfg;
  cfg.n_mels = 4;
  cfg.speaker_dim = 3;
  cfg.content_dim = 2;
  cfg.model_dim = 8;
  cfg.ffn_dim = 16;
  DiffusionDenoiser model(cfg, init);
  // Give the zero-initialized head some weight so the check is not trivial.
  for (auto& st : model.state()) {
    if (st.name == "output.weight") {
      for (double& w : st.tensor.mutable_data()) w = 0.1;
    }
  }

  const std::size_t B = 3, F = 5;
  std::vector<ConditioningBundle> cond;
  for (std::size_t b = 0; b < B; ++b) {
    ConditioningBundle c;
    c.n_frames = F;
    c.s = testing::random_values(3, init);
    c.c = testing::random_values(F * 2, init);
    c.p = testing::random_values(F, init);
    c.e = testing::random_values(F, init);
    cond.push_back(c);
  }
  auto x0 = testing::random_values(B * F * 4, init);

  nn::Rng a(77), b(77);
  TrainingOptions opts{0.3, 0.3};
  const double loss = training_step(model, x0, cond, s, opts, a);

  auto draw = draw_training(B, F * 4, s, opts, b);
  double total = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    const int t = draw.steps[i];
    std::vector<double> x_t(F * 4);
    for (std::size_t k = 0; k < F * 4; ++k) {
      x_t[k] = std::sqrt(s.alpha_bar(t)) * x0[i * F * 4 + k] +
               std::sqrt(1.0 - s.alpha_bar(t)) * draw.noise[i * F * 4 + k];
    }
    ConditioningBundle c = cond[i];
    c.null_flag = draw.drop[i];
    c.prosody_null = draw.drop_prosody[i];
    std::vector<int> steps{t};
    auto pred = model.predict_noise(Tensor::from_data({F, 4}, x_t), steps,
                                    std::span<const ConditioningBundle>(&c, 1));
    for (std::size_t k = 0; k < F * 4; ++k) {
      const double d = pred.data()[k] - draw.noise[i * F * 4 + k];
      total += d * d;
    }
  }
  CHECK(std::abs(loss - total / (B * F * 4)) < 1e-10);
  bool any_grad = false;
  for (auto& p : model.parameters()) any_grad = any_grad || p.has_grad();
  CHECK(any_grad);
}

TEST_CASE("non-finite loss raises a training error naming the step") {
  auto s = build_schedule();
  ConstantStub stub(1, 0.0, 0.0);
  stub.poison = true;
  nn::Rng rng(1);
  auto cond = plain_bundles(2);
  try {
    training_step(stub, std::vector<double>{0.0, 0.0}, cond, s, {}, rng, 17);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()).find("17") != std::string::npos);
  }
}

TEST_CASE("guidance degenerates to the conditional output at zero weights") {
  nn::Rng rng(6);
  MlpDenoiser model({2, 2, 16, 2, 8}, rng);
  for (auto& p : model.parameters()) {
    for (double& v : p.mutable_data()) v += 0.05;
  }
  auto s = build_schedule();
  auto cond = testing::class_bundles(1, 5);
  auto x = testing::random_values(10, rng);
  LinearClassifier clf({1.0, -0.5}, {0.2, 0.7});
  ClassifierTarget target{&clf, std::vector<int>(5, 1)};
  auto eps = guided_epsilon(model, x, 50, cond, {0.0, 0.0, true}, &target, s);
  std::vector<int> steps(5, 50);
  auto direct = model.predict_noise(Tensor::from_data({5, 2}, x), steps, cond);
  for (std::size_t i = 0; i < eps.size(); ++i) CHECK(eps[i] == direct.data()[i]);

  // Without a classifier the w2 term vanishes for any weight.
  auto cfg_only = guided_epsilon(model, x, 50, cond, {2.0, 0.0, true}, nullptr, s);
  auto with_w2 = guided_epsilon(model, x, 50, cond, {2.0, 7.5, true}, nullptr, s);
  CHECK(cfg_only == with_w2);
}

TEST_CASE("guided epsilon matches a hand evaluation with stubs") {
  const double a = 0.3, b = -0.2;
  ConstantStub model(2, a, b);
  std::vector<double> u{1.0, -0.5}, v{0.2, 0.7};
  LinearClassifier clf(u, v);
  auto s = build_schedule();
  const int t = 250;
  std::vector<double> x{0.4, -1.1};
  auto cond = plain_bundles(1);
  ClassifierTarget target{&clf, {0}};

  // log p(0|x) = lu - log(e^lu + e^lv); gradient = (1 - p0) * (u - v).
  const double lu = x[0] * u[0] + x[1] * u[1], lv = x[0] * v[0] + x[1] * v[1];
  const double p0 = std::exp(lu) / (std::exp(lu) + std::exp(lv));
  const double G[2] = {(1 - p0) * (u[0] - v[0]), (1 - p0) * (u[1] - v[1])};
  const double w1 = 2.0, w2 = 1.5, k = std::sqrt(1.0 - s.alpha_bar(t));
  const double cfg = (1 + w1) * a - w1 * b;

  auto raw = guided_epsilon(model, x, t, cond, {w1, w2, false}, &target, s);
  for (int i = 0; i < 2; ++i) CHECK(std::abs(raw[i] - (cfg - w2 * k * G[i])) < 1e-12);

  const double gnorm = std::sqrt(G[0] * G[0] + G[1] * G[1]);
  const double cnorm = std::sqrt(2.0) * std::abs(cfg);
  auto normed = guided_epsilon(model, x, t, cond, {w1, w2, true}, &target, s);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(normed[i] - (cfg - w2 * k * G[i] * cnorm / gnorm)) < 1e-12);
  }
}

TEST_CASE("guided epsilon is affine in each weight") {
  nn::Rng rng(8);
  MlpDenoiser model({2, 2, 16, 2, 8}, rng);
  for (auto& p : model.parameters()) {
    auto r = testing::random_values(p.size(), rng, 0.3);
    for (std::size_t i = 0; i < p.size(); ++i) p.mutable_data()[i] += r[i];
  }
  LinearClassifier clf({1.0, -0.5}, {0.2, 0.7});
  auto s = build_schedule();
  auto cond = testing::class_bundles(0, 4);
  ClassifierTarget target{&clf, std::vector<int>(4, 0)};
  auto x = testing::random_values(8, rng);
  auto collinear = [&](auto make) {
    auto f0 = make(0.0), f1 = make(1.0), f2 = make(2.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < f0.size(); ++i) {
      worst = std::max(worst, std::abs(f0[i] + f2[i] - 2.0 * f1[i]));
    }
    return worst;
  };
  for (bool norm : {false, true}) {
    CHECK(collinear([&](double w) {
            return guided_epsilon(model, x, 120, cond, {1.3, w, norm}, &target, s);
          }) < 1e-10);
  }
  // The normalized G scales with the CFG term, so w1-affinity holds with
  // normalization off (or with no classifier term).
  CHECK(collinear([&](double w) {
          return guided_epsilon(model, x, 120, cond, {w, 0.8, false}, &target, s);
        }) < 1e-10);
  CHECK(collinear([&](double w) {
          return guided_epsilon(model, x, 120, cond, {w, 0.0, true}, &target, s);
        }) < 1e-10);
}

TEST_CASE("a zero classifier gradient leaves the output independent of w2") {
  nn::Rng rng(9);
  MlpDenoiser model({2, 2, 16, 2, 8}, rng);
  LinearClassifier flat({0, 0}, {0, 0}, /*constant=*/true);
  auto s = build_schedule();
  auto cond = testing::class_bundles(1, 3);
  ClassifierTarget target{&flat, {1, 1, 1}};
  auto x = testing::random_values(6, rng);
  for (bool norm : {false, true}) {
    auto ref = guided_epsilon(model, x, 300, cond, {2.0, 0.0, norm}, &target, s);
    for (double w2 : {0.5, 1.5, 40.0}) {
      CHECK(guided_epsilon(model, x, 300, cond, {2.0, w2, norm}, &target, s) == ref);
    }
  }
}

TEST_CASE("combine_guidance normalizes per item") {
  std::vector<double> ec{1, 1, 2, 2}, eu{0, 0, 0, 0}, g{3, 4, 0, 0};
  auto out = combine_guidance(ec, eu, g, 0.0, 1.0, 1.0, true, 2);
  // item 0: |cfg| = sqrt(2), G rescaled to that norm; item 1: zero G skipped.
  CHECK(std::abs(out[0] - (1 - 3.0 / 5.0 * std::sqrt(2.0))) < 1e-15);
  CHECK(std::abs(out[1] - (1 - 4.0 / 5.0 * std::sqrt(2.0))) < 1e-15);
  CHECK(out[2] == 2.0);
  CHECK(out[3] == 2.0);
  CHECK_THROWS_AS(combine_guidance(ec, eu, g, 0.0, 1.0, 1.0, true, 3), DimensionError);
}

TEST_CASE("sampling is deterministic and reports non-finite states") {
  nn::Rng rng(10);
  MlpDenoiser model({2, 2, 16, 2, 8}, rng);
  for (auto& p : model.parameters()) {
    for (double& v : p.mutable_data()) v += 0.01;
  }
  auto s = build_schedule(60, 1e-3, 0.1);
  auto cond = testing::class_bundles(0, 7);
  auto a = ddpm_sample(model, cond, {}, nullptr, s, 42);
  auto b = ddpm_sample(model, cond, {}, nullptr, s, 42);
  auto c = ddpm_sample(model, cond, {}, nullptr, s, 43);
  CHECK(a == b);
  CHECK(a != c);
  // Chains are keyed by id, not by position in the batch.
  std::vector<std::uint64_t> ids{5, 6};
  auto pair = ddpm_sample(model, std::span(cond).first(2), {}, nullptr, s, 42, ids);
  auto one = ddpm_sample(model, std::span(cond).first(1), {}, nullptr, s, 42,
                         std::span<const std::uint64_t>(ids).subspan(1));
  CHECK(std::abs(pair[2] - one[0]) < 1e-9);
  CHECK(std::abs(pair[3] - one[1]) < 1e-9);

  ConstantStub bad(2, 0.0, 0.0);
  bad.poison = true;
  try {
    ddpm_sample(bad, cond, {}, nullptr, s, 1);
    FAIL("expected SamplingError");
  } catch (const SamplingError& e) {
    CHECK(std::string(e.what()).find("t = 60") != std::string::npos);
  }
}

TEST_CASE("unconditional model of a standard normal samples its moments") {
  auto s = build_schedule();
  nn::Rng rng(11);
  MlpDenoiser model({1, 0, 64, 2, 16}, rng);
  testing::ToyData data = [](nn::Rng& r, std::size_t n) {
    std::normal_distribution<double> z(0.0, 1.0);
    testing::ToyBatch out;
    for (std::size_t i = 0; i < n; ++i) out.first.push_back(z(r));
    out.second.assign(n, ConditioningBundle{});
    return out;
  };
  testing::train_toy_denoiser(model, data, s, 3000, 256, 0.0, 21);
  const std::size_t n = 2000;
  auto x = ddpm_sample(model, std::vector<ConditioningBundle>(n), {0.0, 0.0, true}, nullptr, s, 5);
  double mean = 0.0, sq = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  for (double v : x) sq += (v - mean) * (v - mean);
  const double var = sq / (n - 1);
  MESSAGE("sample mean " << mean << ", variance " << var);
  CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / (n - 1)));
}

TEST_CASE("classifier guidance pulls samples toward the target class") {
  auto s = build_schedule(100, 1e-4, 0.08);
  nn::Rng rng(13);
  MlpDenoiser model({2, 0, 64, 2, 16}, rng);
  FrameClassifier clf({2, 2, 32, 16}, rng);
  testing::ToyData data = [](nn::Rng& r, std::size_t n) {
    auto b = testing::gmm_batch(r, n);
    for (auto& c : b.second) c.s.clear();
    return b;
  };
  testing::train_toy_denoiser(model, data, s, 800, 128, 0.0, 31);
  testing::ToyData labelled = testing::gmm_batch;
  testing::train_toy_classifier(
      clf, labelled,
      [](const testing::ToyBatch& b) {
        std::vector<int> y;
        for (const auto& c : b.second) y.push_back(c.s[1] > 0.5 ? 1 : 0);
        return y;
      },
      s, 800, 128, 32);
  const std::size_t n = 1000;
  std::vector<ConditioningBundle> cond(n);
  ClassifierTarget target{&clf, std::vector<int>(n, 1)};
  auto plain = ddpm_sample(model, cond, {0.0, 0.0, false}, nullptr, s, 3);
  auto guided = ddpm_sample(model, cond, {0.0, 3.0, false}, &target, s, 3);
  const double f_plain = testing::fraction_nearer(plain, 1);
  const double f_guided = testing::fraction_nearer(guided, 1);
  MESSAGE("target fraction without / with classifier guidance: " << f_plain << " / " << f_guided);
  CHECK(f_guided > f_plain + 0.1);
}

TEST_CASE("a denoiser with an attached schedule adds the scaled input to its head") {
  auto s = build_schedule();
  nn::Rng init(9);
  DenoiserConfig cfg;
  cfg.n_mels = 3;
  cfg.speaker_dim = 2;
  cfg.content_dim = 2;
  cfg.model_dim = 8;
  cfg.ffn_dim = 8;
  DiffusionDenoiser plain(cfg, init), v(cfg, init);
  v.copy_state_from(plain);
  v.set_schedule(s);
  for (auto& st : plain.state()) {
    if (st.name == "output.weight") {
      for (double& w : st.tensor.mutable_data()) w = 0.05;
    }
  }
  for (auto& st : v.state()) {
    if (st.name == "output.weight") {
      for (double& w : st.tensor.mutable_data()) w = 0.05;
    }
  }
  const std::size_t F = 4;
  std::vector<ConditioningBundle> cond(2);
  for (auto& c : cond) {
    c.n_frames = F;
    c.s = testing::random_values(2, init);
    c.c = testing::random_values(F * 2, init);
    c.p = testing::random_values(F, init);
    c.e = testing::random_values(F, init);
  }
  const auto x = testing::random_values(2 * F * 3, init);
  const std::vector<int> steps = {1, 400};
  const auto xt = nn::Tensor::from_data({2 * F, 3}, x);
  const auto head = plain.predict_noise(xt, steps, cond);
  const auto out = v.predict_noise(xt, steps, cond);
  for (std::size_t r = 0; r < 2 * F; ++r) {
    const double ab = s.alpha_bar(steps[r / F]);
    for (std::size_t m = 0; m < 3; ++m) {
      const std::size_t k = r * 3 + m;
      CHECK(out.data()[k] ==
            doctest::Approx(std::sqrt(ab) * head.data()[k] + std::sqrt(1 - ab) * x[k]).epsilon(1e-12));
    }
  }
  const std::vector<int> bad = {1, 401};
  CHECK_THROWS_AS(v.predict_noise(xt, bad, cond), ParameterError);
}

TEST_CASE("an invariant direction removes that component from classifier scores and gradients") {
  nn::Rng rng(21);
  FrameClassifier clf({3, 2, 16, 8, 4}, rng);
  const std::vector<double> dir = {1.0, 2.0, -0.5};
  clf.set_invariant_direction(dir);
  const std::size_t F = 5;
  const std::vector<int> steps = {50, 300};
  auto x = testing::random_values(2 * F * 3, rng);
  auto shifted = x;
  for (std::size_t r = 0; r < 2 * F; ++r) {
    for (std::size_t m = 0; m < 3; ++m) shifted[r * 3 + m] += 0.7 * double(r + 1) * dir[m];
  }
  const auto a = clf.logits(Tensor::from_data({2 * F, 3}, x), steps, F);
  const auto b = clf.logits(Tensor::from_data({2 * F, 3}, shifted), steps, F);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data()[i] == doctest::Approx(b.data()[i]).epsilon(1e-12));

  auto xt = Tensor::from_data({2 * F, 3}, x, true);
  nn::sum(clf.logits(xt, steps, F)).backward();
  for (std::size_t r = 0; r < 2 * F; ++r) {
    double dot = 0.0;
    for (std::size_t m = 0; m < 3; ++m) dot += xt.grad()[r * 3 + m] * dir[m];
    CHECK(std::abs(dot) < 1e-12);
  }

  CHECK_THROWS_AS(clf.set_invariant_direction(std::vector<double>{1.0, 0.0}), DimensionError);
  CHECK_THROWS_AS(clf.set_invariant_direction(std::vector<double>(3, 0.0)), ParameterError);
}
