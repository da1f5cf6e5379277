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

// Central finite-difference gradient oracle shared by the unit and
// acceptance suites.

#ifndef PRSD_TESTS_GRAD_CHECK_H_
#define PRSD_TESTS_GRAD_CHECK_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "prsd/nn/tensor.h"

namespace prsd::testing {

inline std::vector<double> random_values(std::size_t n, std::mt19937_64& rng,
                                         double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Relative error with a small absolute floor so that pairs of near-zero
// gradients do not blow up the ratio.
inline double relative_error(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-6});
  return std::abs(a - b) / denom;
}

// `loss` rebuilds the graph from the current tensor values and returns a
// scalar. Returns the max relative error between the analytic gradient and
// central differences over every element of every tensor in `wrt`.
inline double max_grad_error(const std::function<nn::Tensor()>& loss,
                             std::vector<nn::Tensor> wrt, double eps = 1e-5) {
  for (auto& t : wrt) t.zero_grad();
  loss().backward();
  std::vector<std::vector<double>> analytic;
  for (auto& t : wrt) analytic.emplace_back(t.grad().begin(), t.grad().end());

  double worst = 0.0;
  for (std::size_t k = 0; k < wrt.size(); ++k) {
    auto data = wrt[k].mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      data[i] = orig + eps;
      const double up = loss().item();
      data[i] = orig - eps;
      const double down = loss().item();
      data[i] = orig;
      const double numeric = (up - down) / (2.0 * eps);
      worst = std::max(worst, relative_error(analytic[k][i], numeric));
    }
  }
  return worst;
}

// sum(out * weights) with fixed random weights: a scalar whose gradient
// exercises every output element.
inline nn::Tensor weighted_sum(const nn::Tensor& out, const std::vector<double>& w) {
  return nn::sum(nn::mul(out, nn::Tensor::from_data(out.shape(), w)));
}

}  // namespace prsd::testing

#endif  // PRSD_TESTS_GRAD_CHECK_H_
