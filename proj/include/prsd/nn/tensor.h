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

#ifndef PRSD_NN_TENSOR_H_
#define PRSD_NN_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace prsd::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

// One vertex of the dynamically recorded computation graph. A node only keeps
// its parents (and a backward closure) when at least one parent requires a
// gradient, so inference over frozen parameters records nothing.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<double>& ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

// Dense row-major float64 array with reverse-mode gradient tracking.
//
// Tensor is a handle: copies share the same storage and graph node. Rank is
// at most 2 for every op in this library; a rank-0 tensor is a scalar.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  // Rank-2 view: rank 0 is 1x1, rank 1 is 1xN.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool has_grad() const;
  // Gradient buffer; all zeros when nothing has been accumulated.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  // Reverse-mode sweep from this scalar. Gradients accumulate into every
  // reachable tensor with requires_grad set.
  void backward() const;

  // New leaf holding a copy of the values, outside any graph.
  Tensor detach() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  static Tensor wrap(std::shared_ptr<detail::Node> node);

 private:
  std::shared_ptr<detail::Node> node_;
};

// ---- ops -----------------------------------------------------------------
// Shape mismatches raise DimensionError naming both shapes.

Tensor matmul(const Tensor& a, const Tensor& b);             // [m,k]x[k,n]
Tensor add(const Tensor& a, const Tensor& b);                // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);                // elementwise
Tensor scale(const Tensor& a, double factor);
Tensor add_row(const Tensor& a, const Tensor& row);          // [m,n] + [1,n]
// Adds segment i of `rows` ([B,n]) to the `seg_len` rows of segment i of a.
Tensor add_segment_rows(const Tensor& a, const Tensor& rows, std::size_t seg_len);
// out[i] = mask[i] ? fill : a[i]; fill is [1,n].
Tensor replace_rows(const Tensor& a, const Tensor& fill,
                    std::span<const std::uint8_t> mask);
Tensor silu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);
// Multi-head scaled dot-product attention applied independently to each
// contiguous block of seq_len rows. q, k, v are [B*seq_len, d].
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v,
                 std::size_t heads, std::size_t seq_len);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor mse_loss(const Tensor& prediction, const Tensor& target);
// [B*seq_len, n] -> [B, n], mean over each block of rows.
Tensor segment_mean(const Tensor& a, std::size_t seq_len);
Tensor log_softmax(const Tensor& logits);                    // row-wise
// [B,K] -> [B,1], out[i] = a[i, index[i]].
Tensor gather_cols(const Tensor& a, std::span<const int> index);

// Row-wise softmax of a plain buffer; exposed for tests of attention rows.
void softmax_rows(std::span<double> values, std::size_t rows, std::size_t cols);

bool all_finite(std::span<const double> values);

}  // namespace prsd::nn

#endif  // PRSD_NN_TENSOR_H_
