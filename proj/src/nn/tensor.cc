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

#include "prsd/nn/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include <Eigen/Dense>

#include "prsd/errors.h"

namespace prsd::nn {

namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using StridedMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;

std::size_t rows_of(const Shape& s) {
  if (s.size() <= 1) return 1;
  return s[0];
}

std::size_t cols_of(const Shape& s) {
  if (s.empty()) return 1;
  if (s.size() == 1) return s[0];
  return s[1];
}

ConstMapMat view(const Node& n) {
  return ConstMapMat(n.value.data(), rows_of(n.shape), cols_of(n.shape));
}

[[noreturn]] void shape_fail(const char* op, const Shape& a, const Shape& b) {
  std::ostringstream os;
  os << op << ": incompatible shapes " << shape_string(a) << " and "
     << shape_string(b);
  throw DimensionError(os.str());
}

// Builds a result node. When no parent needs a gradient the parents and the
// closure are dropped.
Tensor make_result(Shape shape, std::vector<double> value,
                   std::vector<NodePtr> parents,
                   std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool needs = false;
  for (const auto& p : parents) needs = needs || p->requires_grad;
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Tensor::wrap(std::move(node));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail(op, a.shape(), b.shape());
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// ---- Tensor ----------------------------------------------------------------

Tensor Tensor::wrap(std::shared_ptr<detail::Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::vector<double> data(shape_size(shape), value);
  return from_data(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape.size() > 2) {
    throw DimensionError("tensor rank " + std::to_string(shape.size()) +
                         " unsupported (max 2)");
  }
  if (shape_size(shape) != data.size()) {
    throw DimensionError("shape " + shape_string(shape) + " needs " +
                         std::to_string(shape_size(shape)) + " values, got " +
                         std::to_string(data.size()));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  return wrap(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::size() const { return node_->value.size(); }
std::size_t Tensor::rows() const { return rows_of(node_->shape); }
std::size_t Tensor::cols() const { return cols_of(node_->shape); }
std::span<const double> Tensor::data() const { return node_->value; }
std::span<double> Tensor::mutable_data() { return node_->value; }

double Tensor::item() const {
  if (size() != 1) {
    throw ContractError("item() on tensor of shape " + shape_string(shape()));
  }
  return node_->value[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return node_->value[r * cols() + c];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }
void Tensor::set_requires_grad(bool flag) { node_->requires_grad = flag; }
bool Tensor::has_grad() const { return node_->grad.size() == node_->value.size(); }

std::span<const double> Tensor::grad() const { return node_->ensure_grad(); }
std::span<double> Tensor::mutable_grad() { return node_->ensure_grad(); }

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
  return from_data(shape(), node_->value, false);
}

void Tensor::backward() const {
  if (size() != 1) {
    throw ContractError("backward() requires a scalar loss, got shape " +
                        shape_string(shape()));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order without recursion.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, idx] = stack.back();
    if (idx < n->parents.size()) {
      Node* p = n->parents[idx++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

bool all_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// ---- ops -------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
    shape_fail("matmul", a.shape(), b.shape());
  }
  const std::size_t m = a.rows(), n = b.cols();
  std::vector<double> out(m * n);
  MapMat(out.data(), m, n).noalias() = view(*a.node()) * view(*b.node());
  NodePtr pa = a.node(), pb = b.node();
  return make_result({m, n}, std::move(out), {pa, pb}, [pa, pb](Node& self) {
    ConstMapMat g(self.grad.data(), rows_of(self.shape), cols_of(self.shape));
    if (pa->requires_grad) {
      MapMat ga(pa->ensure_grad().data(), rows_of(pa->shape), cols_of(pa->shape));
      ga.noalias() += g * view(*pb).transpose();
    }
    if (pb->requires_grad) {
      MapMat gb(pb->ensure_grad().data(), rows_of(pb->shape), cols_of(pb->shape));
      gb.noalias() += view(*pa).transpose() * g;
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  std::vector<double> out(a.size());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  NodePtr pa = a.node(), pb = b.node();
  return make_result(a.shape(), std::move(out), {pa, pb}, [pa, pb](Node& self) {
    for (Node* p : {pa.get(), pb.get()}) {
      if (!p->requires_grad) continue;
      auto& g = p->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  std::vector<double> out(a.size());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  NodePtr pa = a.node(), pb = b.node();
  return make_result(a.shape(), std::move(out), {pa, pb}, [pa, pb](Node& self) {
    if (pa->requires_grad) {
      auto& g = pa->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      auto& g = pb->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  std::vector<double> out(a.size());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  NodePtr pa = a.node(), pb = b.node();
  return make_result(a.shape(), std::move(out), {pa, pb}, [pa, pb](Node& self) {
    if (pa->requires_grad) {
      auto& g = pa->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb->value[i];
    }
    if (pb->requires_grad) {
      auto& g = pb->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa->value[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v *= factor;
  NodePtr pa = a.node();
  return make_result(a.shape(), std::move(out), {pa}, [pa, factor](Node& self) {
    auto& g = pa->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  const std::size_t m = a.rows(), n = a.cols();
  if (row.size() != n || row.rows() != 1) shape_fail("add_row", a.shape(), row.shape());
  std::vector<double> out(a.data().begin(), a.data().end());
  auto r = row.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += r[j];
  NodePtr pa = a.node(), pr = row.node();
  return make_result(a.shape(), std::move(out), {pa, pr}, [pa, pr, m, n](Node& self) {
    if (pa->requires_grad) {
      auto& g = pa->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pr->requires_grad) {
      auto& g = pr->ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
    }
  });
}

Tensor add_segment_rows(const Tensor& a, const Tensor& rows, std::size_t seg_len) {
  const std::size_t m = a.rows(), n = a.cols();
  if (seg_len == 0 || rows.cols() != n || rows.rows() * seg_len != m) {
    shape_fail("add_segment_rows", a.shape(), rows.shape());
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  auto r = rows.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* src = r.data() + (i / seg_len) * n;
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += src[j];
  }
  NodePtr pa = a.node(), pr = rows.node();
  return make_result(a.shape(), std::move(out), {pa, pr},
                     [pa, pr, m, n, seg_len](Node& self) {
    if (pa->requires_grad) {
      auto& g = pa->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pr->requires_grad) {
      auto& g = pr->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        double* dst = g.data() + (i / seg_len) * n;
        for (std::size_t j = 0; j < n; ++j) dst[j] += self.grad[i * n + j];
      }
    }
  });
}

Tensor replace_rows(const Tensor& a, const Tensor& fill,
                    std::span<const std::uint8_t> mask) {
  const std::size_t m = a.rows(), n = a.cols();
  if (fill.size() != n || mask.size() != m) {
    shape_fail("replace_rows", a.shape(), fill.shape());
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  auto f = fill.data();
  for (std::size_t i = 0; i < m; ++i) {
    if (mask[i]) std::copy(f.begin(), f.end(), out.begin() + i * n);
  }
  NodePtr pa = a.node(), pf = fill.node();
  std::vector<std::uint8_t> keep(mask.begin(), mask.end());
  return make_result(a.shape(), std::move(out), {pa, pf},
                     [pa, pf, m, n, keep = std::move(keep)](Node& self) {
    if (pa->requires_grad) {
      auto& g = pa->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        if (keep[i]) continue;
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[i * n + j];
      }
    }
    if (pf->requires_grad) {
      auto& g = pf->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        if (!keep[i]) continue;
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
      }
    }
  });
}

Tensor silu(const Tensor& a) {
  std::vector<double> out(a.size());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] / (1.0 + std::exp(-x[i]));
  NodePtr pa = a.node();
  return make_result(a.shape(), std::move(out), {pa}, [pa](Node& self) {
    auto& g = pa->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = pa->value[i];
      const double s = 1.0 / (1.0 + std::exp(-x));
      g[i] += self.grad[i] * s * (1.0 + x * (1.0 - s));
    }
  });
}

Tensor tanh(const Tensor& a) {
  std::vector<double> out(a.size());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x[i]);
  NodePtr pa = a.node();
  return make_result(a.shape(), std::move(out), {pa}, [pa](Node& self) {
    auto& g = pa->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = self.value[i];
      g[i] += self.grad[i] * (1.0 - y * y);
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const std::size_t m = x.rows(), n = x.cols();
  if (gamma.size() != n || beta.size() != n) {
    shape_fail("layer_norm", x.shape(), gamma.shape());
  }
  std::vector<double> out(m * n), xhat(m * n), inv_std(m);
  auto xv = x.data(), gv = gamma.data(), bv = beta.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    for (std::size_t j = 0; j < n; ++j) {
      const double h = (row[j] - mu) * is;
      xhat[i * n + j] = h;
      out[i * n + j] = h * gv[j] + bv[j];
    }
  }
  NodePtr px = x.node(), pg = gamma.node(), pb = beta.node();
  return make_result(x.shape(), std::move(out), {px, pg, pb},
                     [px, pg, pb, m, n, xhat = std::move(xhat),
                      inv_std = std::move(inv_std)](Node& self) {
    const auto& g = self.grad;
    if (pg->requires_grad) {
      auto& gg = pg->ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gg[j] += g[i * n + j] * xhat[i * n + j];
    }
    if (pb->requires_grad) {
      auto& gb = pb->ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
    }
    if (px->requires_grad) {
      auto& gx = px->ensure_grad();
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < m; ++i) {
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double dh = g[i * n + j] * pg->value[j];
          s1 += dh;
          s2 += dh * xhat[i * n + j];
        }
        for (std::size_t j = 0; j < n; ++j) {
          const double dh = g[i * n + j] * pg->value[j];
          gx[i * n + j] += inv_std[i] * (dh - inv_n * s1 - xhat[i * n + j] * inv_n * s2);
        }
      }
    }
  });
}

void softmax_rows(std::span<double> values, std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    double* r = values.data() + i * cols;
    double mx = r[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, r[j]);
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      r[j] = std::exp(r[j] - mx);
      total += r[j];
    }
    const double inv = 1.0 / total;
    for (std::size_t j = 0; j < cols; ++j) r[j] *= inv;
  }
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v,
                 std::size_t heads, std::size_t seq_len) {
  require_same_shape("attention(q,k)", q, k);
  require_same_shape("attention(q,v)", q, v);
  const std::size_t n_rows = q.rows(), d = q.cols();
  if (heads == 0 || d % heads != 0) {
    throw DimensionError("attention: model dim " + std::to_string(d) +
                         " not divisible by head count " + std::to_string(heads));
  }
  if (seq_len == 0 || n_rows % seq_len != 0) {
    throw DimensionError("attention: " + std::to_string(n_rows) +
                         " rows is not a multiple of sequence length " +
                         std::to_string(seq_len));
  }
  const std::size_t dh = d / heads, n_seq = n_rows / seq_len, F = seq_len;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool keep = q.requires_grad() || k.requires_grad() || v.requires_grad();

  std::vector<double> out(n_rows * d);
  std::vector<double> probs(keep ? n_seq * heads * F * F : 0);
  std::vector<double> scratch(F * F);
  auto qv = q.data(), kv = k.data(), vv = v.data();
  for (std::size_t b = 0; b < n_seq; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = b * F * d + h * dh;
      ConstStridedMap Q(qv.data() + off, F, dh, Eigen::OuterStride<>(d));
      ConstStridedMap K(kv.data() + off, F, dh, Eigen::OuterStride<>(d));
      ConstStridedMap V(vv.data() + off, F, dh, Eigen::OuterStride<>(d));
      double* p = keep ? probs.data() + (b * heads + h) * F * F : scratch.data();
      MapMat P(p, F, F);
      P.noalias() = (Q * K.transpose()) * inv_sqrt;
      softmax_rows(std::span<double>(p, F * F), F, F);
      StridedMap O(out.data() + off, F, dh, Eigen::OuterStride<>(d));
      O.noalias() = P * V;
    }
  }

  NodePtr pq = q.node(), pk = k.node(), pv = v.node();
  return make_result(q.shape(), std::move(out), {pq, pk, pv},
                     [pq, pk, pv, heads, F, d, dh, n_seq, inv_sqrt,
                      probs = std::move(probs)](Node& self) {
    RowMat dP(F, F), dS(F, F);
    for (std::size_t b = 0; b < n_seq; ++b) {
      for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t off = b * F * d + h * dh;
        ConstMapMat P(probs.data() + (b * heads + h) * F * F, F, F);
        ConstStridedMap G(self.grad.data() + off, F, dh, Eigen::OuterStride<>(d));
        ConstStridedMap Q(pq->value.data() + off, F, dh, Eigen::OuterStride<>(d));
        ConstStridedMap K(pk->value.data() + off, F, dh, Eigen::OuterStride<>(d));
        ConstStridedMap V(pv->value.data() + off, F, dh, Eigen::OuterStride<>(d));
        if (pv->requires_grad) {
          StridedMap GV(pv->ensure_grad().data() + off, F, dh, Eigen::OuterStride<>(d));
          GV.noalias() += P.transpose() * G;
        }
        if (!pq->requires_grad && !pk->requires_grad) continue;
        dP.noalias() = G * V.transpose();
        for (std::size_t i = 0; i < F; ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < F; ++j) dot += dP(i, j) * P(i, j);
          for (std::size_t j = 0; j < F; ++j) dS(i, j) = P(i, j) * (dP(i, j) - dot) * inv_sqrt;
        }
        if (pq->requires_grad) {
          StridedMap GQ(pq->ensure_grad().data() + off, F, dh, Eigen::OuterStride<>(d));
          GQ.noalias() += dS * K;
        }
        if (pk->requires_grad) {
          StridedMap GK(pk->ensure_grad().data() + off, F, dh, Eigen::OuterStride<>(d));
          GK.noalias() += dS.transpose() * Q;
        }
      }
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t m = parts[0].rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rows() != m) shape_fail("concat_cols", parts[0].shape(), p.shape());
    total += p.cols();
  }
  std::vector<double> out(m * total);
  std::vector<NodePtr> nodes;
  std::vector<std::size_t> widths;
  std::size_t c0 = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.cols();
    auto src = p.data();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(src.data() + i * w, w, out.data() + i * total + c0);
    c0 += w;
    nodes.push_back(p.node());
    widths.push_back(w);
  }
  auto captured = nodes;
  return make_result({m, total}, std::move(out), std::move(nodes),
                     [captured, widths, m, total](Node& self) {
    std::size_t col = 0;
    for (std::size_t k = 0; k < captured.size(); ++k) {
      const std::size_t w = widths[k];
      if (captured[k]->requires_grad) {
        auto& g = captured[k]->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < w; ++j) g[i * w + j] += self.grad[i * total + col + j];
      }
      col += w;
    }
  });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count) {
  const std::size_t m = a.rows(), n = a.cols();
  if (begin + count > n) {
    throw DimensionError("slice_cols: columns [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of range for shape " +
                         shape_string(a.shape()));
  }
  std::vector<double> out(m * count);
  auto src = a.data();
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(src.data() + i * n + begin, count, out.data() + i * count);
  NodePtr pa = a.node();
  return make_result({m, count}, std::move(out), {pa}, [pa, m, n, begin, count](Node& self) {
    auto& g = pa->ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < count; ++j) g[i * n + begin + j] += self.grad[i * count + j];
  });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  NodePtr pa = a.node();
  return make_result({}, {total}, {pa}, [pa](Node& self) {
    auto& g = pa->ensure_grad();
    for (double& x : g) x += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor mse_loss(const Tensor& prediction, const Tensor& target) {
  require_same_shape("mse_loss", prediction, target);
  const std::size_t n = prediction.size();
  auto p = prediction.data(), t = target.data();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += (p[i] - t[i]) * (p[i] - t[i]);
  NodePtr pp = prediction.node(), pt = target.node();
  return make_result({}, {total / static_cast<double>(n)}, {pp, pt}, [pp, pt, n](Node& self) {
    const double c = 2.0 * self.grad[0] / static_cast<double>(n);
    if (pp->requires_grad) {
      auto& g = pp->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) g[i] += c * (pp->value[i] - pt->value[i]);
    }
    if (pt->requires_grad) {
      auto& g = pt->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) g[i] -= c * (pp->value[i] - pt->value[i]);
    }
  });
}

Tensor segment_mean(const Tensor& a, std::size_t seq_len) {
  const std::size_t m = a.rows(), n = a.cols();
  if (seq_len == 0 || m % seq_len != 0) {
    throw DimensionError("segment_mean: " + std::to_string(m) +
                         " rows is not a multiple of " + std::to_string(seq_len));
  }
  const std::size_t b = m / seq_len;
  const double inv = 1.0 / static_cast<double>(seq_len);
  std::vector<double> out(b * n, 0.0);
  auto src = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[(i / seq_len) * n + j] += src[i * n + j];
  for (double& v : out) v *= inv;
  NodePtr pa = a.node();
  return make_result({b, n}, std::move(out), {pa}, [pa, m, n, seq_len, inv](Node& self) {
    auto& g = pa->ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += inv * self.grad[(i / seq_len) * n + j];
  });
}

Tensor log_softmax(const Tensor& logits) {
  const std::size_t m = logits.rows(), n = logits.cols();
  std::vector<double> out(logits.data().begin(), logits.data().end());
  for (std::size_t i = 0; i < m; ++i) {
    double* r = out.data() + i * n;
    double mx = r[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, r[j]);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += std::exp(r[j] - mx);
    const double lse = mx + std::log(total);
    for (std::size_t j = 0; j < n; ++j) r[j] -= lse;
  }
  NodePtr pa = logits.node();
  return make_result(logits.shape(), std::move(out), {pa}, [pa, m, n](Node& self) {
    auto& g = pa->ensure_grad();
    for (std::size_t i = 0; i < m; ++i) {
      double gs = 0.0;
      for (std::size_t j = 0; j < n; ++j) gs += self.grad[i * n + j];
      for (std::size_t j = 0; j < n; ++j) {
        g[i * n + j] += self.grad[i * n + j] - std::exp(self.value[i * n + j]) * gs;
      }
    }
  });
}

Tensor gather_cols(const Tensor& a, std::span<const int> index) {
  const std::size_t m = a.rows(), n = a.cols();
  if (index.size() != m) {
    throw DimensionError("gather_cols: " + std::to_string(index.size()) +
                         " indices for shape " + shape_string(a.shape()));
  }
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (index[i] < 0 || static_cast<std::size_t>(index[i]) >= n) {
      throw DimensionError("gather_cols: index " + std::to_string(index[i]) +
                           " out of range for " + std::to_string(n) + " columns");
    }
    out[i] = a.data()[i * n + index[i]];
  }
  NodePtr pa = a.node();
  std::vector<int> idx(index.begin(), index.end());
  return make_result({m, 1}, std::move(out), {pa}, [pa, n, idx = std::move(idx)](Node& self) {
    auto& g = pa->ensure_grad();
    for (std::size_t i = 0; i < idx.size(); ++i) g[i * n + idx[i]] += self.grad[i];
  });
}

}  // namespace prsd::nn
