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

#include "prsd/nn/checkpoint.h"

#include "prsd/errors.h"

namespace prsd::nn {

std::vector<NamedArray> module_to_arrays(Module& m) {
  std::vector<NamedArray> out;
  for (auto& s : m.state()) {
    NamedArray a;
    a.name = s.name;
    for (auto d : s.tensor.shape()) a.shape.push_back(d);
    a.values.assign(s.tensor.data().begin(), s.tensor.data().end());
    out.push_back(std::move(a));
  }
  return out;
}

void load_module_arrays(Module& m, const ArrayBundle& arrays) {
  for (auto& s : m.state()) {
    const NamedArray& a = arrays.get(s.name);
    Shape shape(a.shape.begin(), a.shape.end());
    if (shape != s.tensor.shape()) {
      throw DimensionError("checkpoint tensor '" + s.name + "' has shape " +
                           shape_string(shape) + ", model expects " +
                           shape_string(s.tensor.shape()));
    }
    auto dst = s.tensor.mutable_data();
    std::copy(a.values.begin(), a.values.end(), dst.begin());
  }
}

void save_checkpoint(const std::filesystem::path& path, Module& m,
                     std::vector<NamedArray> extra) {
  auto arrays = module_to_arrays(m);
  for (auto& e : extra) arrays.push_back(std::move(e));
  write_container(path, arrays);
}

ArrayBundle load_checkpoint(const std::filesystem::path& path, Module& m) {
  ArrayBundle bundle(read_container(path));
  load_module_arrays(m, bundle);
  return bundle;
}

}  // namespace prsd::nn
