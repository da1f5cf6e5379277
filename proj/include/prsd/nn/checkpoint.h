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

#ifndef PRSD_NN_CHECKPOINT_H_
#define PRSD_NN_CHECKPOINT_H_

#include <filesystem>
#include <vector>

#include "prsd/io/container.h"
#include "prsd/nn/layers.h"

namespace prsd::nn {

std::vector<NamedArray> module_to_arrays(Module& m);
// Every module tensor must be present with a matching shape.
void load_module_arrays(Module& m, const ArrayBundle& arrays);

void save_checkpoint(const std::filesystem::path& path, Module& m,
                     std::vector<NamedArray> extra = {});
// Returns the full bundle so callers can read extra (non-module) arrays.
ArrayBundle load_checkpoint(const std::filesystem::path& path, Module& m);

}  // namespace prsd::nn

#endif  // PRSD_NN_CHECKPOINT_H_
