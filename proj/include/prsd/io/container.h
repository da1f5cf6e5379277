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

// PRSD array container.
//
// Layout (all integers little-endian):
//
//   bytes 0..3   magic "PRSD"
//   u32          format version (kContainerVersion)
//   u32          entry count
//   per entry:
//     u32        name length, followed by that many UTF-8 bytes
//     u32        rank, followed by rank u64 dimensions
//     f64[]      product(dims) values, little-endian IEEE-754
//
// Used for checkpoints, feature files and generated samples.

#ifndef PRSD_IO_CONTAINER_H_
#define PRSD_IO_CONTAINER_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace prsd {

inline constexpr std::uint32_t kContainerVersion = 1;

struct NamedArray {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<double> values;
};

void write_container(const std::filesystem::path& path,
                     const std::vector<NamedArray>& arrays);
std::vector<NamedArray> read_container(const std::filesystem::path& path);

// Serialized bytes; write_container writes exactly this.
std::string encode_container(const std::vector<NamedArray>& arrays);
std::vector<NamedArray> decode_container(const std::string& bytes);

// Name-indexed view with typed accessors that throw FormatError on absence.
class ArrayBundle {
 public:
  ArrayBundle() = default;
  explicit ArrayBundle(std::vector<NamedArray> arrays);

  bool contains(const std::string& name) const;
  const NamedArray& get(const std::string& name) const;
  const std::vector<double>& values(const std::string& name) const;
  double scalar(const std::string& name) const;
  void put(NamedArray a);
  std::vector<NamedArray> arrays() const;

 private:
  std::map<std::string, NamedArray> by_name_;
  std::vector<std::string> order_;
};

}  // namespace prsd

#endif  // PRSD_IO_CONTAINER_H_
