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

#include "prsd/io/container.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "prsd/errors.h"

namespace prsd {

namespace {

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

template <typename T>
void put_raw(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    if (pos_ + sizeof(T) > bytes_.size()) {
      throw FormatError(std::string("PRSD container truncated while reading ") + what);
    }
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string get_string(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw FormatError("PRSD container truncated in name");
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_container(const std::vector<NamedArray>& arrays) {
  std::string out = "PRSD";
  put_raw<std::uint32_t>(out, kContainerVersion);
  put_raw<std::uint32_t>(out, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    std::uint64_t n = 1;
    for (auto d : a.shape) n *= d;
    if (n != a.values.size()) {
      throw FormatError("array '" + a.name + "' shape does not match value count");
    }
    put_raw<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out += a.name;
    put_raw<std::uint32_t>(out, static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) put_raw<std::uint64_t>(out, d);
    for (double v : a.values) put_raw<double>(out, v);
  }
  return out;
}

std::vector<NamedArray> decode_container(const std::string& bytes) {
  if (bytes.size() < 12 || bytes.compare(0, 4, "PRSD") != 0) {
    throw FormatError("not a PRSD container (bad magic)");
  }
  Reader r(bytes);
  r.get_string(4);
  const auto version = r.get<std::uint32_t>("version");
  if (version != kContainerVersion) {
    throw FormatError("unsupported PRSD container version " + std::to_string(version));
  }
  const auto count = r.get<std::uint32_t>("entry count");
  std::vector<NamedArray> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = r.get_string(r.get<std::uint32_t>("name length"));
    const auto rank = r.get<std::uint32_t>("rank");
    std::uint64_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      a.shape.push_back(r.get<std::uint64_t>("dimension"));
      n *= a.shape.back();
    }
    if (n > bytes.size()) throw FormatError("array '" + a.name + "' larger than file");
    a.values.resize(n);
    for (auto& v : a.values) v = r.get<double>("values");
    out.push_back(std::move(a));
  }
  if (!r.done()) throw FormatError("trailing bytes after PRSD container entries");
  return out;
}

void write_container(const std::filesystem::path& path,
                     const std::vector<NamedArray>& arrays) {
  const std::string bytes = encode_container(arrays);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw FormatError("write failed for " + path.string());
}

std::vector<NamedArray> read_container(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  try {
    return decode_container(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

ArrayBundle::ArrayBundle(std::vector<NamedArray> arrays) {
  for (auto& a : arrays) put(std::move(a));
}

bool ArrayBundle::contains(const std::string& name) const {
  return by_name_.count(name) > 0;
}

const NamedArray& ArrayBundle::get(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw FormatError("missing array '" + name + "'");
  return it->second;
}

const std::vector<double>& ArrayBundle::values(const std::string& name) const {
  return get(name).values;
}

double ArrayBundle::scalar(const std::string& name) const {
  const auto& v = values(name);
  if (v.size() != 1) throw FormatError("array '" + name + "' is not a scalar");
  return v[0];
}

void ArrayBundle::put(NamedArray a) {
  if (!by_name_.count(a.name)) order_.push_back(a.name);
  std::string key = a.name;
  by_name_[key] = std::move(a);
}

std::vector<NamedArray> ArrayBundle::arrays() const {
  std::vector<NamedArray> out;
  for (const auto& n : order_) out.push_back(by_name_.at(n));
  return out;
}

}  // namespace prsd
