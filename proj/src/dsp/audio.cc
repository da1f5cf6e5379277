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

#include "prsd/dsp/audio.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "prsd/errors.h"

namespace prsd::dsp {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T load(const std::string& bytes, std::size_t pos) {
  T v;
  std::memcpy(&v, bytes.data() + pos, sizeof(T));
  return v;
}

template <typename T>
void store(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IngestionError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(f)),
                          std::istreambuf_iterator<char>());
  const std::string where = path.string() + ": ";
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 ||
      bytes.compare(8, 4, "WAVE") != 0) {
    throw IngestionError(where + "not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t data_pos = 0, data_len = 0;
  bool have_data = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const std::size_t len = load<std::uint32_t>(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (len < 16 || body + len > bytes.size()) {
        throw IngestionError(where + "truncated fmt chunk");
      }
      format = load<std::uint16_t>(bytes, body);
      channels = load<std::uint16_t>(bytes, body + 2);
      rate = load<std::uint32_t>(bytes, body + 4);
      bits = load<std::uint16_t>(bytes, body + 14);
      if (format == kFormatExtensible && len >= 26) {
        // The first two bytes of the sub-format GUID carry the real tag.
        format = load<std::uint16_t>(bytes, body + 24);
      }
      have_fmt = true;
    } else if (id == "data") {
      data_pos = body;
      data_len = std::min(len, bytes.size() - body);
      have_data = true;
    }
    pos = body + len + (len & 1);
  }
  if (!have_fmt) throw IngestionError(where + "missing fmt chunk");
  if (!have_data) throw IngestionError(where + "missing data chunk");
  if (channels != 1) {
    throw IngestionError(where + "channel count is " + std::to_string(channels) +
                         ", expected mono");
  }
  if (rate != static_cast<std::uint32_t>(kSampleRate)) {
    throw IngestionError(where + "sample rate is " + std::to_string(rate) +
                         " Hz, expected 16000");
  }

  Waveform w;
  w.clip_id = path.stem().string();
  if (format == kFormatPcm && bits == 16) {
    w.samples.resize(data_len / 2);
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
      w.samples[i] = load<std::int16_t>(bytes, data_pos + 2 * i) / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    w.samples.resize(data_len / 4);
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
      w.samples[i] = load<float>(bytes, data_pos + 4 * i);
    }
  } else {
    throw IngestionError(where + "encoding (format tag " + std::to_string(format) +
                         ", " + std::to_string(bits) +
                         " bits) unsupported, expected 16-bit PCM or 32-bit float");
  }
  return w;
}

void write_wav(const std::filesystem::path& path, const Waveform& wave,
               WavEncoding encoding) {
  const bool pcm = encoding == WavEncoding::kPcm16;
  const std::uint16_t bytes_per_sample = pcm ? 2 : 4;
  const auto data_len = static_cast<std::uint32_t>(wave.samples.size() * bytes_per_sample);

  std::string out = "RIFF";
  store<std::uint32_t>(out, 36 + data_len);
  out += "WAVEfmt ";
  store<std::uint32_t>(out, 16);
  store<std::uint16_t>(out, pcm ? kFormatPcm : kFormatFloat);
  store<std::uint16_t>(out, 1);
  store<std::uint32_t>(out, static_cast<std::uint32_t>(wave.sample_rate));
  store<std::uint32_t>(out, static_cast<std::uint32_t>(wave.sample_rate) * bytes_per_sample);
  store<std::uint16_t>(out, bytes_per_sample);
  store<std::uint16_t>(out, static_cast<std::uint16_t>(8 * bytes_per_sample));
  out += "data";
  store<std::uint32_t>(out, data_len);
  for (double x : wave.samples) {
    if (pcm) {
      const double q = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
      store<std::int16_t>(out, static_cast<std::int16_t>(q));
    } else {
      store<float>(out, static_cast<float>(x));
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IngestionError("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IngestionError("write failed for " + path.string());
}

double max_abs(const std::vector<double>& samples) {
  double m = 0.0;
  for (double x : samples) m = std::max(m, std::abs(x));
  return m;
}

std::vector<Waveform> speaker_normalize(std::vector<Waveform> clips) {
  std::map<std::string, double> peak;
  for (const auto& c : clips) {
    double& p = peak[c.speaker_id];
    p = std::max(p, max_abs(c.samples));
  }
  for (const auto& [speaker, p] : peak) {
    if (!(p > 0.0)) {
      throw NormalizationError("speaker '" + speaker +
                               "' has no nonzero samples; cannot normalize");
    }
  }
  for (auto& c : clips) {
    const double p = peak[c.speaker_id];
    for (double& x : c.samples) x /= p;
  }
  return clips;
}

}  // namespace prsd::dsp
