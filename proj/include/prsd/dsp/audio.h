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

#ifndef PRSD_DSP_AUDIO_H_
#define PRSD_DSP_AUDIO_H_

#include <filesystem>
#include <string>
#include <vector>

namespace prsd::dsp {

inline constexpr int kSampleRate = 16000;

struct Waveform {
  std::vector<double> samples;  // nominally in [-1, 1]
  int sample_rate = kSampleRate;
  std::string speaker_id;
  std::string clip_id;

  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

enum class WavEncoding { kPcm16, kFloat32 };

// Accepts RIFF/WAVE mono 16 kHz, either 16-bit PCM or 32-bit IEEE float
// (plain or WAVE_FORMAT_EXTENSIBLE). PCM16 is scaled by 1/32768. The clip id
// is the file stem; speaker_id is left empty.
Waveform read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const Waveform& wave,
               WavEncoding encoding = WavEncoding::kPcm16);

double max_abs(const std::vector<double>& samples);

// Divides every clip by the maximum absolute sample over all clips that share
// its speaker_id. Clip order is preserved.
std::vector<Waveform> speaker_normalize(std::vector<Waveform> clips);

}  // namespace prsd::dsp

#endif  // PRSD_DSP_AUDIO_H_
