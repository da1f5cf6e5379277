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

#ifndef PRSD_DSP_MEL_H_
#define PRSD_DSP_MEL_H_

#include <cstddef>
#include <string>
#include <vector>

#include "prsd/dsp/audio.h"
#include "prsd/io/container.h"

namespace prsd::dsp {

struct MelConfig {
  std::size_t n_fft = 1024;
  std::size_t hop_length = 256;
  std::size_t n_mels = 80;
  double fmin = 0.0;
  double fmax = 8000.0;
  int sample_rate = kSampleRate;
  double log_floor = 1e-5;
};

// HTK mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

struct MelFilterbank {
  std::size_t n_mels = 0;
  std::size_t n_bins = 0;          // n_fft / 2 + 1
  std::vector<double> weights;     // [n_mels x n_bins], row-major
  std::vector<double> center_hz;   // peak frequency of each triangle
  double fmin = 0.0;
  double fmax = 0.0;

  double at(std::size_t band, std::size_t bin) const { return weights[band * n_bins + bin]; }
};

// Triangular filters with unit peak, centers uniformly spaced in mel between
// fmin and fmax (n_mels + 2 edge points, the outer two are only edges).
MelFilterbank mel_filterbank(std::size_t n_fft, std::size_t n_mels, int sample_rate,
                             double fmin, double fmax);

struct MelSpectrogram {
  std::vector<double> values;  // [n_frames x n_mels], natural-log power
  std::size_t n_frames = 0;
  std::size_t n_mels = 0;
  std::size_t hop_length = 256;
  int sample_rate = kSampleRate;

  double at(std::size_t frame, std::size_t band) const { return values[frame * n_mels + band]; }
  double& at(std::size_t frame, std::size_t band) { return values[frame * n_mels + band]; }
  double frame_rate() const { return static_cast<double>(sample_rate) / hop_length; }
  // Copy of frames [begin, begin + count).
  MelSpectrogram slice(std::size_t begin, std::size_t count) const;
};

// 1 + floor(n_samples / hop) frames of a reflect-padded signal.
std::size_t frame_count(std::size_t n_samples, std::size_t hop_length);

// One-sided power spectrum |X_t(k)|^2 of each periodic-Hann frame,
// [n_frames x (n_fft/2 + 1)]. Frame t is centered on sample t * hop.
std::vector<double> stft_power(const std::vector<double>& samples, const MelConfig& cfg);

MelSpectrogram log_mel(const Waveform& wave, const MelConfig& cfg);
MelSpectrogram log_mel(const Waveform& wave, const MelConfig& cfg, const MelFilterbank& fb);

NamedArray mel_to_array(const std::string& name, const MelSpectrogram& mel);
MelSpectrogram mel_from_array(const NamedArray& a, std::size_t hop_length = 256,
                              int sample_rate = kSampleRate);

}  // namespace prsd::dsp

#endif  // PRSD_DSP_MEL_H_
