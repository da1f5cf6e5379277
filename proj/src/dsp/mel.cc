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

#include "prsd/dsp/mel.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include "prsd/errors.h"

namespace prsd::dsp {

namespace {

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
    out_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1))));
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_.get(); }
  void execute() { fftw_execute(plan_); }
  double power(std::size_t k) const {
    return out_.get()[k][0] * out_.get()[k][0] + out_.get()[k][1] * out_.get()[k][1];
  }

 private:
  std::size_t n_;
  std::unique_ptr<double, FftwDeleter> in_;
  std::unique_ptr<fftw_complex, FftwDeleter> out_;
  fftw_plan plan_;
};

std::vector<double> periodic_hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  }
  return w;
}

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank mel_filterbank(std::size_t n_fft, std::size_t n_mels, int sample_rate,
                             double fmin, double fmax) {
  if (n_mels < 2) throw ParameterError("mel filterbank needs n_mels >= 2");
  if (n_fft < 2) throw ParameterError("mel filterbank needs n_fft >= 2");
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0)) {
    throw ParameterError("mel filterbank range [" + std::to_string(fmin) + ", " +
                         std::to_string(fmax) + "] Hz invalid for sample rate " +
                         std::to_string(sample_rate));
  }
  MelFilterbank fb;
  fb.n_mels = n_mels;
  fb.n_bins = n_fft / 2 + 1;
  fb.fmin = fmin;
  fb.fmax = fmax;
  fb.weights.assign(n_mels * fb.n_bins, 0.0);

  const double lo = hz_to_mel(fmin), hi = hz_to_mel(fmax);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * i / (n_mels + 1));
  }
  fb.center_hz.assign(edges.begin() + 1, edges.end() - 1);

  const double bin_hz = static_cast<double>(sample_rate) / n_fft;
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (std::size_t k = 0; k < fb.n_bins; ++k) {
      const double f = k * bin_hz;
      const double up = (f - left) / (center - left);
      const double down = (right - f) / (right - center);
      fb.weights[m * fb.n_bins + k] = std::max(0.0, std::min(up, down));
    }
  }
  return fb;
}

MelSpectrogram MelSpectrogram::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > n_frames) {
    throw DimensionError("mel slice [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") exceeds " +
                         std::to_string(n_frames) + " frames");
  }
  MelSpectrogram out = *this;
  out.n_frames = count;
  out.values.assign(values.begin() + begin * n_mels, values.begin() + (begin + count) * n_mels);
  return out;
}

std::size_t frame_count(std::size_t n_samples, std::size_t hop_length) {
  return 1 + n_samples / hop_length;
}

std::vector<double> stft_power(const std::vector<double>& samples, const MelConfig& cfg) {
  const std::size_t n = samples.size(), n_fft = cfg.n_fft, pad = n_fft / 2;
  if (n < n_fft) {
    throw IngestionError("clip has " + std::to_string(n) +
                         " samples, shorter than one analysis frame (" +
                         std::to_string(n_fft) + ")");
  }
  std::vector<double> padded(n + 2 * pad);
  for (std::size_t i = 0; i < padded.size(); ++i) {
    // Reflect about the first and last sample (no edge repetition).
    std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(pad);
    if (j < 0) j = -j;
    if (j >= static_cast<std::ptrdiff_t>(n)) j = 2 * (static_cast<std::ptrdiff_t>(n) - 1) - j;
    padded[i] = samples[static_cast<std::size_t>(j)];
  }

  const auto window = periodic_hann(n_fft);
  const std::size_t n_frames = frame_count(n, cfg.hop_length), n_bins = n_fft / 2 + 1;
  std::vector<double> power(n_frames * n_bins);
  RealFft fft(n_fft);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const double* src = padded.data() + t * cfg.hop_length;
    double* in = fft.input();
    for (std::size_t i = 0; i < n_fft; ++i) in[i] = src[i] * window[i];
    fft.execute();
    for (std::size_t k = 0; k < n_bins; ++k) power[t * n_bins + k] = fft.power(k);
  }
  return power;
}

MelSpectrogram log_mel(const Waveform& wave, const MelConfig& cfg) {
  return log_mel(wave, cfg,
                 mel_filterbank(cfg.n_fft, cfg.n_mels, cfg.sample_rate, cfg.fmin, cfg.fmax));
}

MelSpectrogram log_mel(const Waveform& wave, const MelConfig& cfg, const MelFilterbank& fb) {
  if (wave.sample_rate != cfg.sample_rate) {
    throw IngestionError("waveform sample rate " + std::to_string(wave.sample_rate) +
                         " Hz does not match mel config " + std::to_string(cfg.sample_rate));
  }
  if (fb.n_bins != cfg.n_fft / 2 + 1 || fb.n_mels != cfg.n_mels) {
    throw DimensionError("filterbank shape does not match mel config");
  }
  const auto power = stft_power(wave.samples, cfg);
  MelSpectrogram mel;
  mel.n_mels = cfg.n_mels;
  mel.hop_length = cfg.hop_length;
  mel.sample_rate = cfg.sample_rate;
  mel.n_frames = power.size() / fb.n_bins;
  mel.values.resize(mel.n_frames * mel.n_mels);
  for (std::size_t t = 0; t < mel.n_frames; ++t) {
    const double* p = power.data() + t * fb.n_bins;
    for (std::size_t m = 0; m < fb.n_mels; ++m) {
      const double* w = fb.weights.data() + m * fb.n_bins;
      double acc = 0.0;
      for (std::size_t k = 0; k < fb.n_bins; ++k) acc += w[k] * p[k];
      mel.values[t * mel.n_mels + m] = std::log(std::max(acc, cfg.log_floor));
    }
  }
  return mel;
}

NamedArray mel_to_array(const std::string& name, const MelSpectrogram& mel) {
  return {name, {mel.n_frames, mel.n_mels}, mel.values};
}

MelSpectrogram mel_from_array(const NamedArray& a, std::size_t hop_length, int sample_rate) {
  if (a.shape.size() != 2) throw FormatError("array '" + a.name + "' is not a mel matrix");
  MelSpectrogram mel;
  mel.n_frames = a.shape[0];
  mel.n_mels = a.shape[1];
  mel.values = a.values;
  mel.hop_length = hop_length;
  mel.sample_rate = sample_rate;
  return mel;
}

}  // namespace prsd::dsp
