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

#include "prsd/prosody/features.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "prsd/errors.h"

namespace prsd::prosody {

std::size_t PitchContour::voiced_count() const {
  std::size_t n = 0;
  for (auto v : voiced) n += v ? 1 : 0;
  return n;
}

double PitchContour::voiced_mean() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < f0.size(); ++i) {
    if (voiced[i]) {
      sum += f0[i];
      ++n;
    }
  }
  return n ? sum / n : 0.0;
}

PitchContour estimate_pitch(const dsp::Waveform& wave, const PitchConfig& cfg) {
  if (!(cfg.f_lo >= 50.0 && cfg.f_hi <= 600.0 && cfg.f_lo < cfg.f_hi)) {
    throw ParameterError("pitch search range must satisfy 50 <= f_lo < f_hi <= 600 Hz");
  }
  const double sr = wave.sample_rate;
  const std::size_t n = wave.samples.size();
  if (n < 2.0 / cfg.f_lo * sr) {
    throw TooShortError("clip of " + std::to_string(n) + " samples is shorter than 2/f_lo = " +
                        std::to_string(2.0 / cfg.f_lo) + " s");
  }
  const auto tau_min = static_cast<std::size_t>(std::floor(sr / cfg.f_hi));
  const auto tau_max = static_cast<std::size_t>(std::ceil(sr / cfg.f_lo));
  const std::size_t W = cfg.window;
  const std::size_t span = W + tau_max + 1;
  const std::size_t half = span / 2;

  // Zero padding on both sides so every frame reads a full span.
  std::vector<double> x(n + 2 * span, 0.0);
  std::copy(wave.samples.begin(), wave.samples.end(), x.begin() + span);

  PitchContour out;
  const std::size_t n_frames = dsp::frame_count(n, cfg.hop_length);
  out.f0.assign(n_frames, 0.0);
  out.voiced.assign(n_frames, 0);
  out.frame_rate = sr / cfg.hop_length;

  std::vector<double> d(tau_max + 2, 0.0), cmnd(tau_max + 2, 1.0);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const double* frame = x.data() + span + t * cfg.hop_length - half;
    double energy = 0.0;
    for (std::size_t j = 0; j < W; ++j) energy += frame[j] * frame[j];
    if (energy == 0.0) continue;

    for (std::size_t tau = 1; tau <= tau_max + 1; ++tau) {
      double acc = 0.0;
      const double* lag = frame + tau;
      for (std::size_t j = 0; j < W; ++j) {
        const double diff = frame[j] - lag[j];
        acc += diff * diff;
      }
      d[tau] = acc;
    }
    double running = 0.0;
    for (std::size_t tau = 1; tau <= tau_max + 1; ++tau) {
      running += d[tau];
      cmnd[tau] = running > 0.0 ? d[tau] * tau / running : 1.0;
    }

    std::size_t best = 0;
    for (std::size_t tau = std::max<std::size_t>(tau_min, 2); tau <= tau_max; ++tau) {
      if (cmnd[tau] < cfg.threshold) {
        while (tau + 1 <= tau_max && cmnd[tau + 1] < cmnd[tau]) ++tau;
        best = tau;
        break;
      }
    }
    if (best == 0) continue;

    double lag = static_cast<double>(best);
    const double a = cmnd[best - 1], b = cmnd[best], c = cmnd[best + 1];
    const double denom = a - 2.0 * b + c;
    if (denom > 0.0) lag += 0.5 * (a - c) / denom;
    const double f0 = sr / lag;
    if (f0 >= cfg.f_lo && f0 <= cfg.f_hi) {
      out.f0[t] = f0;
      out.voiced[t] = 1;
    }
  }
  return out;
}

PitchContour normalize_pitch(PitchContour contour) {
  contour.normalized.assign(contour.f0.size(), 0.0);
  for (std::size_t i = 0; i < contour.f0.size(); ++i) {
    if (contour.voiced[i]) contour.normalized[i] = std::log2(contour.f0[i] / kPitchReferenceHz);
  }
  return contour;
}

double normalized_to_hz(double normalized) {
  return kPitchReferenceHz * std::exp2(normalized);
}

EnergyContour extract_energy(const dsp::MelSpectrogram& mel) {
  EnergyContour e;
  e.frame_rate = mel.frame_rate();
  e.energy.resize(mel.n_frames);
  for (std::size_t t = 0; t < mel.n_frames; ++t) {
    // Shifted by the first band so constant frames come out exact.
    const double ref = mel.at(t, 0);
    double acc = 0.0;
    for (std::size_t m = 0; m < mel.n_mels; ++m) acc += mel.at(t, m) - ref;
    e.energy[t] = ref + acc / static_cast<double>(mel.n_mels);
  }
  return e;
}

void write_contours_csv(const std::filesystem::path& path, const PitchContour& pitch,
                        const EnergyContour& energy, bool with_predicted_flag,
                        bool predicted) {
  if (pitch.size() != energy.size()) {
    throw DimensionError("pitch has " + std::to_string(pitch.size()) + " frames, energy " +
                         std::to_string(energy.size()));
  }
  std::ofstream f(path);
  if (!f) throw FormatError("cannot open " + path.string() + " for writing");
  f << "frame_index,f0,voiced,normalized,energy" << (with_predicted_flag ? ",predicted" : "")
    << "\n";
  char buf[160];
  for (std::size_t i = 0; i < pitch.size(); ++i) {
    const double norm = pitch.normalized.empty() ? 0.0 : pitch.normalized[i];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%d,%.17g,%.17g", i, pitch.f0[i],
                  pitch.voiced[i] ? 1 : 0, norm, energy.energy[i]);
    f << buf;
    if (with_predicted_flag) f << ',' << (predicted ? 1 : 0);
    f << '\n';
  }
}

std::vector<NamedArray> contours_to_arrays(const std::string& prefix, const PitchContour& pitch,
                                           const EnergyContour& energy) {
  const std::uint64_t n = pitch.size();
  std::vector<double> voiced(pitch.voiced.begin(), pitch.voiced.end());
  auto normalized = pitch.normalized.empty() ? std::vector<double>(n, 0.0) : pitch.normalized;
  return {{prefix + ".f0", {n}, pitch.f0},
          {prefix + ".voiced", {n}, voiced},
          {prefix + ".normalized", {n}, normalized},
          {prefix + ".energy", {energy.size()}, energy.energy}};
}

void contours_from_bundle(const ArrayBundle& bundle, const std::string& prefix,
                          PitchContour& pitch, EnergyContour& energy) {
  pitch.f0 = bundle.values(prefix + ".f0");
  const auto& v = bundle.values(prefix + ".voiced");
  pitch.voiced.assign(v.size(), 0);
  for (std::size_t i = 0; i < v.size(); ++i) pitch.voiced[i] = v[i] != 0.0 ? 1 : 0;
  pitch.normalized = bundle.values(prefix + ".normalized");
  energy.energy = bundle.values(prefix + ".energy");
}

}  // namespace prsd::prosody
