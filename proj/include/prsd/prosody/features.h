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

#ifndef PRSD_PROSODY_FEATURES_H_
#define PRSD_PROSODY_FEATURES_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "prsd/dsp/audio.h"
#include "prsd/dsp/mel.h"
#include "prsd/io/container.h"

namespace prsd::prosody {

inline constexpr double kPitchReferenceHz = 55.0;

struct PitchConfig {
  double f_lo = 65.0;
  double f_hi = 500.0;
  double threshold = 0.15;        // cumulative-mean-normalized difference
  std::size_t window = 512;       // integration window, samples
  std::size_t hop_length = 256;   // must match the mel hop
};

struct PitchContour {
  std::vector<double> f0;             // Hz, 0 when unvoiced
  std::vector<std::uint8_t> voiced;   // 1 when voiced
  std::vector<double> normalized;     // filled by normalize_pitch
  double frame_rate = 62.5;

  std::size_t size() const { return f0.size(); }
  std::size_t voiced_count() const;
  double voiced_mean() const;         // 0 when no voiced frame
};

struct EnergyContour {
  std::vector<double> energy;
  double frame_rate = 62.5;

  std::size_t size() const { return energy.size(); }
};

// YIN: difference function, cumulative-mean normalization, first dip under
// the threshold followed to its local minimum, parabolic lag refinement.
// Frame t is centered on sample t * hop so the contour lines up with log_mel.
// Frames that are digitally silent, have no dip under the threshold, or
// resolve outside [f_lo, f_hi] are unvoiced.
PitchContour estimate_pitch(const dsp::Waveform& wave, const PitchConfig& cfg = {});

// log2(f0 / 55 Hz) on voiced frames, 0 on unvoiced frames.
PitchContour normalize_pitch(PitchContour contour);
double normalized_to_hz(double normalized);

EnergyContour extract_energy(const dsp::MelSpectrogram& mel);

// CSV columns: frame_index,f0,voiced,normalized,energy[,predicted]
void write_contours_csv(const std::filesystem::path& path, const PitchContour& pitch,
                        const EnergyContour& energy, bool with_predicted_flag = false,
                        bool predicted = false);

std::vector<NamedArray> contours_to_arrays(const std::string& prefix, const PitchContour& pitch,
                                           const EnergyContour& energy);
// Reads "<prefix>.f0", "<prefix>.voiced", "<prefix>.normalized", "<prefix>.energy".
void contours_from_bundle(const ArrayBundle& bundle, const std::string& prefix,
                          PitchContour& pitch, EnergyContour& energy);

}  // namespace prsd::prosody

#endif  // PRSD_PROSODY_FEATURES_H_
