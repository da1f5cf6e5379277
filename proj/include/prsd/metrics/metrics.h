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

#ifndef PRSD_METRICS_METRICS_H_
#define PRSD_METRICS_METRICS_H_

#include <optional>
#include <span>
#include <vector>

#include "prsd/dsp/mel.h"
#include "prsd/prosody/features.h"

namespace prsd::metrics {

// |voiced mean f0 of synth - speaker_global_f0|; nullopt when synth has no
// voiced frame.
std::optional<double> global_f0_dev(const prosody::PitchContour& synth,
                                    double speaker_global_f0);

// Mean of the per-clip voiced means over clips that have voiced frames.
double speaker_global_f0(std::span<const prosody::PitchContour> clips);

// Mean |f0_synth - f0_ref| over frames voiced in both, after truncating to
// the shorter contour; nullopt when no frame is co-voiced.
std::optional<double> local_f0_dev(const prosody::PitchContour& synth,
                                   const prosody::PitchContour& ref);

// Mean squared energy difference over the common prefix.
double energy_consistency(const prosody::EnergyContour& synth,
                          const prosody::EnergyContour& ref);

// [per-band mean | per-band population std], before normalization.
std::vector<double> raw_stats_embedding(const dsp::MelSpectrogram& mel);
// L2-normalized raw_stats_embedding. Needs at least two frames.
std::vector<double> stats_embedding(const dsp::MelSpectrogram& mel);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

double resem(const dsp::MelSpectrogram& synth, const dsp::MelSpectrogram& ref);

// Windows are placed in the sample domain: frame i (centered on sample
// i * hop) belongs to window k when i * hop lies in [k * hop_s, k * hop_s +
// window_s) seconds. Only complete windows count, so a pair must span at
// least window_s; the score is the mean windowed cosine.
double resem_tv(const dsp::MelSpectrogram& synth, const dsp::MelSpectrogram& ref,
                double window_s = 2.0, double hop_s = 1.0);

// Frame ranges [begin, end) of the resem_tv windows for a clip of n_frames.
std::vector<std::pair<std::size_t, std::size_t>> resem_windows(std::size_t n_frames,
                                                               std::size_t hop_length,
                                                               int sample_rate,
                                                               double window_s = 2.0,
                                                               double hop_s = 1.0);

struct PairedTest {
  std::size_t n = 0;
  double mean_difference = 0.0;  // mean(a - b)
  double t = 0.0;
  double p = 1.0;                // two-sided
};

// Paired t-test on per-clip values; p = 1 when every difference is zero.
PairedTest paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace prsd::metrics

#endif  // PRSD_METRICS_METRICS_H_
