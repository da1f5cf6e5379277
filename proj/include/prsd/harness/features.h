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

#ifndef PRSD_HARNESS_FEATURES_H_
#define PRSD_HARNESS_FEATURES_H_

#include <filesystem>
#include <span>
#include <vector>

#include "prsd/dsp/mel.h"
#include "prsd/harness/config.h"
#include "prsd/harness/corpus.h"
#include "prsd/nn/layers.h"
#include "prsd/prosody/features.h"

namespace prsd::harness {

dsp::MelConfig harness_mel_config(const ExperimentConfig& cfg);

struct ClipFeatures {
  dsp::MelSpectrogram mel;        // natural-log mel, cfg.n_mels bands
  prosody::PitchContour pitch;    // YIN on the waveform, normalized
  prosody::EnergyContour energy;  // mean log-mel of `mel`
};

struct FeatureSet {
  std::vector<ClipFeatures> clips;  // parallel to Corpus::clips
  std::vector<double> band_mean;    // over training clips
  std::vector<double> band_std;
};

FeatureSet extract_features(const Corpus& corpus, const ExperimentConfig& cfg);

// Per-band standardization used by the diffusion model and the pitch reader.
std::vector<double> standardize(const dsp::MelSpectrogram& mel, const FeatureSet& fs);
dsp::MelSpectrogram destandardize(std::span<const double> z, std::size_t n_frames,
                                  const FeatureSet& fs, const dsp::MelConfig& mel_cfg);

// features/features.prsd plus features/<clip_id>_contours.csv.
void write_features(const std::filesystem::path& dir, const FeatureSet& fs, const Corpus& corpus);
FeatureSet read_features(const std::filesystem::path& dir, const Corpus& corpus,
                         const ExperimentConfig& cfg);

// Stands in for "vocoder + pitch extractor" on generated spectrograms: an MLP
// from a +-2 frame window of standardized mel to normalized pitch, fit to the
// YIN contours of voiced training frames. The corpus is continuously voiced,
// so every frame it reads is marked voiced.
class MelPitchReader : public nn::Module {
 public:
  static constexpr std::size_t kContext = 2;

  MelPitchReader(std::size_t n_mels, nn::Rng& rng);

  // z: standardized mel [n_frames x n_mels]; returns normalized pitch rows.
  nn::Tensor forward(std::span<const double> z, std::size_t n_frames) const;
  nn::Tensor forward_rows(const nn::Tensor& windowed) const { return net_.forward(windowed); }
  prosody::PitchContour read(std::span<const double> z, std::size_t n_frames) const;  // clamped to [65, 500] Hz
  void visit(const std::string& prefix, const Visitor& fn) override;

  // Windowed input rows [n_frames x (2 * kContext + 1) * n_mels], edges clamped.
  std::vector<double> windows(std::span<const double> z, std::size_t n_frames) const;

 private:
  std::size_t n_mels_;
  nn::Mlp net_;
};

// Returns the loss of the last step.
double train_pitch_reader(MelPitchReader& reader, const Corpus& corpus, const FeatureSet& fs,
                          const ExperimentConfig& cfg);

}  // namespace prsd::harness

#endif  // PRSD_HARNESS_FEATURES_H_
