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

#ifndef PRSD_HARNESS_CORPUS_H_
#define PRSD_HARNESS_CORPUS_H_

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "prsd/dsp/audio.h"
#include "prsd/harness/config.h"

namespace prsd::harness {

inline constexpr std::size_t kSpeakerDim = 8;
inline constexpr std::size_t kEmotionDim = 6;
inline constexpr std::size_t kContentDim = 8;
inline constexpr int kNumTemplates = 6;
inline constexpr int kVocabSize = 10;

struct SpeakerProfile {
  std::string speaker_id;
  double base_f0 = 0.0;        // Hz
  double range_st = 0.0;       // pitch excursion in semitones
  double gain_db = 0.0;
  double tilt = 0.0;           // per-harmonic amplitude ratio
  double formant_scale = 1.0;  // stretches the token formants
  std::array<double, 4> id_code{};
};

struct EmotionStyle {
  const char* name;
  double shift_st;    // mean pitch shift at full intensity
  double range_mult;  // pitch excursion multiplier at full intensity
  double energy_db;   // level change at full intensity
};

inline constexpr std::array<EmotionStyle, 4> kEmotions = {{
    {"neutral", 0.0, 1.0, 0.0},
    {"happy", 2.0, 1.5, 3.0},
    {"sad", -2.0, 0.6, -5.0},
    {"angry", 1.0, 1.3, 5.0},
}};

struct TokenStyle {
  double accent;  // pitch target in units of half the speaker range
  double amp;     // relative amplitude
  double f1, f2;  // formant centers, Hz
  std::array<double, kContentDim> embedding;
};

// The fixed "language": token styles and the sentence templates that serve
// as content labels.
struct Language {
  std::array<TokenStyle, kVocabSize> tokens;
  std::array<std::vector<int>, kNumTemplates> templates;
};
Language make_language(std::uint64_t seed);

struct ClipMeta {
  std::string clip_id;
  int speaker = 0;
  int emotion = 0;
  double intensity = 0.0;
  int template_id = 0;
  bool test = false;
  std::size_t n_frames = 0;
  std::vector<double> s;  // [kSpeakerDim]
  std::vector<double> o;  // [kEmotionDim]
  std::vector<double> c;  // [n_frames x kContentDim]
};

struct Corpus {
  std::vector<SpeakerProfile> speakers;
  std::vector<ClipMeta> clips;
  std::vector<dsp::Waveform> waves;  // parallel to clips, speaker-normalized
};

// Harmonic "speech": per clip a pitch contour built from the speaker's base
// f0 and range, the emotion's shift and range multiplier scaled by its
// intensity, token accents along the template, declination and a slow
// drift; amplitude from speaker gain, token level and emotion level;
// spectrum from the speaker tilt and token formants; plus white noise. Clips
// are then normalized per speaker.
//
// Conditioning: s = [4 speaker id dims, gain, tilt, formant codes, a very
// noisy f0 code] plus per-clip jitter. o = [one-hot emotion * intensity,
// noisy f0 code, noisy gain code]. c = token embedding of each frame.
// The last test_clips_per_speaker clips of each speaker form the test split.
Corpus generate_corpus(const ExperimentConfig& cfg);

// corpus/<clip_id>.wav (float32), corpus/manifest.csv and corpus/corpus.prsd.
void write_corpus(const std::filesystem::path& dir, const Corpus& corpus);
Corpus read_corpus(const std::filesystem::path& dir);

// Normalized f0 code used in s and o: log2(f0 / 160) / 0.7.
double f0_code(double f0);

}  // namespace prsd::harness

#endif  // PRSD_HARNESS_CORPUS_H_
