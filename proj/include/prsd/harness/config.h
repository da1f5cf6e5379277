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

#ifndef PRSD_HARNESS_CONFIG_H_
#define PRSD_HARNESS_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace prsd::harness {

// Prosody given to the denoiser at sampling time.
enum class ProsodySource { kNone, kPredicted, kOracle };
const char* source_name(ProsodySource s);
ProsodySource parse_source(const std::string& name);

struct ExperimentConfig {
  std::uint64_t seed = 7;

  // corpus
  int n_speakers = 8;
  int clips_per_speaker = 50;
  int test_clips_per_speaker = 5;
  double clip_seconds = 2.0;
  double noise_level = 0.003;
  int n_mels = 80;

  // diffusion
  int diffusion_T = 400;
  double beta_1 = 1e-4;
  double beta_T = 0.02;
  double w1 = 2.0;
  double w2 = 1.5;
  bool grad_normalize = true;
  int model_dim = 32;
  int heads = 2;
  int ffn_dim = 64;
  int blocks = 2;
  int diffusion_steps = 12000;
  int diffusion_batch = 8;
  double diffusion_lr = 2e-3;
  double dropout_prob = 0.1;
  double prosody_dropout_prob = 0.2;
  int classifier_steps = 1500;
  int classifier_batch = 16;
  double classifier_lr = 2e-3;

  // prosody predictor
  int predictor_steps = 1500;
  int predictor_batch = 8;
  double predictor_lr = 1e-3;
  bool use_emotion = true;

  // mel pitch reader
  int reader_steps = 3000;
  int reader_batch = 256;
  double reader_lr = 2e-3;
  double reader_noise = 0.2;        // white noise on every input value
  double reader_band_offset = 0.5;  // per-window offset of each band
  double reader_frame_gain = 0.3;   // per-frame offset shared by all bands

  std::vector<ProsodySource> prosody_sources = {ProsodySource::kOracle,
                                                ProsodySource::kPredicted,
                                                ProsodySource::kNone};
};

// Flat `key = value` lines; `#` starts a comment. Keys not set keep their
// defaults. Unknown or repeated keys, malformed values and degenerate
// settings raise ConfigError naming the line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Throws ConfigError for settings no stage can run with.
void validate(const ExperimentConfig& cfg);

// Every key in a fixed order; doubles use %.17g so the text parses back to
// the same values.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& cfg);
std::string echo_config(const ExperimentConfig& cfg);

}  // namespace prsd::harness

#endif  // PRSD_HARNESS_CONFIG_H_
