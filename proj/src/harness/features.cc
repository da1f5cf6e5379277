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

#include "prsd/harness/features.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "prsd/errors.h"
#include "prsd/io/container.h"
#include "prsd/nn/optim.h"

namespace prsd::harness {

dsp::MelConfig harness_mel_config(const ExperimentConfig& cfg) {
  dsp::MelConfig m;
  m.n_mels = static_cast<std::size_t>(cfg.n_mels);
  return m;
}

FeatureSet extract_features(const Corpus& corpus, const ExperimentConfig& cfg) {
  const dsp::MelConfig mel_cfg = harness_mel_config(cfg);
  const auto fb = dsp::mel_filterbank(mel_cfg.n_fft, mel_cfg.n_mels, mel_cfg.sample_rate,
                                      mel_cfg.fmin, mel_cfg.fmax);
  FeatureSet fs;
  for (const auto& wave : corpus.waves) {
    ClipFeatures f;
    f.mel = dsp::log_mel(wave, mel_cfg, fb);
    f.pitch = prosody::normalize_pitch(prosody::estimate_pitch(wave));
    f.energy = prosody::extract_energy(f.mel);
    if (f.pitch.size() != f.mel.n_frames) {
      throw DimensionError("clip " + wave.clip_id + ": pitch and mel frame counts differ");
    }
    fs.clips.push_back(std::move(f));
  }
  const std::size_t M = mel_cfg.n_mels;
  std::vector<double> sum(M, 0.0), sq(M, 0.0);
  double count = 0.0;
  for (std::size_t i = 0; i < fs.clips.size(); ++i) {
    if (corpus.clips[i].test) continue;
    const auto& mel = fs.clips[i].mel;
    for (std::size_t t = 0; t < mel.n_frames; ++t) {
      for (std::size_t b = 0; b < M; ++b) sum[b] += mel.at(t, b);
    }
    count += mel.n_frames;
  }
  if (count < 2) throw DatasetError("no training frames to fit mel statistics");
  fs.band_mean.resize(M);
  fs.band_std.resize(M);
  for (std::size_t b = 0; b < M; ++b) fs.band_mean[b] = sum[b] / count;
  for (std::size_t i = 0; i < fs.clips.size(); ++i) {
    if (corpus.clips[i].test) continue;
    const auto& mel = fs.clips[i].mel;
    for (std::size_t t = 0; t < mel.n_frames; ++t) {
      for (std::size_t b = 0; b < M; ++b) sq[b] += std::pow(mel.at(t, b) - fs.band_mean[b], 2);
    }
  }
  for (std::size_t b = 0; b < M; ++b) fs.band_std[b] = std::max(std::sqrt(sq[b] / count), 1e-6);
  return fs;
}

std::vector<double> standardize(const dsp::MelSpectrogram& mel, const FeatureSet& fs) {
  const std::size_t M = fs.band_mean.size();
  if (mel.n_mels != M) throw DimensionError("mel band count differs from the feature statistics");
  std::vector<double> z(mel.values.size());
  for (std::size_t t = 0; t < mel.n_frames; ++t) {
    for (std::size_t b = 0; b < M; ++b) {
      z[t * M + b] = (mel.at(t, b) - fs.band_mean[b]) / fs.band_std[b];
    }
  }
  return z;
}

dsp::MelSpectrogram destandardize(std::span<const double> z, std::size_t n_frames,
                                  const FeatureSet& fs, const dsp::MelConfig& mel_cfg) {
  const std::size_t M = fs.band_mean.size();
  if (z.size() != n_frames * M) throw DimensionError("standardized mel has the wrong size");
  dsp::MelSpectrogram mel;
  mel.n_frames = n_frames;
  mel.n_mels = M;
  mel.hop_length = mel_cfg.hop_length;
  mel.sample_rate = mel_cfg.sample_rate;
  mel.values.resize(z.size());
  for (std::size_t t = 0; t < n_frames; ++t) {
    for (std::size_t b = 0; b < M; ++b) {
      mel.values[t * M + b] = z[t * M + b] * fs.band_std[b] + fs.band_mean[b];
    }
  }
  return mel;
}

void write_features(const std::filesystem::path& dir, const FeatureSet& fs, const Corpus& corpus) {
  std::filesystem::create_directories(dir);
  std::vector<NamedArray> arrays;
  const std::size_t M = fs.band_mean.size();
  arrays.push_back({"mel.band_mean", {M}, fs.band_mean});
  arrays.push_back({"mel.band_std", {M}, fs.band_std});
  for (std::size_t i = 0; i < fs.clips.size(); ++i) {
    const auto& id = corpus.clips[i].clip_id;
    const auto& f = fs.clips[i];
    arrays.push_back({id + ".mel", {f.mel.n_frames, f.mel.n_mels}, f.mel.values});
    for (auto& a : prosody::contours_to_arrays(id, f.pitch, f.energy)) arrays.push_back(a);
    prosody::write_contours_csv(dir / (id + "_contours.csv"), f.pitch, f.energy);
  }
  write_container(dir / "features.prsd", arrays);
}

FeatureSet read_features(const std::filesystem::path& dir, const Corpus& corpus,
                         const ExperimentConfig& cfg) {
  const ArrayBundle bundle(read_container(dir / "features.prsd"));
  const dsp::MelConfig mel_cfg = harness_mel_config(cfg);
  FeatureSet fs;
  fs.band_mean = bundle.values("mel.band_mean");
  fs.band_std = bundle.values("mel.band_std");
  if (fs.band_mean.size() != mel_cfg.n_mels) {
    throw ConfigError("features were extracted with " + std::to_string(fs.band_mean.size()) +
                      " mel bands, config asks for " + std::to_string(mel_cfg.n_mels));
  }
  for (const auto& m : corpus.clips) {
    ClipFeatures f;
    const auto& mel = bundle.get(m.clip_id + ".mel");
    f.mel.values = mel.values;
    f.mel.n_frames = mel.shape.at(0);
    f.mel.n_mels = mel.shape.at(1);
    f.mel.hop_length = mel_cfg.hop_length;
    f.mel.sample_rate = mel_cfg.sample_rate;
    prosody::contours_from_bundle(bundle, m.clip_id, f.pitch, f.energy);
    fs.clips.push_back(std::move(f));
  }
  return fs;
}

MelPitchReader::MelPitchReader(std::size_t n_mels, nn::Rng& rng)
    : n_mels_(n_mels), net_({(2 * kContext + 1) * n_mels, 64, 64, 1}, rng) {}

std::vector<double> MelPitchReader::windows(std::span<const double> z,
                                            std::size_t n_frames) const {
  const std::size_t M = n_mels_, W = 2 * kContext + 1;
  if (z.size() != n_frames * M) throw DimensionError("pitch reader input has the wrong size");
  std::vector<double> out(n_frames * W * M);
  for (std::size_t t = 0; t < n_frames; ++t) {
    for (std::size_t k = 0; k < W; ++k) {
      const auto src = static_cast<std::size_t>(std::clamp<long>(
          long(t) + long(k) - long(kContext), 0, long(n_frames) - 1));
      std::copy(z.begin() + src * M, z.begin() + (src + 1) * M,
                out.begin() + (t * W + k) * M);
    }
  }
  return out;
}

nn::Tensor MelPitchReader::forward(std::span<const double> z, std::size_t n_frames) const {
  const std::size_t W = 2 * kContext + 1;
  return net_.forward(nn::Tensor::from_data({n_frames, W * n_mels_}, windows(z, n_frames)));
}

prosody::PitchContour MelPitchReader::read(std::span<const double> z, std::size_t n_frames) const {
  const nn::Tensor out = forward(z, n_frames);
  // Like any pitch tracker, the reader only reports the search range.
  const prosody::PitchConfig range;
  const double lo = std::log2(range.f_lo / 55.0), hi = std::log2(range.f_hi / 55.0);
  prosody::PitchContour c;
  c.frame_rate = double(dsp::kSampleRate) / 256.0;
  for (std::size_t t = 0; t < n_frames; ++t) {
    const double p = std::clamp(out.data()[t], lo, hi);
    c.normalized.push_back(p);
    c.f0.push_back(prosody::normalized_to_hz(p));
    c.voiced.push_back(1);
  }
  return c;
}

void MelPitchReader::visit(const std::string& prefix, const Visitor& fn) {
  net_.visit(prefix + "net.", fn);
}

double train_pitch_reader(MelPitchReader& reader, const Corpus& corpus, const FeatureSet& fs,
                          const ExperimentConfig& cfg) {
  // Pool every voiced training frame once; batches sample rows from the pool.
  const std::size_t M = fs.band_mean.size(), D = (2 * MelPitchReader::kContext + 1) * M;
  std::vector<double> rows, targets;
  for (std::size_t i = 0; i < corpus.clips.size(); ++i) {
    if (corpus.clips[i].test) continue;
    const auto& f = fs.clips[i];
    const auto win = reader.windows(standardize(f.mel, fs), f.mel.n_frames);
    for (std::size_t t = 0; t < f.mel.n_frames; ++t) {
      if (!f.pitch.voiced[t]) continue;
      rows.insert(rows.end(), win.begin() + t * D, win.begin() + (t + 1) * D);
      targets.push_back(f.pitch.normalized[t]);
    }
  }
  if (targets.empty()) throw DatasetError("no voiced training frames for the pitch reader");

  std::seed_seq seq{std::uint32_t(cfg.seed), std::uint32_t(cfg.seed >> 32), 0x72656164u};
  nn::Rng rng(seq);
  std::uniform_int_distribution<std::size_t> pick(0, targets.size() - 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto params = reader.parameters();
  auto adam = nn::make_adam_state(params, cfg.reader_lr);
  const auto B = static_cast<std::size_t>(cfg.reader_batch);
  double last = 0.0;
  for (int step = 0; step < cfg.reader_steps; ++step) {
    adam.learning_rate = cfg.reader_lr * (0.1 + 0.45 * (1.0 + std::cos(M_PI * step / cfg.reader_steps)));
    std::vector<double> x(B * D), y(B);
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t r = pick(rng);
      // Envelope and gain offsets leave the harmonic pattern in place, so the
      // reader has to follow it instead of speaker timbre.
      std::vector<double> band(M), gain(D / M);
      for (double& v : band) v = cfg.reader_band_offset * noise(rng);
      for (double& v : gain) v = cfg.reader_frame_gain * noise(rng);
      for (std::size_t d = 0; d < D; ++d) {
        x[b * D + d] = rows[r * D + d] + band[d % M] + gain[d / M] + cfg.reader_noise * noise(rng);
      }
      y[b] = targets[r];
    }
    reader.zero_grad();
    nn::Tensor pred = reader.forward_rows(nn::Tensor::from_data({B, D}, std::move(x)));
    nn::Tensor loss = nn::mse_loss(pred, nn::Tensor::from_data({B, 1}, std::move(y)));
    loss.backward();
    nn::adam_step(params, adam);
    last = loss.item();
  }
  return last;
}

}  // namespace prsd::harness
