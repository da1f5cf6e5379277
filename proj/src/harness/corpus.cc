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

#include "prsd/harness/corpus.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "prsd/dsp/mel.h"
#include "prsd/errors.h"
#include "prsd/io/container.h"

namespace prsd::harness {

namespace {

constexpr double kHop = 256.0;
constexpr double kMaxHarmonicHz = 5000.0;
constexpr double kSpeakerJitter = 1.0;
constexpr double kSpeakerF0Noise = 1.0;
constexpr double kEmotionCodeNoise = 0.05;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return std::mt19937_64(seq);
}

double gain_code(double gain_db) { return (gain_db + 3.0) / 3.0; }

// One-pole smoother with time constant tau_s, run forward over x.
void smooth(std::vector<double>& x, double tau_s, int sr) {
  const double a = std::exp(-1.0 / (tau_s * sr));
  for (std::size_t i = 1; i < x.size(); ++i) x[i] = a * x[i - 1] + (1.0 - a) * x[i];
}

double bump(double f, double center, double width) {
  const double z = (f - center) / width;
  return std::exp(-z * z);
}

std::string clip_name(int speaker, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "spk%02d_%03d", speaker, index);
  return buf;
}

std::string speaker_name(int speaker) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "spk%02d", speaker);
  return buf;
}

}  // namespace

double f0_code(double f0) { return std::log2(f0 / 160.0) / 0.7; }

Language make_language(std::uint64_t seed) {
  auto rng = make_rng(seed, 0x6c616e67);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  Language lang;
  for (auto& t : lang.tokens) {
    t.accent = 2.0 * u(rng) - 1.0;
    t.amp = 0.45 + 0.55 * u(rng);
    t.f1 = 300.0 + 550.0 * u(rng);
    t.f2 = 900.0 + 1500.0 * u(rng);
    for (auto& v : t.embedding) v = n(rng);
  }
  std::uniform_int_distribution<int> len(5, 7), tok(0, kVocabSize - 1);
  for (auto& tpl : lang.templates) {
    tpl.resize(len(rng));
    for (auto& v : tpl) v = tok(rng);
  }
  return lang;
}

Corpus generate_corpus(const ExperimentConfig& cfg) {
  validate(cfg);
  const int sr = dsp::kSampleRate;
  const auto n_samples = static_cast<std::size_t>(std::llround(cfg.clip_seconds * sr));
  const std::size_t n_frames = dsp::frame_count(n_samples, static_cast<std::size_t>(kHop));
  const Language lang = make_language(cfg.seed);

  Corpus corpus;
  {
    auto rng = make_rng(cfg.seed, 0x73706b72);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n(0.0, 1.0);
    // Base pitches evenly cover [100, 260] Hz in a shuffled order.
    std::vector<int> order(cfg.n_speakers);
    for (int i = 0; i < cfg.n_speakers; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (int k = 0; k < cfg.n_speakers; ++k) {
      SpeakerProfile p;
      p.speaker_id = speaker_name(k);
      const double frac = cfg.n_speakers > 1 ? double(order[k]) / (cfg.n_speakers - 1) : 0.5;
      p.base_f0 = 100.0 * std::pow(2.6, frac);
      p.range_st = 2.0 + 2.0 * u(rng);
      p.gain_db = -6.0 * u(rng);
      p.tilt = 0.6 + 0.25 * u(rng);
      p.formant_scale = 0.9 + 0.2 * u(rng);
      for (auto& v : p.id_code) v = n(rng);
      corpus.speakers.push_back(p);
    }
  }

  for (int k = 0; k < cfg.n_speakers; ++k) {
    const SpeakerProfile& spk = corpus.speakers[k];
    for (int i = 0; i < cfg.clips_per_speaker; ++i) {
      auto rng = make_rng(cfg.seed, 0x636c6970, (std::uint64_t(k) << 32) | std::uint32_t(i));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::normal_distribution<double> n(0.0, 1.0);

      ClipMeta m;
      m.clip_id = clip_name(k, i);
      m.speaker = k;
      m.test = i >= cfg.clips_per_speaker - cfg.test_clips_per_speaker;
      m.emotion = std::uniform_int_distribution<int>(0, int(kEmotions.size()) - 1)(rng);
      m.intensity = 0.5 + 0.5 * u(rng);
      m.template_id = std::uniform_int_distribution<int>(0, kNumTemplates - 1)(rng);
      m.n_frames = n_frames;
      const EmotionStyle& emo = kEmotions[m.emotion];
      const auto& tokens = lang.templates[m.template_id];

      m.s = {spk.id_code[0], spk.id_code[1], spk.id_code[2], spk.id_code[3],
             gain_code(spk.gain_db), (spk.tilt - 0.725) / 0.075,
             (spk.formant_scale - 1.0) / 0.1, f0_code(spk.base_f0) + kSpeakerF0Noise * n(rng)};
      for (auto& v : m.s) v += kSpeakerJitter * n(rng);
      m.o.assign(kEmotionDim, 0.0);
      m.o[m.emotion] = m.intensity;
      m.o[4] = f0_code(spk.base_f0) + kEmotionCodeNoise * n(rng);
      m.o[5] = gain_code(spk.gain_db) + kEmotionCodeNoise * n(rng);

      // Token boundaries in frames: equal split with jittered interior edges.
      const std::size_t nt = tokens.size();
      std::vector<double> edges(nt + 1);
      for (std::size_t j = 0; j <= nt; ++j) edges[j] = double(n_frames) * j / nt;
      for (std::size_t j = 1; j < nt; ++j) edges[j] += 6.0 * u(rng) - 3.0;
      std::vector<int> frame_token(n_frames);
      for (std::size_t t = 0; t < n_frames; ++t) {
        std::size_t j = 0;
        while (j + 1 < nt && double(t) >= edges[j + 1]) ++j;
        frame_token[t] = tokens[j];
      }
      m.c.resize(n_frames * kContentDim);
      for (std::size_t t = 0; t < n_frames; ++t) {
        const auto& e = lang.tokens[frame_token[t]].embedding;
        std::copy(e.begin(), e.end(), m.c.begin() + t * kContentDim);
      }

      // Sample-rate control tracks.
      const double range = spk.range_st * (1.0 + m.intensity * (emo.range_mult - 1.0));
      const double drift_phase = 2.0 * std::numbers::pi * u(rng);
      const double drift_rate = 0.5 + 0.5 * u(rng);
      const double level_db = spk.gain_db + m.intensity * emo.energy_db;
      std::vector<double> semis(n_samples), amp(n_samples), f1(n_samples), f2(n_samples);
      for (std::size_t s = 0; s < n_samples; ++s) {
        const auto frame = std::min<std::size_t>(n_frames - 1, std::size_t(std::lround(s / kHop)));
        const TokenStyle& tk = lang.tokens[frame_token[frame]];
        const double time = double(s) / sr;
        semis[s] = tk.accent * 0.5 * range;
        amp[s] = tk.amp;
        f1[s] = tk.f1 * spk.formant_scale;
        f2[s] = tk.f2 * spk.formant_scale;
        semis[s] += -0.25 * range * time / cfg.clip_seconds +
                    0.3 * std::sin(2.0 * std::numbers::pi * drift_rate * time + drift_phase);
      }
      smooth(semis, 0.025, sr);
      smooth(amp, 0.015, sr);
      smooth(f1, 0.02, sr);
      smooth(f2, 0.02, sr);

      dsp::Waveform w;
      w.clip_id = m.clip_id;
      w.speaker_id = spk.speaker_id;
      w.samples.assign(n_samples, 0.0);
      const double level = std::pow(10.0, level_db / 20.0);
      double phase = 0.0;
      for (std::size_t s = 0; s < n_samples; ++s) {
        const double f0 = spk.base_f0 * std::pow(2.0, (m.intensity * emo.shift_st + semis[s]) / 12.0);
        phase += 2.0 * std::numbers::pi * f0 / sr;
        if (phase > 2.0 * std::numbers::pi) phase -= 2.0 * std::numbers::pi;
        double v = 0.0, h = 1.0;
        for (int kk = 1; kk * f0 < kMaxHarmonicHz; ++kk) {
          const double f = kk * f0;
          v += h * (1.0 + 2.5 * bump(f, f1[s], 120.0) + 1.5 * bump(f, f2[s], 200.0)) *
               std::sin(kk * phase);
          h *= spk.tilt;
        }
        w.samples[s] = 0.1 * level * amp[s] * v + cfg.noise_level * n(rng);
      }
      corpus.clips.push_back(std::move(m));
      corpus.waves.push_back(std::move(w));
    }
  }
  corpus.waves = dsp::speaker_normalize(std::move(corpus.waves));
  return corpus;
}

void write_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.csv", std::ios::trunc);
  if (!manifest) throw FormatError("cannot write " + (dir / "manifest.csv").string());
  manifest << "clip_id,speaker_id,split,emotion,intensity,template\n";
  std::vector<NamedArray> arrays;
  const std::size_t n_spk = corpus.speakers.size();
  NamedArray profile{"speakers.profile", {n_spk, 5}, {}};
  NamedArray ids{"speakers.id_code", {n_spk, 4}, {}};
  for (const auto& p : corpus.speakers) {
    profile.values.insert(profile.values.end(),
                          {p.base_f0, p.range_st, p.gain_db, p.tilt, p.formant_scale});
    ids.values.insert(ids.values.end(), p.id_code.begin(), p.id_code.end());
  }
  arrays.push_back(profile);
  arrays.push_back(ids);
  for (std::size_t i = 0; i < corpus.clips.size(); ++i) {
    const auto& m = corpus.clips[i];
    char intensity[40];
    std::snprintf(intensity, sizeof(intensity), "%.17g", m.intensity);
    manifest << m.clip_id << "," << corpus.speakers[m.speaker].speaker_id << ","
             << (m.test ? "test" : "train") << "," << kEmotions[m.emotion].name << ","
             << intensity << "," << m.template_id << "\n";
    arrays.push_back({m.clip_id + ".s", {m.s.size()}, m.s});
    arrays.push_back({m.clip_id + ".o", {m.o.size()}, m.o});
    arrays.push_back({m.clip_id + ".c", {m.n_frames, kContentDim}, m.c});
    dsp::write_wav(dir / (m.clip_id + ".wav"), corpus.waves[i], dsp::WavEncoding::kFloat32);
  }
  if (!manifest) throw FormatError("write failed for " + (dir / "manifest.csv").string());
  write_container(dir / "corpus.prsd", arrays);
}

Corpus read_corpus(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest.csv");
  if (!manifest) throw FormatError("missing corpus manifest " + (dir / "manifest.csv").string());
  const ArrayBundle bundle(read_container(dir / "corpus.prsd"));
  Corpus corpus;
  const auto& profile = bundle.get("speakers.profile");
  const auto& ids = bundle.values("speakers.id_code");
  for (std::size_t k = 0; k < profile.shape.at(0); ++k) {
    SpeakerProfile p;
    p.speaker_id = speaker_name(int(k));
    const double* v = profile.values.data() + 5 * k;
    p.base_f0 = v[0];
    p.range_st = v[1];
    p.gain_db = v[2];
    p.tilt = v[3];
    p.formant_scale = v[4];
    std::copy(ids.begin() + 4 * k, ids.begin() + 4 * k + 4, p.id_code.begin());
    corpus.speakers.push_back(p);
  }
  std::string line;
  std::getline(manifest, line);
  if (line != "clip_id,speaker_id,split,emotion,intensity,template") {
    throw FormatError("unexpected corpus manifest header '" + line + "'");
  }
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[6];
    for (auto& x : f) std::getline(ss, x, ',');
    ClipMeta m;
    m.clip_id = f[0];
    m.speaker = -1;
    for (std::size_t k = 0; k < corpus.speakers.size(); ++k) {
      if (corpus.speakers[k].speaker_id == f[1]) m.speaker = int(k);
    }
    if (m.speaker < 0) throw FormatError("manifest names unknown speaker '" + f[1] + "'");
    m.test = f[2] == "test";
    m.emotion = -1;
    for (std::size_t e = 0; e < kEmotions.size(); ++e) {
      if (f[3] == kEmotions[e].name) m.emotion = int(e);
    }
    if (m.emotion < 0) throw FormatError("manifest names unknown emotion '" + f[3] + "'");
    m.intensity = std::stod(f[4]);
    m.template_id = std::stoi(f[5]);
    m.s = bundle.values(m.clip_id + ".s");
    m.o = bundle.values(m.clip_id + ".o");
    const auto& c = bundle.get(m.clip_id + ".c");
    m.c = c.values;
    m.n_frames = c.shape.at(0);

    dsp::Waveform w = dsp::read_wav(dir / (m.clip_id + ".wav"));
    w.speaker_id = f[1];
    corpus.clips.push_back(std::move(m));
    corpus.waves.push_back(std::move(w));
  }
  if (corpus.clips.empty()) throw DatasetError("corpus manifest lists no clips");
  return corpus;
}

}  // namespace prsd::harness
