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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "prsd/errors.h"
#include "prsd/prosody/features.h"

using namespace prsd;
using namespace prsd::dsp;
using namespace prsd::prosody;

namespace {

Waveform tone(double hz, double seconds, bool saw) {
  Waveform w;
  w.samples.resize(static_cast<std::size_t>(seconds * kSampleRate));
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const double phase = hz * i / kSampleRate;
    w.samples[i] = saw ? 0.6 * (2.0 * (phase - std::floor(phase)) - 1.0)
                       : 0.6 * std::sin(2.0 * std::numbers::pi * phase);
  }
  return w;
}

// Frames whose analysis span lies fully inside the signal.
bool interior(std::size_t t, std::size_t n_frames) { return t >= 3 && t + 3 < n_frames; }

}  // namespace

TEST_CASE("sines and sawtooths are estimated within 1% on interior frames") {
  for (double hz : {80.0, 110.0, 220.0, 330.0, 440.0}) {
    for (bool saw : {false, true}) {
      CAPTURE(hz);
      CAPTURE(saw);
      auto p = estimate_pitch(tone(hz, 1.0, saw));
      CHECK(p.size() == 16000 / 256 + 1);
      for (std::size_t t = 0; t < p.size(); ++t) {
        if (!interior(t, p.size())) continue;
        CHECK(p.voiced[t] == 1);
        CHECK(std::abs(p.f0[t] - hz) / hz < 0.01);
      }
    }
  }
}

TEST_CASE("a 110 Hz sawtooth has no octave error") {
  auto p = estimate_pitch(tone(110.0, 1.0, true));
  for (std::size_t t = 3; t + 3 < p.size(); ++t) CHECK(p.f0[t] < 160.0);
}

TEST_CASE("digital silence is fully unvoiced") {
  Waveform w;
  w.samples.assign(16000, 0.0);
  auto p = estimate_pitch(w);
  CHECK(p.voiced_count() == 0);
  for (double f : p.f0) CHECK(f == 0.0);
}

TEST_CASE("white noise is mostly unvoiced") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 0.3);
  Waveform w;
  for (int i = 0; i < 16000; ++i) w.samples.push_back(n(rng));
  auto p = estimate_pitch(w);
  CHECK(p.voiced_count() < p.size() / 10);
}

TEST_CASE("voiced frames satisfy the contour invariants") {
  auto p = estimate_pitch(tone(150.0, 0.5, true));
  for (std::size_t t = 0; t < p.size(); ++t) {
    CHECK((p.f0[t] == 0.0) == (p.voiced[t] == 0));
    if (p.voiced[t]) {
      CHECK(p.f0[t] >= 65.0);
      CHECK(p.f0[t] <= 500.0);
    }
  }
}

TEST_CASE("doubling the frequency doubles the estimate") {
  for (double hz : {90.0, 120.0, 200.0}) {
    auto lo = estimate_pitch(tone(hz, 1.0, true));
    auto hi = estimate_pitch(tone(2 * hz, 1.0, true));
    for (std::size_t t = 3; t + 3 < lo.size(); ++t) {
      REQUIRE(lo.voiced[t]);
      REQUIRE(hi.voiced[t]);
      CHECK(std::abs(hi.f0[t] / lo.f0[t] - 2.0) < 0.04);
    }
  }
}

TEST_CASE("silence appended to a tone is unvoiced away from the boundary") {
  Waveform w = tone(180.0, 0.6, false);
  const std::size_t boundary_sample = w.samples.size();
  w.samples.resize(w.samples.size() + 8000, 0.0);
  auto p = estimate_pitch(w);
  const std::size_t boundary = boundary_sample / 256;
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (t + 2 >= boundary && t <= boundary + 2) continue;
    if (t > boundary) {
      CHECK(p.voiced[t] == 0);
    } else if (t >= 3) {
      CHECK(p.voiced[t] == 1);
    }
  }
}

TEST_CASE("pitch preconditions") {
  CHECK_THROWS_AS(estimate_pitch(tone(100, 0.02, false)), TooShortError);
  PitchConfig bad;
  bad.f_lo = 40.0;
  CHECK_THROWS_AS(estimate_pitch(tone(100, 1.0, false), bad), ParameterError);
  bad.f_lo = 300.0;
  bad.f_hi = 200.0;
  CHECK_THROWS_AS(estimate_pitch(tone(100, 1.0, false), bad), ParameterError);
}

TEST_CASE("normalized pitch is log2 relative to 55 Hz") {
  PitchContour c;
  c.f0 = {55.0, 110.0, 0.0, 220.0};
  c.voiced = {1, 1, 0, 1};
  auto n = normalize_pitch(c);
  CHECK(n.normalized[0] == 0.0);
  CHECK(n.normalized[1] == 1.0);
  CHECK(n.normalized[2] == 0.0);
  CHECK(n.normalized[3] == 2.0);
}

TEST_CASE("normalization round trips on random voiced contours") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> f(65.0, 500.0);
  PitchContour c;
  for (int i = 0; i < 500; ++i) {
    c.f0.push_back(f(rng));
    c.voiced.push_back(1);
  }
  auto n = normalize_pitch(c);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(std::abs(normalized_to_hz(n.normalized[i]) - c.f0[i]) < 1e-9);
  }
}

TEST_CASE("energy is the per-frame band mean") {
  MelSpectrogram mel;
  mel.n_frames = 1;
  mel.n_mels = 3;
  mel.values = {1.0, 2.0, 3.0};
  CHECK(extract_energy(mel).energy[0] == 2.0);

  Waveform silent;
  silent.samples.assign(4000, 0.0);
  for (double e : extract_energy(log_mel(silent, MelConfig{})).energy) CHECK(e == std::log(1e-5));

  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(-3.0, 2.0);
  MelSpectrogram r;
  r.n_frames = 50;
  r.n_mels = 80;
  for (int i = 0; i < 50 * 80; ++i) r.values.push_back(n(rng));
  auto e = extract_energy(r);
  REQUIRE(e.size() == 50);
  for (std::size_t t = 0; t < 50; ++t) {
    double s = 0.0;
    for (std::size_t m = 0; m < 80; ++m) s += r.values[t * 80 + m];
    CHECK(std::abs(e.energy[t] - s / 80.0) < 1e-12);
  }
}

TEST_CASE("louder input never lowers above-floor energy") {
  Waveform w = tone(200.0, 0.5, true);
  Waveform loud = w;
  for (double& x : loud.samples) x *= 1.7;
  auto a = extract_energy(log_mel(w, MelConfig{}));
  auto b = extract_energy(log_mel(loud, MelConfig{}));
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a.energy[t] > std::log(1e-5)) CHECK(b.energy[t] >= a.energy[t]);
  }
}

TEST_CASE("contour length equals mel frame count") {
  for (std::size_t n : {1300u, 8000u, 16001u, 32000u}) {
    Waveform w = tone(170.0, 1.0, false);
    w.samples.resize(n);
    CHECK(estimate_pitch(w).size() == log_mel(w, MelConfig{}).n_frames);
  }
}

TEST_CASE("contours export to CSV and the container") {
  auto p = normalize_pitch(estimate_pitch(tone(200.0, 0.3, false)));
  Waveform w = tone(200.0, 0.3, false);
  auto e = extract_energy(log_mel(w, MelConfig{}));
  auto path = std::filesystem::temp_directory_path() / "prsd_contours.csv";
  write_contours_csv(path, p, e, true, true);
  std::ifstream f(path);
  std::string header, first;
  std::getline(f, header);
  std::getline(f, first);
  CHECK(header == "frame_index,f0,voiced,normalized,energy,predicted");
  CHECK(first.rfind("0,", 0) == 0);
  CHECK(first.back() == '1');
  std::filesystem::remove(path);

  ArrayBundle bundle(contours_to_arrays("clip", p, e));
  PitchContour p2;
  EnergyContour e2;
  contours_from_bundle(bundle, "clip", p2, e2);
  CHECK(p2.f0 == p.f0);
  CHECK(p2.voiced == p.voiced);
  CHECK(p2.normalized == p.normalized);
  CHECK(e2.energy == e.energy);
}
