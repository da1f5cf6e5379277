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

#include "prsd/metrics/metrics.h"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>

#include "prsd/errors.h"

namespace prsd::metrics {

std::optional<double> global_f0_dev(const prosody::PitchContour& synth,
                                    double speaker_global_f0) {
  if (!(speaker_global_f0 > 0.0)) throw ParameterError("speaker global f0 must be positive");
  if (synth.voiced_count() == 0) return std::nullopt;
  return std::abs(synth.voiced_mean() - speaker_global_f0);
}

double speaker_global_f0(std::span<const prosody::PitchContour> clips) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : clips) {
    if (c.voiced_count() == 0) continue;
    sum += c.voiced_mean();
    ++n;
  }
  if (n == 0) throw ParameterError("speaker has no voiced clip");
  return sum / n;
}

std::optional<double> local_f0_dev(const prosody::PitchContour& synth,
                                   const prosody::PitchContour& ref) {
  const std::size_t n = std::min(synth.size(), ref.size());
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (synth.voiced[i] && ref.voiced[i]) {
      sum += std::abs(synth.f0[i] - ref.f0[i]);
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

double energy_consistency(const prosody::EnergyContour& synth,
                          const prosody::EnergyContour& ref) {
  const std::size_t n = std::min(synth.size(), ref.size());
  if (n == 0) throw DimensionError("energy consistency needs at least one frame");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = synth.energy[i] - ref.energy[i];
    sum += d * d;
  }
  return sum / n;
}

std::vector<double> raw_stats_embedding(const dsp::MelSpectrogram& mel) {
  if (mel.n_frames < 2) {
    throw TooShortError("speaker statistics need at least 2 frames, got " +
                        std::to_string(mel.n_frames));
  }
  const std::size_t M = mel.n_mels;
  std::vector<double> out(2 * M, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    double sum = 0.0;
    for (std::size_t t = 0; t < mel.n_frames; ++t) sum += mel.at(t, m);
    const double mean = sum / mel.n_frames;
    double sq = 0.0;
    for (std::size_t t = 0; t < mel.n_frames; ++t) {
      const double d = mel.at(t, m) - mean;
      sq += d * d;
    }
    out[m] = mean;
    out[M + m] = std::sqrt(sq / mel.n_frames);
  }
  return out;
}

std::vector<double> stats_embedding(const dsp::MelSpectrogram& mel) {
  auto v = raw_stats_embedding(mel);
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) throw NumericError("speaker statistics are all zero; cannot normalize");
  for (double& x : v) x /= norm;
  return v;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("cosine of vectors with different sizes");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) throw NumericError("cosine of a zero vector");
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

namespace {

void check_pair(const dsp::MelSpectrogram& a, const dsp::MelSpectrogram& b) {
  if (a.n_mels != b.n_mels || a.hop_length != b.hop_length || a.sample_rate != b.sample_rate) {
    throw DimensionError("spectrogram pair differs in bands, hop or sample rate");
  }
}

}  // namespace

double resem(const dsp::MelSpectrogram& synth, const dsp::MelSpectrogram& ref) {
  check_pair(synth, ref);
  return cosine_similarity(stats_embedding(synth), stats_embedding(ref));
}

std::vector<std::pair<std::size_t, std::size_t>> resem_windows(std::size_t n_frames,
                                                               std::size_t hop_length,
                                                               int sample_rate,
                                                               double window_s, double hop_s) {
  const double span = static_cast<double>(n_frames) * hop_length;
  const double win = window_s * sample_rate, step = hop_s * sample_rate;
  if (span < win) {
    throw TooShortError("clip spans " + std::to_string(span / sample_rate) +
                        " s, windowed similarity needs " + std::to_string(window_s) + " s");
  }
  const auto count = static_cast<std::size_t>(std::floor((span - win) / step)) + 1;
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t k = 0; k < count; ++k) {
    const double lo = k * step, hi = lo + win;
    // Smallest i with i * hop >= lo, and smallest i with i * hop >= hi.
    const auto begin = static_cast<std::size_t>(std::ceil(lo / hop_length));
    const auto end = std::min(n_frames, static_cast<std::size_t>(std::ceil(hi / hop_length)));
    out.emplace_back(begin, end);
  }
  return out;
}

double resem_tv(const dsp::MelSpectrogram& synth, const dsp::MelSpectrogram& ref,
                double window_s, double hop_s) {
  check_pair(synth, ref);
  const std::size_t n = std::min(synth.n_frames, ref.n_frames);
  const auto windows = resem_windows(n, synth.hop_length, synth.sample_rate, window_s, hop_s);
  double sum = 0.0;
  for (const auto& [begin, end] : windows) {
    sum += resem(synth.slice(begin, end - begin), ref.slice(begin, end - begin));
  }
  return sum / windows.size();
}

PairedTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("paired test needs equal-length samples");
  if (a.size() < 2) throw ParameterError("paired test needs at least two pairs");
  PairedTest r;
  r.n = a.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < r.n; ++i) sum += a[i] - b[i];
  r.mean_difference = sum / r.n;
  double sq = 0.0;
  for (std::size_t i = 0; i < r.n; ++i) {
    const double d = a[i] - b[i] - r.mean_difference;
    sq += d * d;
  }
  const double sd = std::sqrt(sq / (r.n - 1));
  if (sd == 0.0) {
    if (r.mean_difference == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = std::copysign(std::numeric_limits<double>::infinity(), r.mean_difference);
      r.p = 0.0;
    }
    return r;
  }
  r.t = r.mean_difference / (sd / std::sqrt(static_cast<double>(r.n)));
  boost::math::students_t dist(static_cast<double>(r.n - 1));
  r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  return r;
}

}  // namespace prsd::metrics
