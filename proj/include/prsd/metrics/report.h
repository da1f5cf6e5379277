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

#ifndef PRSD_METRICS_REPORT_H_
#define PRSD_METRICS_REPORT_H_

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "prsd/dsp/mel.h"
#include "prsd/metrics/metrics.h"
#include "prsd/prosody/features.h"

namespace prsd::metrics {

inline constexpr std::array<const char*, 5> kMetricNames = {"gf0", "lf0", "ec", "resem",
                                                            "resem_tv"};

// One generated clip next to its ground truth. Contours of the generated
// clip come from whatever pitch/energy reader the caller uses.
struct ClipPair {
  std::string clip_id;
  prosody::PitchContour synth_pitch, ref_pitch;
  prosody::EnergyContour synth_energy, ref_energy;
  dsp::MelSpectrogram synth_mel, ref_mel;
  double speaker_global_f0 = 0.0;
};

struct ClipRecord {
  std::string clip_id;
  std::map<std::string, std::optional<double>> values;  // nullopt = undefined
};

// Metrics that are undefined for this pair (no voiced frame, clip too short)
// come back as nullopt instead of throwing.
ClipRecord evaluate_pair(const ClipPair& pair);

struct SystemRecords {
  std::string system;
  std::vector<ClipRecord> clips;
};

struct MetricSummary {
  double mean = 0.0;  // over defined clips; NaN if none
  std::size_t n_defined = 0;
  std::size_t n_undefined = 0;
};

struct Comparison {
  std::string metric, system_a, system_b;
  std::optional<PairedTest> test;  // empty when fewer than two shared clips
};

struct Report {
  std::vector<SystemRecords> systems;
  std::map<std::string, std::map<std::string, MetricSummary>> summaries;  // system -> metric
  std::vector<Comparison> comparisons;
};

// Clips are sorted by id within each system. Each comparison pairs clips by id over the clips defined in both systems.
Report build_report(std::vector<SystemRecords> systems,
                    const std::vector<std::pair<std::string, std::string>>& comparisons);

// clip_id,metric,system,value with values printed %.17g ("nan" if undefined).
std::string metrics_csv(const Report& report);
std::string summary_json(const Report& report);
void write_report(const std::filesystem::path& dir, const Report& report);

}  // namespace prsd::metrics

#endif  // PRSD_METRICS_REPORT_H_
