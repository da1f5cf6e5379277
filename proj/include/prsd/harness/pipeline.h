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

#ifndef PRSD_HARNESS_PIPELINE_H_
#define PRSD_HARNESS_PIPELINE_H_

#include <filesystem>
#include <ostream>
#include <vector>

#include "prsd/diffusion/networks.h"
#include "prsd/harness/config.h"
#include "prsd/harness/corpus.h"
#include "prsd/harness/features.h"
#include "prsd/metrics/report.h"
#include "prsd/prosody/predictor.h"

namespace prsd::harness {

// Fixed layout under the output directory.
struct OutputLayout {
  std::filesystem::path root;

  std::filesystem::path corpus() const { return root / "corpus"; }
  std::filesystem::path features() const { return root / "features"; }
  std::filesystem::path checkpoints() const { return root / "checkpoints"; }
  std::filesystem::path samples(ProsodySource s) const { return root / "samples" / source_name(s); }
  std::filesystem::path reports() const { return root / "reports"; }
};

// Stage seeds are derived from cfg.seed and a per-stage tag.
std::uint64_t stage_seed(const ExperimentConfig& cfg, std::uint32_t tag);

diffusion::ConditioningBundle clip_bundle(const ClipMeta& meta, const ClipFeatures& f);
prosody::ProsodyInputs clip_inputs(const ClipMeta& meta);

// Each stage reads the artifacts of earlier stages from `out` and throws
// OrchestrationError naming itself when one is missing.
void stage_synthdata(const ExperimentConfig& cfg, const OutputLayout& out, std::ostream& log);
void stage_extract(const ExperimentConfig& cfg, const OutputLayout& out, std::ostream& log);
void stage_train_diffusion(const ExperimentConfig& cfg, const OutputLayout& out, std::ostream& log);
void stage_train_prosody(const ExperimentConfig& cfg, const OutputLayout& out, std::ostream& log);
// Samples every test clip for each configured source with the same chain
// seeds. The oracle and none sources never open predictor checkpoints.
void stage_sample(const ExperimentConfig& cfg, const OutputLayout& out, std::ostream& log);
// Scores every sampled source against ground truth and writes
// reports/metrics.csv, reports/summary.json and reports/config_echo.txt.
// Throws OrchestrationError("no pairs ...") when no samples exist.
metrics::Report stage_evaluate(const ExperimentConfig& cfg, const OutputLayout& out,
                               std::ostream& log);

// All stages in order; train-prosody is skipped when no source needs it.
metrics::Report run_experiment(const ExperimentConfig& cfg, const OutputLayout& out,
                               std::ostream& log);

}  // namespace prsd::harness

#endif  // PRSD_HARNESS_PIPELINE_H_
