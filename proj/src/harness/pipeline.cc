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

#include "prsd/harness/pipeline.h"

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"
#include "prsd/diffusion/ddpm.h"
#include "prsd/errors.h"
#include "prsd/nn/checkpoint.h"
#include "prsd/nn/optim.h"
#include "prsd/prosody/predictor.h"

namespace prsd::harness {

namespace {

constexpr std::uint32_t kDiffusionTag = 0x64696666;
constexpr std::uint32_t kClassifierTag = 0x636c6173;
constexpr std::uint32_t kPitchTag = 0x70697463;
constexpr std::uint32_t kEnergyTag = 0x656e6572;
constexpr std::uint32_t kSampleTag = 0x736d706c;

constexpr double kGradClip = 1.0;

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void require(const std::filesystem::path& p, const char* stage, const char* producer) {
  if (!std::filesystem::exists(p)) {
    throw OrchestrationError(std::string(stage) + ": missing " + p.string() + " (run " +
                             producer + " first)");
  }
}

Corpus load_corpus(const OutputLayout& out, const char* stage) {
  require(out.corpus() / "manifest.csv", stage, "synthdata");
  return read_corpus(out.corpus());
}

FeatureSet load_features(const ExperimentConfig& cfg, const OutputLayout& out, const Corpus& c,
                         const char* stage) {
  require(out.features() / "features.prsd", stage, "extract");
  return read_features(out.features(), c, cfg);
}

diffusion::DenoiserConfig denoiser_config(const ExperimentConfig& cfg) {
  diffusion::DenoiserConfig d;
  d.n_mels = static_cast<std::size_t>(cfg.n_mels);
  d.speaker_dim = kSpeakerDim;
  d.content_dim = kContentDim;
  d.model_dim = static_cast<std::size_t>(cfg.model_dim);
  d.heads = static_cast<std::size_t>(cfg.heads);
  d.ffn_dim = static_cast<std::size_t>(cfg.ffn_dim);
  d.blocks = static_cast<std::size_t>(cfg.blocks);
  return d;
}

diffusion::ClassifierConfig classifier_config(const ExperimentConfig& cfg) {
  diffusion::ClassifierConfig c;
  c.data_dim = static_cast<std::size_t>(cfg.n_mels);
  c.num_classes = kNumTemplates;
  c.position_dim = 16;
  return c;
}

prosody::PredictorConfig predictor_config(const ExperimentConfig& cfg) {
  prosody::PredictorConfig p;
  p.speaker_dim = kSpeakerDim;
  p.emotion_dim = kEmotionDim;
  p.content_dim = kContentDim;
  p.use_emotion = cfg.use_emotion;
  return p;
}

std::vector<std::size_t> split_indices(const Corpus& c, bool test) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < c.clips.size(); ++i) {
    if (c.clips[i].test == test) out.push_back(i);
  }
  return out;
}

double cosine_lr(double base, int step, int steps) {
  return base * (0.1 + 0.45 * (1.0 + std::cos(M_PI * step / std::max(steps, 1))));
}

diffusion::NoiseSchedule make_schedule(const ExperimentConfig& cfg) {
  return diffusion::NoiseSchedule(cfg.diffusion_T, cfg.beta_1, cfg.beta_T);
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot open " + p.string() + " for writing");
  f << text;
  if (!f) throw FormatError("write failed for " + p.string());
}

}  // namespace

std::uint64_t stage_seed(const ExperimentConfig& cfg, std::uint32_t tag) {
  std::seed_seq seq{std::uint32_t(cfg.seed), std::uint32_t(cfg.seed >> 32), tag};
  std::uint32_t v[2];
  seq.generate(v, v + 2);
  return (std::uint64_t(v[0]) << 32) | v[1];
}

diffusion::ConditioningBundle clip_bundle(const ClipMeta& meta, const ClipFeatures& f) {
  diffusion::ConditioningBundle b;
  b.s = meta.s;
  b.c = meta.c;
  b.p = f.pitch.normalized;
  b.e = f.energy.energy;
  b.n_frames = meta.n_frames;
  return b;
}

prosody::ProsodyInputs clip_inputs(const ClipMeta& meta) {
  return {meta.s, meta.o, meta.c, meta.n_frames};
}

void stage_synthdata(const ExperimentConfig& cfg, const OutputLayout& out, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const Corpus corpus = generate_corpus(cfg);
  write_corpus(out.corpus(), corpus);
  log << "synthdata: " << corpus.clips.size() << " clips (" << elapsed(t0) << " s)\n";
}

void stage_extract(const ExperimentConfig& cfg, const OutputLayout& out, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const Corpus corpus = load_corpus(out, "extract");
  const FeatureSet fs = extract_features(corpus, cfg);
  write_features(out.features(), fs, corpus);
  nn::Rng rng(stage_seed(cfg, 0x72646572));
  MelPitchReader reader(static_cast<std::size_t>(cfg.n_mels), rng);
  const double loss = train_pitch_reader(reader, corpus, fs, cfg);
  nn::save_checkpoint(out.features() / "pitch_reader.prsd", reader);
  log << "extract: features for " << fs.clips.size() << " clips, pitch reader loss " << loss
      << " (" << elapsed(t0) << " s)\n";
}

void stage_train_diffusion(const ExperimentConfig& cfg, const OutputLayout& out,
                           std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const Corpus corpus = load_corpus(out, "train-diffusion");
  const FeatureSet fs = load_features(cfg, out, corpus, "train-diffusion");
  const auto train = split_indices(corpus, false);
  if (train.empty()) throw DatasetError("train-diffusion: no training clips");
  const auto schedule = make_schedule(cfg);

  std::vector<std::vector<double>> x0(corpus.clips.size());
  std::vector<diffusion::ConditioningBundle> bundles(corpus.clips.size());
  double ps = 0, pss = 0, es = 0, ess = 0, n = 0;
  for (auto i : train) {
    x0[i] = standardize(fs.clips[i].mel, fs);
    bundles[i] = clip_bundle(corpus.clips[i], fs.clips[i]);
    for (std::size_t t = 0; t < bundles[i].n_frames; ++t) {
      ps += bundles[i].p[t];
      pss += bundles[i].p[t] * bundles[i].p[t];
      es += bundles[i].e[t];
      ess += bundles[i].e[t] * bundles[i].e[t];
      ++n;
    }
  }
  const double p_mean = ps / n, e_mean = es / n;
  const double p_std = std::sqrt(std::max(pss / n - p_mean * p_mean, 1e-12));
  const double e_std = std::sqrt(std::max(ess / n - e_mean * e_mean, 1e-12));

  nn::Rng rng(stage_seed(cfg, kDiffusionTag));
  diffusion::DiffusionDenoiser model(denoiser_config(cfg), rng);
  model.set_schedule(schedule);
  model.set_prosody_stats(p_mean, p_std, e_mean, e_std);
  auto params = model.parameters();
  auto adam = nn::make_adam_state(params, cfg.diffusion_lr);
  const diffusion::TrainingOptions opts{cfg.dropout_prob, cfg.prosody_dropout_prob};
  std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
  double running = 0.0;
  for (int step = 0; step < cfg.diffusion_steps; ++step) {
    adam.learning_rate = cosine_lr(cfg.diffusion_lr, step, cfg.diffusion_steps);
    std::vector<double> batch_x;
    std::vector<diffusion::ConditioningBundle> batch_c;
    for (int b = 0; b < cfg.diffusion_batch; ++b) {
      const auto i = train[pick(rng)];
      batch_x.insert(batch_x.end(), x0[i].begin(), x0[i].end());
      batch_c.push_back(bundles[i]);
    }
    model.zero_grad();
    const double loss = diffusion::training_step(model, batch_x, batch_c, schedule, opts, rng, step);
    nn::clip_grad_norm(params, kGradClip);
    nn::adam_step(params, adam);
    running = step == 0 ? loss : 0.99 * running + 0.01 * loss;
  }
  std::filesystem::create_directories(out.checkpoints());
  nn::save_checkpoint(out.checkpoints() / "diffusion.prsd", model);
  log << "train-diffusion: denoiser loss " << running << " (" << elapsed(t0) << " s)\n";

  const auto t1 = std::chrono::steady_clock::now();
  nn::Rng crng(stage_seed(cfg, kClassifierTag));
  diffusion::FrameClassifier clf(classifier_config(cfg), crng);
  // Frame energy is a band-std weighted sum of standardized bands; keep CG off it.
  clf.set_invariant_direction(fs.band_std);
  auto cparams = clf.parameters();
  auto cadam = nn::make_adam_state(cparams, cfg.classifier_lr);
  const std::size_t F = corpus.clips[train[0]].n_frames, M = fs.band_mean.size();
  running = 0.0;
  for (int step = 0; step < cfg.classifier_steps; ++step) {
    cadam.learning_rate = cosine_lr(cfg.classifier_lr, step, cfg.classifier_steps);
    std::vector<double> batch_x;
    std::vector<int> labels;
    for (int b = 0; b < cfg.classifier_batch; ++b) {
      const auto i = train[pick(crng)];
      batch_x.insert(batch_x.end(), x0[i].begin(), x0[i].end());
      labels.push_back(corpus.clips[i].template_id);
    }
    const auto draw = diffusion::draw_training(std::size_t(cfg.classifier_batch), F * M, schedule,
                                               {0.0, 0.0}, crng);
    clf.zero_grad();
    auto loss = diffusion::classifier_loss(clf, batch_x, F, labels, draw, schedule);
    loss.backward();
    nn::clip_grad_norm(cparams, kGradClip);
    nn::adam_step(cparams, cadam);
    running = step == 0 ? loss.item() : 0.99 * running + 0.01 * loss.item();
  }
  nn::save_checkpoint(out.checkpoints() / "classifier.prsd", clf);
  log << "train-diffusion: classifier loss " << running << " (" << elapsed(t1) << " s)\n";
}

void stage_train_prosody(const ExperimentConfig& cfg, const OutputLayout& out, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const Corpus corpus = load_corpus(out, "train-prosody");
  const FeatureSet fs = load_features(cfg, out, corpus, "train-prosody");
  std::vector<prosody::ProsodyExample> pitch_data, energy_data;
  for (auto i : split_indices(corpus, false)) {
    const auto& m = corpus.clips[i];
    pitch_data.push_back({m.clip_id, clip_inputs(m), fs.clips[i].pitch.normalized});
    energy_data.push_back({m.clip_id, clip_inputs(m), fs.clips[i].energy.energy});
  }
  if (pitch_data.empty()) throw DatasetError("train-prosody: no training clips");
  std::filesystem::create_directories(out.checkpoints());
  for (auto kind : {prosody::ProsodyKind::kPitch, prosody::ProsodyKind::kEnergy}) {
    const bool pitch = kind == prosody::ProsodyKind::kPitch;
    const auto seed = stage_seed(cfg, pitch ? kPitchTag : kEnergyTag);
    nn::Rng rng(seed);
    prosody::ProsodyPredictor pred(predictor_config(cfg), rng);
    prosody::PredictorTrainOptions opts;
    opts.steps = cfg.predictor_steps;
    opts.batch = static_cast<std::size_t>(cfg.predictor_batch);
    opts.learning_rate = cfg.predictor_lr;
    opts.seed = seed;
    const auto history = prosody::train_predictor(pred, pitch ? pitch_data : energy_data, opts);
    nn::save_checkpoint(out.checkpoints() / (std::string(prosody::kind_name(kind)) + "_predictor.prsd"),
                        pred);
    log << "train-prosody: " << prosody::kind_name(kind) << " loss "
        << (history.empty() ? 0.0 : history.back()) << "\n";
  }
  log << "train-prosody: done (" << elapsed(t0) << " s)\n";
}

void stage_sample(const ExperimentConfig& cfg, const OutputLayout& out, std::ostream& log) {
  const Corpus corpus = load_corpus(out, "sample");
  const FeatureSet fs = load_features(cfg, out, corpus, "sample");
  const auto test = split_indices(corpus, true);
  if (test.empty()) throw DatasetError("sample: no test clips");
  const auto schedule = make_schedule(cfg);
  const auto mel_cfg = harness_mel_config(cfg);

  require(out.checkpoints() / "diffusion.prsd", "sample", "train-diffusion");
  require(out.checkpoints() / "classifier.prsd", "sample", "train-diffusion");
  nn::Rng init(0);
  diffusion::DiffusionDenoiser model(denoiser_config(cfg), init);
  model.set_schedule(schedule);
  nn::load_checkpoint(out.checkpoints() / "diffusion.prsd", model);
  diffusion::FrameClassifier clf(classifier_config(cfg), init);
  clf.set_invariant_direction(fs.band_std);
  nn::load_checkpoint(out.checkpoints() / "classifier.prsd", clf);

  diffusion::ClassifierTarget target{&clf, {}};
  std::vector<std::uint64_t> chain_ids;
  for (auto i : test) {
    target.labels.push_back(corpus.clips[i].template_id);
    chain_ids.push_back(i);
  }
  const diffusion::GuidanceConfig g{cfg.w1, cfg.w2, cfg.grad_normalize};
  const std::uint64_t seed = stage_seed(cfg, kSampleTag);

  for (auto source : cfg.prosody_sources) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<diffusion::ConditioningBundle> bundles;
    for (auto i : test) bundles.push_back(clip_bundle(corpus.clips[i], fs.clips[i]));
    if (source == ProsodySource::kNone) {
      for (auto& b : bundles) b.prosody_null = true;
    } else if (source == ProsodySource::kPredicted) {
      require(out.checkpoints() / "pitch_predictor.prsd", "sample", "train-prosody");
      require(out.checkpoints() / "energy_predictor.prsd", "sample", "train-prosody");
      prosody::ProsodyPredictor pitch(predictor_config(cfg), init);
      prosody::ProsodyPredictor energy(predictor_config(cfg), init);
      nn::load_checkpoint(out.checkpoints() / "pitch_predictor.prsd", pitch);
      nn::load_checkpoint(out.checkpoints() / "energy_predictor.prsd", energy);
      for (std::size_t k = 0; k < test.size(); ++k) {
        const auto pred = prosody::predict_prosody(pitch, energy, clip_inputs(corpus.clips[test[k]]));
        bundles[k].p = pred.pitch_hat;
        bundles[k].e = pred.energy_hat;
      }
    }
    const auto z = diffusion::ddpm_sample(model, bundles, g, &target, schedule, seed, chain_ids);
    std::vector<NamedArray> arrays;
    std::size_t offset = 0;
    for (std::size_t k = 0; k < test.size(); ++k) {
      const auto& m = corpus.clips[test[k]];
      const std::size_t n = m.n_frames * mel_cfg.n_mels;
      const auto mel = destandardize(std::span<const double>(z).subspan(offset, n), m.n_frames, fs,
                                     mel_cfg);
      offset += n;
      arrays.push_back({m.clip_id + ".mel", {m.n_frames, mel_cfg.n_mels}, mel.values});
      if (source != ProsodySource::kNone) {
        arrays.push_back({m.clip_id + ".p", {m.n_frames}, bundles[k].p});
        arrays.push_back({m.clip_id + ".e", {m.n_frames}, bundles[k].e});
      }
    }
    std::filesystem::create_directories(out.samples(source));
    write_container(out.samples(source) / "samples.prsd", arrays);
    log << "sample: " << source_name(source) << " " << test.size() << " clips (" << elapsed(t0)
        << " s)\n";
  }
}

metrics::Report stage_evaluate(const ExperimentConfig& cfg, const OutputLayout& out,
                               std::ostream& log) {
  const Corpus corpus = load_corpus(out, "evaluate");
  const FeatureSet fs = load_features(cfg, out, corpus, "evaluate");
  const auto mel_cfg = harness_mel_config(cfg);
  require(out.features() / "pitch_reader.prsd", "evaluate", "extract");
  nn::Rng init(0);
  MelPitchReader reader(mel_cfg.n_mels, init);
  nn::load_checkpoint(out.features() / "pitch_reader.prsd", reader);

  // Speaker global f0 over every ground-truth clip of the speaker.
  std::vector<double> global_f0(corpus.speakers.size());
  for (std::size_t k = 0; k < corpus.speakers.size(); ++k) {
    std::vector<prosody::PitchContour> clips;
    for (std::size_t i = 0; i < corpus.clips.size(); ++i) {
      if (corpus.clips[i].speaker == int(k)) clips.push_back(fs.clips[i].pitch);
    }
    global_f0[k] = metrics::speaker_global_f0(clips);
  }

  std::vector<metrics::SystemRecords> systems;
  std::size_t pairs = 0;
  for (auto source : cfg.prosody_sources) {
    const auto path = out.samples(source) / "samples.prsd";
    if (!std::filesystem::exists(path)) {
      log << "evaluate: no samples for source " << source_name(source) << ", skipped\n";
      continue;
    }
    const ArrayBundle samples(read_container(path));
    metrics::SystemRecords sys{source_name(source), {}};
    for (std::size_t i = 0; i < corpus.clips.size(); ++i) {
      const auto& m = corpus.clips[i];
      if (!samples.contains(m.clip_id + ".mel")) continue;
      const auto& a = samples.get(m.clip_id + ".mel");
      metrics::ClipPair pair;
      pair.clip_id = m.clip_id;
      pair.synth_mel.values = a.values;
      pair.synth_mel.n_frames = a.shape.at(0);
      pair.synth_mel.n_mels = a.shape.at(1);
      pair.synth_mel.hop_length = mel_cfg.hop_length;
      pair.synth_mel.sample_rate = mel_cfg.sample_rate;
      pair.synth_pitch = reader.read(standardize(pair.synth_mel, fs), pair.synth_mel.n_frames);
      pair.synth_energy = prosody::extract_energy(pair.synth_mel);
      pair.ref_mel = fs.clips[i].mel;
      pair.ref_pitch = fs.clips[i].pitch;
      pair.ref_energy = fs.clips[i].energy;
      pair.speaker_global_f0 = global_f0[m.speaker];
      sys.clips.push_back(metrics::evaluate_pair(pair));
      ++pairs;
    }
    systems.push_back(std::move(sys));
  }
  if (pairs == 0) {
    throw OrchestrationError("evaluate: no pairs of generated and reference clips found under " +
                             (out.root / "samples").string());
  }
  std::vector<std::pair<std::string, std::string>> comparisons;
  for (std::size_t a = 0; a < systems.size(); ++a) {
    for (std::size_t b = a + 1; b < systems.size(); ++b) {
      comparisons.emplace_back(systems[a].system, systems[b].system);
    }
  }
  metrics::Report report = metrics::build_report(std::move(systems), comparisons);

  std::filesystem::create_directories(out.reports());
  write_text(out.reports() / "metrics.csv", metrics::metrics_csv(report));
  auto summary = nlohmann::json::parse(metrics::summary_json(report));
  for (const auto& [key, value] : config_entries(cfg)) {
    // Numbers and booleans keep their JSON type; lists stay strings.
    auto parsed = nlohmann::json::parse(value, nullptr, false);
    summary["config"][key] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
  }
  write_text(out.reports() / "summary.json", summary.dump(2) + "\n");
  write_text(out.reports() / "config_echo.txt", echo_config(cfg));
  for (const auto& [system, by_metric] : report.summaries) {
    log << "evaluate: " << system;
    for (const char* metric : metrics::kMetricNames) log << " " << metric << "=" << by_metric.at(metric).mean;
    log << "\n";
  }
  return report;
}

metrics::Report run_experiment(const ExperimentConfig& cfg, const OutputLayout& out,
                               std::ostream& log) {
  validate(cfg);
  stage_synthdata(cfg, out, log);
  stage_extract(cfg, out, log);
  stage_train_diffusion(cfg, out, log);
  bool needs_predictor = false;
  for (auto s : cfg.prosody_sources) needs_predictor |= s == ProsodySource::kPredicted;
  if (needs_predictor) stage_train_prosody(cfg, out, log);
  stage_sample(cfg, out, log);
  return stage_evaluate(cfg, out, log);
}

}  // namespace prsd::harness
