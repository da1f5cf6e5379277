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

#include "prsd/harness/config.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "prsd/errors.h"

namespace prsd::harness {

const char* source_name(ProsodySource s) {
  switch (s) {
    case ProsodySource::kNone: return "none";
    case ProsodySource::kPredicted: return "predicted";
    case ProsodySource::kOracle: return "oracle";
  }
  return "?";
}

ProsodySource parse_source(const std::string& name) {
  if (name == "none") return ProsodySource::kNone;
  if (name == "predicted") return ProsodySource::kPredicted;
  if (name == "oracle") return ProsodySource::kOracle;
  throw ConfigError("unknown prosody source '" + name + "' (expected none, predicted or oracle)");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
T parse_number(const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("bad numeric value '" + v + "'");
  return out;
}

double parse_double(const std::string& v) {
  // from_chars for double is not available in every libstdc++ we target.
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value '" + v + "'");
  }
  if (used != v.size()) throw ConfigError("bad numeric value '" + v + "'");
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("bad boolean value '" + v + "' (expected true or false)");
}

struct Key {
  const char* name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define PRSD_INT_KEY(field)                                                              \
  Key {                                                                                  \
    #field, [](ExperimentConfig& c, const std::string& v) { c.field = parse_number<int>(v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.field); }                \
  }
#define PRSD_DOUBLE_KEY(field)                                                        \
  Key {                                                                               \
    #field, [](ExperimentConfig& c, const std::string& v) { c.field = parse_double(v); }, \
        [](const ExperimentConfig& c) { return format_double(c.field); }              \
  }
#define PRSD_BOOL_KEY(field)                                                        \
  Key {                                                                             \
    #field, [](ExperimentConfig& c, const std::string& v) { c.field = parse_bool(v); }, \
        [](const ExperimentConfig& c) { return std::string(c.field ? "true" : "false"); } \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      Key{"seed",
          [](ExperimentConfig& c, const std::string& v) {
            c.seed = parse_number<std::uint64_t>(v);
          },
          [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
      PRSD_INT_KEY(n_speakers),
      PRSD_INT_KEY(clips_per_speaker),
      PRSD_INT_KEY(test_clips_per_speaker),
      PRSD_DOUBLE_KEY(clip_seconds),
      PRSD_DOUBLE_KEY(noise_level),
      PRSD_INT_KEY(n_mels),
      PRSD_INT_KEY(diffusion_T),
      PRSD_DOUBLE_KEY(beta_1),
      PRSD_DOUBLE_KEY(beta_T),
      PRSD_DOUBLE_KEY(w1),
      PRSD_DOUBLE_KEY(w2),
      PRSD_BOOL_KEY(grad_normalize),
      PRSD_INT_KEY(model_dim),
      PRSD_INT_KEY(heads),
      PRSD_INT_KEY(ffn_dim),
      PRSD_INT_KEY(blocks),
      PRSD_INT_KEY(diffusion_steps),
      PRSD_INT_KEY(diffusion_batch),
      PRSD_DOUBLE_KEY(diffusion_lr),
      PRSD_DOUBLE_KEY(dropout_prob),
      PRSD_DOUBLE_KEY(prosody_dropout_prob),
      PRSD_INT_KEY(classifier_steps),
      PRSD_INT_KEY(classifier_batch),
      PRSD_DOUBLE_KEY(classifier_lr),
      PRSD_INT_KEY(predictor_steps),
      PRSD_INT_KEY(predictor_batch),
      PRSD_DOUBLE_KEY(predictor_lr),
      PRSD_BOOL_KEY(use_emotion),
      PRSD_INT_KEY(reader_steps),
      PRSD_INT_KEY(reader_batch),
      PRSD_DOUBLE_KEY(reader_lr),
      PRSD_DOUBLE_KEY(reader_noise),
      PRSD_DOUBLE_KEY(reader_band_offset),
      PRSD_DOUBLE_KEY(reader_frame_gain),
      Key{"prosody_sources",
          [](ExperimentConfig& c, const std::string& v) {
            c.prosody_sources.clear();
            std::stringstream ss(v);
            std::string item;
            while (std::getline(ss, item, ',')) {
              const auto src = parse_source(trim(item));
              for (auto existing : c.prosody_sources) {
                if (existing == src) throw ConfigError("prosody source listed twice");
              }
              c.prosody_sources.push_back(src);
            }
          },
          [](const ExperimentConfig& c) {
            std::string out;
            for (auto s : c.prosody_sources) out += (out.empty() ? "" : ",") + std::string(source_name(s));
            return out;
          }},
  };
  return table;
}

#undef PRSD_INT_KEY
#undef PRSD_DOUBLE_KEY
#undef PRSD_BOOL_KEY

}  // namespace

void validate(const ExperimentConfig& c) {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  need(c.n_speakers >= 1, "n_speakers must be at least 1");
  need(c.clips_per_speaker >= 1, "clips_per_speaker must be at least 1");
  need(c.test_clips_per_speaker >= 0 && c.test_clips_per_speaker < c.clips_per_speaker,
       "test_clips_per_speaker must be in [0, clips_per_speaker)");
  need(c.clip_seconds >= 0.5, "clip_seconds must be at least 0.5");
  need(c.noise_level >= 0.0, "noise_level must be non-negative");
  need(c.n_mels >= 2, "n_mels must be at least 2");
  need(c.diffusion_T >= 1, "diffusion_T must be at least 1");
  need(c.beta_1 > 0.0 && c.beta_1 <= c.beta_T && c.beta_T < 1.0,
       "need 0 < beta_1 <= beta_T < 1");
  need(c.w1 >= 0.0 && c.w2 >= 0.0, "guidance weights must be non-negative");
  need(c.model_dim >= 1 && c.heads >= 1 && c.model_dim % c.heads == 0,
       "model_dim must be a positive multiple of heads");
  need(c.ffn_dim >= 1 && c.blocks >= 0, "ffn_dim must be positive and blocks non-negative");
  need(c.diffusion_steps >= 0 && c.classifier_steps >= 0 && c.predictor_steps >= 0 &&
           c.reader_steps >= 0,
       "step counts must be non-negative");
  need(c.diffusion_batch >= 1 && c.classifier_batch >= 1 && c.predictor_batch >= 1 &&
           c.reader_batch >= 1,
       "batch sizes must be at least 1");
  need(c.diffusion_lr > 0 && c.classifier_lr > 0 && c.predictor_lr > 0 && c.reader_lr > 0,
       "learning rates must be positive");
  need(c.dropout_prob >= 0 && c.dropout_prob <= 1 && c.prosody_dropout_prob >= 0 &&
           c.prosody_dropout_prob <= 1,
       "dropout probabilities must be in [0, 1]");
  need(c.reader_noise >= 0.0 && c.reader_band_offset >= 0.0 && c.reader_frame_gain >= 0.0,
       "reader augmentation scales must be non-negative");
  need(!c.prosody_sources.empty(), "prosody_sources must name at least one source");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::stringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const Key* k = nullptr;
    for (const auto& cand : keys()) {
      if (key == cand.name) k = &cand;
    }
    if (!k) throw ConfigError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + "key '" + key + "' set twice");
    if (value.empty()) throw ConfigError(where + "empty value for '" + key + "'");
    try {
      k->set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + key + ": " + e.what());
    }
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : keys()) out.emplace_back(k.name, k.get(cfg));
  return out;
}

std::string echo_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : config_entries(cfg)) out += k + " = " + v + "\n";
  return out;
}

}  // namespace prsd::harness
