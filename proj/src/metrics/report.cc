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

#include "prsd/metrics/report.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include "json.hpp"

#include "prsd/errors.h"

namespace prsd::metrics {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw FormatError("write failed for " + path.string());
}

}  // namespace

ClipRecord evaluate_pair(const ClipPair& pair) {
  ClipRecord r;
  r.clip_id = pair.clip_id;
  r.values["gf0"] = global_f0_dev(pair.synth_pitch, pair.speaker_global_f0);
  r.values["lf0"] = local_f0_dev(pair.synth_pitch, pair.ref_pitch);
  r.values["ec"] = energy_consistency(pair.synth_energy, pair.ref_energy);
  try {
    r.values["resem"] = resem(pair.synth_mel, pair.ref_mel);
  } catch (const TooShortError&) {
    r.values["resem"] = std::nullopt;
  }
  try {
    r.values["resem_tv"] = resem_tv(pair.synth_mel, pair.ref_mel);
  } catch (const TooShortError&) {
    r.values["resem_tv"] = std::nullopt;
  }
  return r;
}

Report build_report(std::vector<SystemRecords> systems,
                    const std::vector<std::pair<std::string, std::string>>& comparisons) {
  Report rep;
  for (auto& sys : systems) {
    std::sort(sys.clips.begin(), sys.clips.end(),
              [](const ClipRecord& a, const ClipRecord& b) { return a.clip_id < b.clip_id; });
  }
  std::map<std::string, std::map<std::string, const ClipRecord*>> index;
  for (const auto& sys : systems) {
    if (rep.summaries.count(sys.system)) {
      throw ParameterError("system '" + sys.system + "' listed twice");
    }
    auto& by_clip = index[sys.system];
    for (const char* metric : kMetricNames) {
      MetricSummary s;
      double sum = 0.0;
      for (const auto& clip : sys.clips) {
        auto it = clip.values.find(metric);
        if (it != clip.values.end() && it->second) {
          sum += *it->second;
          ++s.n_defined;
        } else {
          ++s.n_undefined;
        }
      }
      s.mean = s.n_defined ? sum / s.n_defined : std::numeric_limits<double>::quiet_NaN();
      rep.summaries[sys.system][metric] = s;
    }
    for (const auto& clip : sys.clips) {
      if (!by_clip.emplace(clip.clip_id, &clip).second) {
        throw ParameterError("clip '" + clip.clip_id + "' appears twice in system '" +
                             sys.system + "'");
      }
    }
  }
  for (const auto& [a, b] : comparisons) {
    if (!index.count(a) || !index.count(b)) {
      throw ParameterError("comparison names unknown system '" + (index.count(a) ? b : a) + "'");
    }
    for (const char* metric : kMetricNames) {
      std::vector<double> va, vb;
      for (const auto& [id, ca] : index[a]) {
        auto jt = index[b].find(id);
        if (jt == index[b].end()) continue;
        const auto& xa = ca->values.at(metric);
        const auto& xb = jt->second->values.at(metric);
        if (!xa || !xb) continue;
        va.push_back(*xa);
        vb.push_back(*xb);
      }
      Comparison c{metric, a, b, std::nullopt};
      if (va.size() >= 2) c.test = paired_t_test(va, vb);
      rep.comparisons.push_back(std::move(c));
    }
  }
  rep.systems = std::move(systems);
  return rep;
}

std::string metrics_csv(const Report& report) {
  std::string out = "clip_id,metric,system,value\n";
  for (const auto& sys : report.systems) {
    for (const auto& clip : sys.clips) {
      for (const char* metric : kMetricNames) {
        auto it = clip.values.find(metric);
        const double v = (it != clip.values.end() && it->second)
                             ? *it->second
                             : std::numeric_limits<double>::quiet_NaN();
        out += clip.clip_id + "," + metric + "," + sys.system + "," + fmt(v) + "\n";
      }
    }
  }
  return out;
}

std::string summary_json(const Report& report) {
  nlohmann::json j;
  for (const auto& [system, metrics] : report.summaries) {
    for (const auto& [metric, s] : metrics) {
      j["systems"][system][metric] = {{"mean", number_or_null(s.mean)},
                                      {"n_defined", s.n_defined},
                                      {"n_undefined", s.n_undefined}};
    }
  }
  j["comparisons"] = nlohmann::json::array();
  for (const auto& c : report.comparisons) {
    nlohmann::json e = {{"metric", c.metric}, {"system_a", c.system_a}, {"system_b", c.system_b}};
    if (c.test) {
      e["n"] = c.test->n;
      e["mean_difference"] = number_or_null(c.test->mean_difference);
      e["t"] = number_or_null(c.test->t);
      e["p"] = number_or_null(c.test->p);
    } else {
      e["n"] = 0;
      e["p"] = nullptr;
    }
    j["comparisons"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

void write_report(const std::filesystem::path& dir, const Report& report) {
  std::filesystem::create_directories(dir);
  write_text(dir / "metrics.csv", metrics_csv(report));
  write_text(dir / "summary.json", summary_json(report));
}

}  // namespace prsd::metrics
