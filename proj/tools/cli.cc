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

#include "prsd/harness/cli.h"

#include <CLI11.hpp>
#include <functional>
#include <map>
#include <optional>

#include "prsd/errors.h"
#include "prsd/harness/pipeline.h"

namespace prsd::harness {

namespace {

struct CommonArgs {
  std::string config;
  std::string out = "prsd_out";
  std::optional<std::uint64_t> seed;
};

using Stage = std::function<void(const ExperimentConfig&, const OutputLayout&, std::ostream&)>;

const std::vector<std::pair<std::string, std::pair<std::string, Stage>>>& stages() {
  static const std::vector<std::pair<std::string, std::pair<std::string, Stage>>> table = {
      {"synthdata", {"generate the synthetic corpus into corpus/", stage_synthdata}},
      {"extract", {"compute mels, pitch and energy into features/ and fit the pitch reader",
                   stage_extract}},
      {"train-diffusion", {"train the denoiser and the noisy content classifier",
                           stage_train_diffusion}},
      {"train-prosody", {"train the pitch and energy predictors", stage_train_prosody}},
      {"sample", {"sample test clips for each configured prosody source", stage_sample}},
      {"evaluate", {"score samples against ground truth into reports/",
                    [](const ExperimentConfig& c, const OutputLayout& o, std::ostream& l) {
                      stage_evaluate(c, o, l);
                    }}},
      {"experiment", {"run every stage in order",
                      [](const ExperimentConfig& c, const OutputLayout& o, std::ostream& l) {
                        run_experiment(c, o, l);
                      }}},
  };
  return table;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Prosody-conditioned diffusion harness on a synthetic speech corpus", "prsd"};
  app.require_subcommand(1, 1);
  CommonArgs args;
  std::map<CLI::App*, const Stage*> by_app;
  for (const auto& [name, entry] : stages()) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", args.config, "key = value config file (defaults if omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", args.out, "output directory")->capture_default_str();
    sub->add_option("--seed", args.seed, "overrides the config seed");
    by_app[sub] = &entry.second;
  }

  if (argc <= 1) {
    err << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    err << app.help();
    return 2;
  }

  ExperimentConfig cfg;
  try {
    if (!args.config.empty()) cfg = load_config(args.config);
    if (args.seed) cfg.seed = *args.seed;
    validate(cfg);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  try {
    (*by_app.at(chosen))(cfg, OutputLayout{args.out}, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace prsd::harness
