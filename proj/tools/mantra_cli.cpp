/* Copyright 2026 The Mantra Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// mantra: command-line front end of the prediction and planning pipeline.
//
//   mantra gen-data --out data/
//   mantra train    --data data/ --out run/
//   mantra eval     --model run/model.json --data data/ --out eval/
//   mantra plan     --model run/model.json --data data/ --scene 0 --out plan/
//   mantra plot     --plan plan/plan.json --out fig/
//
// Every subcommand accepts --config FILE and repeated --set section.key=value.
// Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numerical
// failure, 1 anything else. Errors are reported as one JSON line on stderr.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mantra/config.hpp"
#include "mantra/errors.hpp"
#include "mantra/io.hpp"
#include "mantra/pipeline.hpp"

namespace {

using mantra::RunConfig;
namespace pipeline = mantra::pipeline;

int report_error(const char* kind, const std::string& message, int code) {
  mantra::io::Json j{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  std::cerr << j.dump() << std::endl;
  return code;
}

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool needs_out = true) {
  cmd->add_option("--config", opt.config_file, "INI run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--set", opt.overrides, "override, e.g. train.epochs=5 (repeatable)");
  if (needs_out) cmd->add_option("--out", opt.out, "output directory")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Manoeuvre-conditioned multimodal trajectory prediction and contingency planning"};
  app.require_subcommand(1);
  CommonOptions common;

  auto* gen = app.add_subcommand("gen-data", "generate synthetic highway scenes and samples");
  add_common(gen, common);

  std::string tracks, meta;
  auto* lbl = app.add_subcommand("label", "auto-label the tracks of one recording");
  add_common(lbl, common);
  lbl->add_option("--tracks", tracks, "track CSV")->required()->check(CLI::ExistingFile);
  lbl->add_option("--meta", meta, "scene metadata JSON")->required()->check(CLI::ExistingFile);

  std::string data_dir, model_path;
  auto* trn = app.add_subcommand("train", "train a model on the training split");
  add_common(trn, common);
  trn->add_option("--data", data_dir, "data directory from gen-data")->required();

  auto* evl = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  add_common(evl, common);
  evl->add_option("--model", model_path, "checkpoint")->required();
  evl->add_option("--data", data_dir, "data directory from gen-data")->required();

  pipeline::PlanRequest req;
  auto* pln = app.add_subcommand("plan", "contingency plan for an ego vehicle in one scene");
  add_common(pln, common);
  pln->add_option("--model", model_path, "checkpoint")->required();
  pln->add_option("--data", data_dir, "data directory from gen-data")->required();
  pln->add_option("--scene", req.scene_id, "scene id")->check(CLI::NonNegativeNumber);
  pln->add_option("--ego", req.ego_id, "ego vehicle id")->check(CLI::NonNegativeNumber);
  pln->add_option("--frame", req.frame, "planning frame (default: 1 s after the first full window)");

  std::vector<std::string> plan_files;
  auto* plt = app.add_subcommand("plot", "render plan records as SVG");
  add_common(plt, common);
  plt->add_option("--plan", plan_files, "plan.json files")->required()->check(CLI::ExistingFile);

  auto* show = app.add_subcommand("config", "print the resolved configuration as INI");
  add_common(show, common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("UsageError", e.what(), 2);
  }

  try {
    const RunConfig cfg = mantra::resolve_config(common.config_file, common.overrides);
    if (*gen) {
      pipeline::gen_data(cfg, common.out);
    } else if (*lbl) {
      pipeline::label(cfg, tracks, meta, common.out);
    } else if (*trn) {
      pipeline::train(cfg, data_dir, common.out);
    } else if (*evl) {
      pipeline::eval(cfg, model_path, data_dir, common.out);
    } else if (*pln) {
      pipeline::plan(cfg, model_path, data_dir, req, common.out);
    } else if (*plt) {
      std::vector<std::filesystem::path> paths(plan_files.begin(), plan_files.end());
      pipeline::plot(paths, common.out);
    } else if (*show) {
      std::string section;
      for (const auto& [key, value] : mantra::settings_of(cfg)) {
        const std::string s = key.substr(0, key.find('.'));
        if (s != section) {
          std::cout << (section.empty() ? "" : "\n") << "[" << s << "]\n";
          section = s;
        }
        std::cout << key.substr(key.find('.') + 1) << " = " << value << "\n";
      }
    }
  } catch (const mantra::ConfigError& e) {
    return report_error("ConfigError", e.what(), 2);
  } catch (const mantra::DataError& e) {
    return report_error("DataError", e.what(), 3);
  } catch (const mantra::NumericalError& e) {
    return report_error("NumericalError", e.what(), 4);
  } catch (const std::exception& e) {
    return report_error("InternalError", e.what(), 1);
  }
  return EXIT_SUCCESS;
}
