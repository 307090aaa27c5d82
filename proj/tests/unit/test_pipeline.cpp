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

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "mantra/checkpoint.hpp"
#include "mantra/errors.hpp"
#include "mantra/pipeline.hpp"

namespace mantra {
namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("mantra_test_" + name)) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

RunConfig small_config() {
  RunConfig cfg;
  cfg.seed = 3;
  cfg.scenes = 5;
  cfg.balance_cap = 20;
  cfg.model.d_model = 16;
  cfg.model.n_heads = 2;
  cfg.model.d_ff = 16;
  cfg.model.mlp_hidden = 16;
  cfg.finalise();
  return cfg;
}

TEST_CASE("an untrained seeded model yields a finite report") {
  const TempDir tmp("smoke");
  const RunConfig cfg = small_config();
  pipeline::gen_data(cfg, tmp.path / "data");
  REQUIRE(fs::exists(tmp.path / "data" / "manifest.json"));
  REQUIRE(fs::exists(tmp.path / "data" / "scenes" / "scene_0001.meta.json"));

  const Model model(cfg.model, 5);
  io::save_checkpoint(tmp.path / "model.json", model, pipeline::artifact_meta(cfg));
  const MetricsReport r = pipeline::eval(cfg, tmp.path / "model.json", tmp.path / "data",
                                         tmp.path / "eval");
  CHECK(r.samples > 0);
  for (const auto& [k, values] : r.min_rmse)
    for (double v : values) CHECK(std::isfinite(v));
  for (double v : r.nll) CHECK(std::isfinite(v));
  CHECK(fs::exists(tmp.path / "eval" / "report.json"));
  CHECK(fs::exists(tmp.path / "eval" / "report.txt"));

  // Asking for more modes than the checkpoint has is a configuration error.
  RunConfig wide = cfg;
  wide.model.n_modes = 4;
  wide.eval_ks = {1, 4};
  wide.finalise();
  CHECK_THROWS_AS(pipeline::eval(wide, tmp.path / "model.json", tmp.path / "data",
                                 tmp.path / "eval2"),
                  ConfigError);
}

TEST_CASE("missing or malformed data is a data error") {
  const TempDir tmp("bad_data");
  CHECK_THROWS_AS(pipeline::load_data(tmp.path / "absent"), DataError);
  fs::create_directories(tmp.path / "d");
  io::write_file(tmp.path / "d" / "manifest.json", "{not json");
  CHECK_THROWS_AS(pipeline::load_data(tmp.path / "d"), DataError);
}

TEST_CASE("plot rejects an empty input list") {
  CHECK_THROWS_AS(pipeline::plot({}, fs::temp_directory_path()), ConfigError);
}

}  // namespace
}  // namespace mantra
