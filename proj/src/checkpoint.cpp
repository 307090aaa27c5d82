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

#include "mantra/checkpoint.hpp"

#include <string>
#include <utility>

#include "mantra/errors.hpp"

namespace mantra::io {

Json to_json(const ModelConfig& c) {
  Json j;
  j["d_model"] = c.d_model;
  j["n_heads"] = c.n_heads;
  j["n_layers"] = c.n_layers;
  j["d_ff"] = c.d_ff;
  j["mlp_hidden"] = c.mlp_hidden;
  j["n_modes"] = c.n_modes;
  j["t_obs"] = c.t_obs;
  j["t_pred"] = c.t_pred;
  j["t_change"] = c.t_change;
  j["fps"] = c.fps;
  j["n_features"] = c.n_features;
  j["conditioning"] = c.conditioning == DecoderConditioning::kManoeuvre ? "manoeuvre" : "mode";
  j["step_scale_lon"] = c.step_scale_lon;
  j["step_scale_lat"] = c.step_scale_lat;
  j["pos_scale_lon"] = c.pos_scale_lon;
  j["pos_scale_lat"] = c.pos_scale_lat;
  j["type_prior"] = c.type_prior;
  return j;
}

ModelConfig model_config_from_json(const Json& j) {
  try {
    ModelConfig c;
    c.d_model = j.at("d_model").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.n_layers = j.at("n_layers").get<int>();
    c.d_ff = j.at("d_ff").get<int>();
    c.mlp_hidden = j.at("mlp_hidden").get<int>();
    c.n_modes = j.at("n_modes").get<int>();
    c.t_obs = j.at("t_obs").get<int>();
    c.t_pred = j.at("t_pred").get<int>();
    c.t_change = j.at("t_change").get<int>();
    c.fps = j.at("fps").get<int>();
    c.n_features = j.at("n_features").get<int>();
    const std::string cond = j.at("conditioning").get<std::string>();
    if (cond == "manoeuvre") {
      c.conditioning = DecoderConditioning::kManoeuvre;
    } else if (cond == "mode") {
      c.conditioning = DecoderConditioning::kMode;
    } else {
      throw ConfigError("unknown decoder conditioning '" + cond + "'");
    }
    c.step_scale_lon = j.at("step_scale_lon").get<double>();
    c.step_scale_lat = j.at("step_scale_lat").get<double>();
    c.pos_scale_lon = j.at("pos_scale_lon").get<double>();
    c.pos_scale_lat = j.at("pos_scale_lat").get<double>();
    c.type_prior = j.value("type_prior", 0.0);
    c.validate();
    return c;
  } catch (const Json::exception& e) {
    throw DataError(std::string("model config: ") + e.what());
  }
}

Json checkpoint_to_json(const Model& model, const Json& extra) {
  Json j;
  j["format"] = "mantra-checkpoint";
  j["version"] = kCheckpointVersion;
  j["model_config"] = to_json(model.config());
  j["feature_stats"] = {{"mean", model.feature_stats().mean},
                        {"stddev", model.feature_stats().stddev}};
  Json params = Json::array();
  for (const Parameter& p : model.parameters()) {
    params.push_back({{"name", p.name},
                      {"shape", {p.value.rows(), p.value.cols()}},
                      {"data", p.value.storage()}});
  }
  j["parameters"] = std::move(params);
  if (!extra.is_null()) j["run_config"] = extra;
  return j;
}

Model model_from_checkpoint(const Json& j) {
  try {
    if (j.at("format").get<std::string>() != "mantra-checkpoint")
      throw DataError("not a model checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw DataError("unsupported checkpoint version " + std::to_string(version));
    const ModelConfig cfg = model_config_from_json(j.at("model_config"));
    FeatureStats stats;
    stats.mean = j.at("feature_stats").at("mean").get<std::vector<double>>();
    stats.stddev = j.at("feature_stats").at("stddev").get<std::vector<double>>();
    std::vector<Parameter> params;
    for (const Json& p : j.at("parameters")) {
      const auto shape = p.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2) throw DataError("parameter shape must have two entries");
      const auto data = p.at("data").get<std::vector<double>>();
      if (data.size() != shape[0] * shape[1])
        throw DataError("parameter data does not match its shape");
      Parameter param{p.at("name").get<std::string>(), Matrix(shape[0], shape[1])};
      std::copy(data.begin(), data.end(), param.value.data().begin());
      params.push_back(std::move(param));
    }
    try {
      return Model(cfg, std::move(params), std::move(stats));
    } catch (const ConfigError& e) {
      throw DataError(e.what());
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const Json& extra) {
  write_file(path, checkpoint_to_json(model, extra).dump() + "\n");
}

Model load_checkpoint(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return model_from_checkpoint(j);
}

}  // namespace mantra::io
