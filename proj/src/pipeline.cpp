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

#include "mantra/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mantra/checkpoint.hpp"
#include "mantra/errors.hpp"
#include "mantra/features.hpp"
#include "mantra/plot.hpp"
#include "mantra/training.hpp"

namespace mantra::pipeline {
namespace {

std::string scene_stem(int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%04d", id);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_json(const fs::path& path, const io::Json& j) { io::write_file(path, j.dump(2) + "\n"); }

io::Json read_json(const fs::path& path) {
  const std::string text = io::read_file(path);
  try {
    return io::Json::parse(text);
  } catch (const io::Json::exception& e) {
    throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

Scene read_scene(const fs::path& csv, const fs::path& meta_path) {
  const io::Json meta = read_json(meta_path);
  try {
    const LaneGeometry geometry = io::lane_geometry_from_json(meta.at("geometry"));
    std::ifstream in(csv);
    if (!in) throw DataError("cannot open '" + csv.string() + "'");
    return io::read_tracks_csv(in, geometry, meta.at("fps").get<int>(), meta.at("scene_id").get<int>());
  } catch (const io::Json::exception& e) {
    throw DataError("'" + meta_path.string() + "': " + e.what());
  }
}

// A stored model must share the horizon settings the data was built with.
void check_compatible(const ModelConfig& m, const RunConfig& cfg) {
  if (m.t_obs != cfg.dataset.t_obs || m.t_pred != cfg.dataset.horizon.t_pred ||
      m.t_change != cfg.dataset.horizon.t_change || m.fps != cfg.generator.fps)
    throw ConfigError("checkpoint horizon settings differ from the run configuration");
}

}  // namespace

io::Json artifact_meta(const RunConfig& cfg) {
  return io::Json{{"run_config", to_json(cfg)}, {"seed", cfg.seed}};
}

std::vector<Scene> generate_scenes(const RunConfig& cfg) {
  std::vector<Scene> scenes(static_cast<std::size_t>(cfg.scenes));
  const std::uint64_t root = stage_seed(cfg.seed, "scenes");
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < cfg.scenes; ++i)
    scenes[static_cast<std::size_t>(i)] =
        generate_scene(cfg.generator, stage_seed(root, std::to_string(i)), i);
  return scenes;
}

std::vector<DatasetSample> make_samples(const RunConfig& cfg, std::span<const Scene> scenes) {
  DatasetBuild build = build_dataset(scenes, cfg.dataset);
  std::vector<DatasetSample> samples =
      balance_dataset(std::move(build.samples), stage_seed(cfg.seed, "balance"), cfg.balance_cap);
  assign_split_by_scene(samples, cfg.test_fraction, stage_seed(cfg.seed, "split"));
  return samples;
}

void gen_data(const RunConfig& cfg, const fs::path& out_dir) {
  const std::vector<Scene> scenes = generate_scenes(cfg);
  const std::vector<DatasetSample> samples = make_samples(cfg, scenes);

  ensure_dir(out_dir / "scenes");
  io::Json scene_list = io::Json::array();
  for (const Scene& s : scenes) {
    const std::string stem = scene_stem(s.id);
    std::ostringstream csv;
    io::write_tracks_csv(csv, s);
    io::write_file(out_dir / "scenes" / (stem + ".csv"), csv.str());
    io::Json meta = artifact_meta(cfg);
    meta["scene_id"] = s.id;
    meta["fps"] = s.fps;
    meta["duration"] = s.duration;
    meta["geometry"] = io::to_json(s.geometry);
    write_json(out_dir / "scenes" / (stem + ".meta.json"), meta);
    scene_list.push_back("scenes/" + stem);
  }

  std::ostringstream jsonl;
  io::write_samples(jsonl, samples);
  io::write_file(out_dir / "samples.jsonl", jsonl.str());

  io::Json counts = io::Json::object();
  int n_train = 0;
  for (ManoeuvreType t : kAllManoeuvreTypes) counts[std::string(manoeuvre_name(t))] = 0;
  for (const DatasetSample& s : samples) {
    auto& c = counts[std::string(manoeuvre_name(dominant_manoeuvre(s.future_labels)))];
    c = c.get<int>() + 1;
    n_train += s.split == "train";
  }
  io::Json manifest = artifact_meta(cfg);
  manifest["format"] = "mantra-data";
  manifest["scenes"] = scene_list;
  manifest["samples"] = {{"file", "samples.jsonl"},
                         {"total", samples.size()},
                         {"train", n_train},
                         {"test", static_cast<int>(samples.size()) - n_train},
                         {"by_dominant_manoeuvre", counts}};
  write_json(out_dir / "manifest.json", manifest);
}

DataSet load_data(const fs::path& data_dir) {
  const io::Json manifest = read_json(data_dir / "manifest.json");
  DataSet data;
  try {
    if (manifest.at("format") != "mantra-data")
      throw DataError("'" + data_dir.string() + "' is not a data directory");
    for (const auto& stem : manifest.at("scenes")) {
      const fs::path base = data_dir / stem.get<std::string>();
      Scene s = read_scene(fs::path(base.string() + ".csv"), fs::path(base.string() + ".meta.json"));
      if (s.id != static_cast<int>(data.scenes.size()))
        throw DataError("scene ids in the manifest are not consecutive");
      data.scenes.push_back(std::move(s));
    }
    std::ifstream in(data_dir / manifest.at("samples").at("file").get<std::string>());
    if (!in) throw DataError("cannot open the sample file of '" + data_dir.string() + "'");
    data.samples = io::read_samples(in);
  } catch (const io::Json::exception& e) {
    throw DataError("bad manifest in '" + data_dir.string() + "': " + e.what());
  }
  for (const DatasetSample& s : data.samples)
    if (s.scene_id < 0 || s.scene_id >= static_cast<int>(data.scenes.size()))
      throw DataError("sample refers to unknown scene " + std::to_string(s.scene_id));
  return data;
}

void label(const RunConfig& cfg, const fs::path& tracks_csv, const fs::path& scene_meta,
           const fs::path& out_dir) {
  const Scene scene = read_scene(tracks_csv, scene_meta);
  std::vector<LabelSequence> labels;
  labels.reserve(scene.tracks.size());
  for (const Track& t : scene.tracks)
    labels.push_back(label_track(t, scene.geometry, cfg.dataset.lateral_speed_eps));
  ensure_dir(out_dir);
  std::ostringstream csv;
  io::write_labels_csv(csv, scene, labels);
  io::write_file(out_dir / "labels.csv", csv.str());
  io::Json meta = artifact_meta(cfg);
  meta["input"] = tracks_csv.filename().string();
  meta["scene_id"] = scene.id;
  write_json(out_dir / "labels.meta.json", meta);
}

Model train(const RunConfig& cfg, const fs::path& data_dir, const fs::path& out_dir) {
  const DataSet data = load_data(data_dir);
  std::vector<DatasetSample> train_set;
  for (const DatasetSample& s : data.samples)
    if (s.split == "train") train_set.push_back(s);
  if (train_set.empty()) throw DataError("no training samples in '" + data_dir.string() + "'");

  TrainConfig tc = cfg.train;
  tc.seed = stage_seed(cfg.seed, "train");
  Model model(cfg.model, stage_seed(cfg.seed, "model"));
  const std::vector<EpochLog> log = fit(model, train_set, tc);

  ensure_dir(out_dir);
  io::Json extra = artifact_meta(cfg);
  io::save_checkpoint(out_dir / "model.json", model, extra);
  std::ostringstream csv;
  write_loss_csv(csv, log);
  io::write_file(out_dir / "loss.csv", csv.str());
  io::Json meta = artifact_meta(cfg);
  meta["columns"] = "wall_time_s is a timing measurement and varies between runs";
  write_json(out_dir / "loss.meta.json", meta);
  return model;
}

std::vector<EvalSample> predict_split(const Model& model, const DataSet& data,
                                      const std::string& split) {
  std::vector<const DatasetSample*> chosen;
  for (const DatasetSample& s : data.samples)
    if (s.split == split) chosen.push_back(&s);
  std::vector<EvalSample> out(chosen.size());
  const int t_pred = model.config().t_pred;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(chosen.size()); ++i) {
    const DatasetSample& s = *chosen[static_cast<std::size_t>(i)];
    EvalSample& e = out[static_cast<std::size_t>(i)];
    e.modes = model.infer(s.features);
    e.gt = s.future;
    e.gt_labels = s.future_labels;
    e.tv_length = s.tv_length;
    e.tv_width = s.tv_width;
    e.scene = make_scene_context(data.scenes[static_cast<std::size_t>(s.scene_id)], s, t_pred);
  }
  return out;
}

MetricsReport eval(const RunConfig& cfg, const fs::path& model_path, const fs::path& data_dir,
                   const fs::path& out_dir) {
  const Model model = io::load_checkpoint(model_path);
  check_compatible(model.config(), cfg);
  for (int k : cfg.eval_ks)
    if (k > model.config().n_modes)
      throw ConfigError("eval.ks entry " + std::to_string(k) + " exceeds the model's mode count");
  const DataSet data = load_data(data_dir);
  const std::vector<EvalSample> batch = predict_split(model, data, "test");
  if (batch.empty()) throw DataError("no test samples in '" + data_dir.string() + "'");
  const MetricsReport report = evaluate(batch, cfg.eval_ks, cfg.eval_horizons, cfg.generator.fps);

  ensure_dir(out_dir);
  io::Json j = artifact_meta(cfg);
  j["model"] = model_path.filename().string();
  j["metrics"] = to_json(report);
  write_json(out_dir / "report.json", j);
  io::write_file(out_dir / "report.txt", format_table(report));
  return report;
}

io::Json plan(const RunConfig& cfg, const fs::path& model_path, const fs::path& data_dir,
              const PlanRequest& req, const fs::path& out_dir) {
  const Model model = io::load_checkpoint(model_path);
  check_compatible(model.config(), cfg);
  const DataSet data = load_data(data_dir);
  if (req.scene_id < 0 || req.scene_id >= static_cast<int>(data.scenes.size()))
    throw DataError("scene " + std::to_string(req.scene_id) + " is not in the data set");
  const Scene& scene = data.scenes[static_cast<std::size_t>(req.scene_id)];
  const int frame = req.frame >= 0 ? req.frame : cfg.dataset.t_obs - 1 + cfg.generator.fps;
  const Track& ego_track = scene.track(req.ego_id);
  if (!ego_track.covers(frame))
    throw DataError("ego " + std::to_string(req.ego_id) + " is absent at frame " +
                    std::to_string(frame));

  const VehicleState& ego_now = ego_track.at(frame);
  const int tv_id = select_target_vehicle(scene, req.ego_id, frame);
  const VehicleState& tv_now = scene.track(tv_id).at(frame);
  const std::vector<ModePrediction> modes =
      model.infer(extract_features(scene, tv_id, frame, cfg.dataset.t_obs));
  const std::vector<TvForecast> forecasts = forecasts_from_modes(modes, tv_now.pos);

  PlannerConfig pc = cfg.planner;
  const int ego_lane = scene.geometry.lane_at(ego_now.pos.lat).value_or(0);
  const int target_lane =
      std::clamp(ego_lane + cfg.plan_target_lane_offset, 0, scene.geometry.lane_count - 1);
  pc.lat_ref = scene.geometry.lane_center(target_lane);
  const EgoState ego{ego_now.pos, ego_now.vel};
  const ContingencyPlan result = plan_contingency(ego, forecasts, pc);

  io::Json vehicles = io::Json::array();
  for (const Track& t : scene.tracks) {
    if (!t.covers(frame)) continue;
    const VehicleState& v = t.at(frame);
    vehicles.push_back({{"id", t.id},
                        {"pos", {v.pos.lon, v.pos.lat}},
                        {"length", v.length},
                        {"width", v.width}});
  }
  io::Json tv_modes = io::Json::array();
  for (const TvForecast& f : forecasts) {
    io::Json mean = io::Json::array();
    for (const Point2& p : f.mean) mean.push_back({p.lon, p.lat});
    tv_modes.push_back({{"mode", f.mode}, {"prob", f.prob}, {"mean", mean}});
  }

  io::Json j = artifact_meta(cfg);
  j["scene_id"] = scene.id;
  j["frame"] = frame;
  j["ego_id"] = req.ego_id;
  j["tv_id"] = tv_id;
  j["dt"] = pc.dt;
  j["lat_ref"] = pc.lat_ref;
  j["geometry"] = io::to_json(scene.geometry);
  j["vehicles"] = vehicles;
  j["tv_forecasts"] = tv_modes;
  j["plan"] = to_json(result);
  ensure_dir(out_dir);
  write_json(out_dir / "plan.json", j);
  return j;
}

void plot(const std::vector<fs::path>& plan_files, const fs::path& out_dir) {
  if (plan_files.empty()) throw ConfigError("plot needs at least one plan file");
  ensure_dir(out_dir);
  for (std::size_t i = 0; i < plan_files.size(); ++i) {
    const io::Json j = read_json(plan_files[i]);
    const std::string name =
        plan_files.size() == 1 ? "plan.svg" : "plan_" + std::to_string(i) + ".svg";
    io::write_file(out_dir / name, render_plan_svg(j));
  }
}

}  // namespace mantra::pipeline
