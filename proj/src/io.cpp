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

#include "mantra/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "mantra/errors.hpp"
#include "mantra/features.hpp"

namespace mantra::io {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& column, int line) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && *b == ' ') ++b;
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e)
    throw DataError("line " + std::to_string(line) + ": bad number '" + s + "' in column " +
                    column);
  return v;
}

}  // namespace

void write_tracks_csv(std::ostream& out, const Scene& scene) {
  out << "frame,id,x,y,xVelocity,yVelocity,xAcceleration,yAcceleration,width,height,laneId\n";
  for (int frame = 0; frame < scene.duration; ++frame) {
    for (const Track& t : scene.tracks) {
      if (!t.covers(frame)) continue;
      const VehicleState& s = t.at(frame);
      const auto lane = scene.geometry.lane_at(s.pos.lat);
      out << frame << ',' << t.id << ',' << format_double(s.pos.lon) << ','
          << format_double(s.pos.lat) << ',' << format_double(s.vel.lon) << ','
          << format_double(s.vel.lat) << ',' << format_double(s.acc.lon) << ','
          << format_double(s.acc.lat) << ',' << format_double(s.length) << ','
          << format_double(s.width) << ',' << (lane ? *lane + 1 : 0) << '\n';
    }
  }
}

Scene read_tracks_csv(std::istream& in, const LaneGeometry& geometry, int fps, int scene_id) {
  static const std::vector<std::string> kRequired = {
      "frame", "id", "x", "y", "xVelocity", "yVelocity", "xAcceleration", "yAcceleration",
      "width", "height"};
  std::string line;
  if (!std::getline(in, line)) throw DataError("track CSV is empty");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);
  const std::vector<std::string> header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const auto& name : kRequired)
    if (!col.count(name)) throw DataError("track CSV lacks column '" + name + "'");

  std::map<int, Track> tracks;
  int line_no = 1;
  int max_frame = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() < header.size())
      throw DataError("line " + std::to_string(line_no) + ": too few columns");
    auto get = [&](const char* name) { return parse_double(cells[col[name]], name, line_no); };
    const int frame = static_cast<int>(get("frame"));
    const int id = static_cast<int>(get("id"));
    VehicleState s;
    s.id = id;
    s.pos = {get("x"), get("y")};
    s.vel = {get("xVelocity"), get("yVelocity")};
    s.acc = {get("xAcceleration"), get("yAcceleration")};
    s.length = get("width");
    s.width = get("height");
    if (!(s.length > 0.0) || !(s.width > 0.0))
      throw DataError("line " + std::to_string(line_no) + ": vehicle size must be positive");
    auto [it, fresh] = tracks.try_emplace(id);
    Track& t = it->second;
    if (fresh) {
      t.id = id;
      t.first_frame = frame;
    } else if (frame != t.last_frame() + 1) {
      throw DataError("line " + std::to_string(line_no) + ": frames of vehicle " +
                      std::to_string(id) + " are not consecutive");
    }
    t.states.push_back(s);
    max_frame = std::max(max_frame, frame);
  }
  Scene scene;
  scene.id = scene_id;
  scene.geometry = geometry;
  scene.fps = fps;
  scene.duration = max_frame + 1;
  for (auto& [id, t] : tracks) scene.tracks.push_back(std::move(t));
  return scene;
}

void write_labels_csv(std::ostream& out, const Scene& scene,
                      std::span<const LabelSequence> labels) {
  out << "id,frame,label\n";
  for (std::size_t i = 0; i < scene.tracks.size(); ++i) {
    const Track& t = scene.tracks[i];
    for (std::size_t k = 0; k < labels[i].size(); ++k)
      out << t.id << ',' << t.first_frame + static_cast<int>(k) << ','
          << label_code(labels[i][k]) << '\n';
  }
}

Json to_json(const ManoeuvreVector& mv) {
  Json u = Json::array();
  for (ManoeuvreType t : mv.types) u.push_back(std::string(manoeuvre_name(t)));
  return Json{{"U", u}, {"V", mv.times}};
}

ManoeuvreVector manoeuvre_vector_from_json(const Json& j) {
  ManoeuvreVector mv;
  try {
    for (const auto& u : j.at("U")) mv.types.push_back(manoeuvre_from_name(u.get<std::string>()));
    mv.times = j.at("V").get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw DataError(std::string("bad manoeuvre vector: ") + e.what());
  }
  return mv;
}

Json to_json(const LaneGeometry& g) {
  return Json{{"lane_count", g.lane_count},
              {"lane_width", g.lane_width},
              {"markings", g.markings},
              {"road_bounds", {g.road_lo, g.road_hi}}};
}

LaneGeometry lane_geometry_from_json(const Json& j) {
  LaneGeometry g;
  try {
    g.lane_count = j.at("lane_count").get<int>();
    g.lane_width = j.at("lane_width").get<double>();
    g.markings = j.at("markings").get<std::vector<double>>();
    g.road_lo = j.at("road_bounds").at(0).get<double>();
    g.road_hi = j.at("road_bounds").at(1).get<double>();
  } catch (const Json::exception& e) {
    throw DataError(std::string("bad lane geometry: ") + e.what());
  }
  g.validate();
  return g;
}

Json sample_to_json(const DatasetSample& s) {
  Json features = Json::array();
  for (std::size_t r = 0; r < s.features.rows(); ++r) {
    const auto row = s.features.row(r);
    features.push_back(std::vector<double>(row.begin(), row.end()));
  }
  Json traj = Json::array();
  for (const Point2& p : s.future) traj.push_back({p.lon, p.lat});
  return Json{{"features", features},
              {"future_traj", traj},
              {"future_labels", labels_to_string(s.future_labels)},
              {"meta",
               {{"scene_id", s.scene_id},
                {"tv_id", s.tv_id},
                {"t_end", s.t_end},
                {"split", s.split},
                {"origin", {s.origin.lon, s.origin.lat}},
                {"tv_length", s.tv_length},
                {"tv_width", s.tv_width}}}};
}

DatasetSample sample_from_json(const Json& j) {
  DatasetSample s;
  try {
    const auto& f = j.at("features");
    const std::size_t rows = f.size();
    const std::size_t cols = rows ? f.at(0).size() : 0;
    s.features = Matrix(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      if (f[r].size() != cols) throw DataError("ragged feature matrix");
      for (std::size_t c = 0; c < cols; ++c) s.features(r, c) = f[r][c].get<double>();
    }
    for (const auto& p : j.at("future_traj"))
      s.future.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    s.future_labels = labels_from_string(j.at("future_labels").get<std::string>());
    const auto& m = j.at("meta");
    s.scene_id = m.at("scene_id").get<int>();
    s.tv_id = m.at("tv_id").get<int>();
    s.t_end = m.at("t_end").get<int>();
    s.split = m.at("split").get<std::string>();
    s.origin = {m.at("origin").at(0).get<double>(), m.at("origin").at(1).get<double>()};
    s.tv_length = m.at("tv_length").get<double>();
    s.tv_width = m.at("tv_width").get<double>();
  } catch (const Json::exception& e) {
    throw DataError(std::string("bad sample record: ") + e.what());
  }
  if (s.future.size() != s.future_labels.size())
    throw DataError("future trajectory and labels differ in length");
  if (!s.features.all_finite()) throw DataError("sample has non-finite features");
  return s;
}

void write_samples(std::ostream& out, std::span<const DatasetSample> samples) {
  for (const auto& s : samples) out << sample_to_json(s).dump() << '\n';
}

std::vector<DatasetSample> read_samples(std::istream& in) {
  std::vector<DatasetSample> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw DataError("samples line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(sample_from_json(j));
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace mantra::io
