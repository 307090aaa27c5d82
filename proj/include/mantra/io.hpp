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

// File formats: highD-style track CSV, JSON-lines samples, manoeuvre vector
// JSON and the scene manifest.

#ifndef MANTRA_IO_HPP_
#define MANTRA_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mantra/dataset.hpp"
#include "mantra/manoeuvre.hpp"
#include "mantra/scene.hpp"

namespace mantra::io {

using Json = nlohmann::ordered_json;

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// Columns: frame,id,x,y,xVelocity,yVelocity,xAcceleration,yAcceleration,
// width,height,laneId. x/y are the box centre in the road frame, width is
// the extent along x (vehicle length) and height the extent along y, as in
// highD. laneId is 1-based, 0 when off the marked road.
void write_tracks_csv(std::ostream& out, const Scene& scene);
// Reads any column order; unknown columns are ignored. Frames must be
// consecutive per vehicle. Throws DataError on schema problems.
Scene read_tracks_csv(std::istream& in, const LaneGeometry& geometry, int fps,
                      int scene_id = 0);

void write_labels_csv(std::ostream& out, const Scene& scene,
                      std::span<const LabelSequence> labels);

Json to_json(const ManoeuvreVector& mv);
ManoeuvreVector manoeuvre_vector_from_json(const Json& j);

Json to_json(const LaneGeometry& g);
LaneGeometry lane_geometry_from_json(const Json& j);

Json sample_to_json(const DatasetSample& s);
DatasetSample sample_from_json(const Json& j);
void write_samples(std::ostream& out, std::span<const DatasetSample> samples);
std::vector<DatasetSample> read_samples(std::istream& in);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace mantra::io

#endif  // MANTRA_IO_HPP_
