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

#include "mantra/plot.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <limits>
#include <sstream>
#include <vector>

#include "mantra/errors.hpp"
#include "mantra/geometry.hpp"

namespace mantra {
namespace {

constexpr double kWidthPx = 1000.0;
constexpr double kMarginPx = 40.0;
constexpr double kLatPxPerM = 14.0;  // lateral axis is stretched for legibility
constexpr std::array<const char*, 6> kPalette = {"#1f77b4", "#d62728", "#2ca02c",
                                                 "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::vector<Point2> points_of(const io::Json& arr) {
  std::vector<Point2> out;
  for (const auto& p : arr) out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return out;
}

struct Frame {
  double lon0, lon_scale, lat_top;
  double x(double lon) const { return kMarginPx + (lon - lon0) * lon_scale; }
  double y(double lat) const { return kMarginPx + (lat_top - lat) * kLatPxPerM; }
};

std::string polyline(const Frame& f, const std::vector<Point2>& pts, const char* colour,
                     bool dashed, double opacity) {
  std::string s = "<polyline fill=\"none\" stroke=\"" + std::string(colour) +
                  "\" stroke-width=\"2\" stroke-opacity=\"" + num(opacity) + "\"";
  if (dashed) s += " stroke-dasharray=\"6,4\"";
  s += " points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) s += ' ';
    s += num(f.x(pts[i].lon)) + "," + num(f.y(pts[i].lat));
  }
  return s + "\"/>\n";
}

}  // namespace

std::string render_plan_svg(const io::Json& rec) {
  try {
    const auto& geometry = rec.at("geometry");
    const std::vector<double> markings = geometry.at("markings").get<std::vector<double>>();
    if (markings.size() < 2) throw DataError("plan record has no lane markings");
    const int ego_id = rec.at("ego_id").get<int>();
    const int tv_id = rec.at("tv_id").get<int>();

    std::vector<std::vector<Point2>> tv_means;
    std::vector<std::pair<int, double>> tv_labels;
    for (const auto& f : rec.at("tv_forecasts")) {
      tv_means.push_back(points_of(f.at("mean")));
      tv_labels.emplace_back(f.at("mode").get<int>(), f.at("prob").get<double>());
    }
    std::vector<std::vector<Point2>> ego_paths;
    std::vector<int> ego_modes;
    for (const auto& b : rec.at("plan").at("branches")) {
      std::vector<Point2> path;
      for (const auto& st : b.at("states")) path.push_back({st.at(0).get<double>(), st.at(1).get<double>()});
      ego_paths.push_back(std::move(path));
      ego_modes.push_back(b.at("mode").get<int>());
    }

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    auto extend = [&](const std::vector<Point2>& pts) {
      for (const Point2& p : pts) {
        lo = std::min(lo, p.lon);
        hi = std::max(hi, p.lon);
      }
    };
    for (const auto& m : tv_means) extend(m);
    for (const auto& p : ego_paths) extend(p);
    if (!(hi > lo)) throw DataError("plan record has no trajectories to draw");
    lo -= 15.0;
    hi += 15.0;

    const double road_lo = markings.front();
    const double road_hi = markings.back();
    const Frame f{lo, (kWidthPx - 2 * kMarginPx) / (hi - lo), road_hi + 1.0};
    const double height = 2 * kMarginPx + (road_hi - road_lo + 2.0) * kLatPxPerM + 20.0 * 4;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidthPx) << "\" height=\""
       << num(height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<rect x=\"" << num(f.x(lo)) << "\" y=\"" << num(f.y(road_hi)) << "\" width=\""
       << num(f.x(hi) - f.x(lo)) << "\" height=\"" << num((road_hi - road_lo) * kLatPxPerM)
       << "\" fill=\"#dddddd\"/>\n";
    for (std::size_t i = 0; i < markings.size(); ++i) {
      const bool edge = i == 0 || i + 1 == markings.size();
      os << "<line x1=\"" << num(f.x(lo)) << "\" x2=\"" << num(f.x(hi)) << "\" y1=\""
         << num(f.y(markings[i])) << "\" y2=\"" << num(f.y(markings[i]))
         << "\" stroke=\"#555555\" stroke-width=\"" << (edge ? "2" : "1") << "\""
         << (edge ? "" : " stroke-dasharray=\"10,8\"") << "/>\n";
    }

    for (const auto& v : rec.at("vehicles")) {
      const double lon = v.at("pos").at(0).get<double>();
      const double lat = v.at("pos").at(1).get<double>();
      if (lon < lo || lon > hi) continue;
      const double len = v.at("length").get<double>();
      const double wid = v.at("width").get<double>();
      const int id = v.at("id").get<int>();
      const char* fill = id == ego_id ? "#1f3b73" : id == tv_id ? "#b22222" : "#888888";
      os << "<rect x=\"" << num(f.x(lon - len / 2)) << "\" y=\"" << num(f.y(lat + wid / 2))
         << "\" width=\"" << num(len * f.lon_scale) << "\" height=\"" << num(wid * kLatPxPerM)
         << "\" fill=\"" << fill << "\"><title>vehicle " << id << "</title></rect>\n";
    }

    for (std::size_t n = 0; n < tv_means.size(); ++n) {
      const char* c = kPalette[static_cast<std::size_t>(tv_labels[n].first) % kPalette.size()];
      os << polyline(f, tv_means[n], c, true, 0.35 + 0.65 * tv_labels[n].second);
    }
    for (std::size_t n = 0; n < ego_paths.size(); ++n) {
      const char* c = kPalette[static_cast<std::size_t>(ego_modes[n]) % kPalette.size()];
      os << polyline(f, ego_paths[n], c, false, 1.0);
    }

    double ty = f.y(road_lo) + 24.0;
    os << "<text x=\"" << num(kMarginPx) << "\" y=\"" << num(ty) << "\">scene "
       << rec.at("scene_id").get<int>() << ", frame " << rec.at("frame").get<int>()
       << ": dashed = target vehicle mode mean, solid = ego branch</text>\n";
    for (const auto& [mode, prob] : tv_labels) {
      ty += 18.0;
      os << "<text x=\"" << num(kMarginPx) << "\" y=\"" << num(ty) << "\" fill=\""
         << kPalette[static_cast<std::size_t>(mode) % kPalette.size()] << "\">mode " << mode
         << "  p = " << num(prob) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
  } catch (const io::Json::exception& e) {
    throw DataError(std::string("malformed plan record: ") + e.what());
  }
}

}  // namespace mantra
