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

#include "mantra/config.hpp"

#include <charconv>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "mantra/errors.hpp"

namespace mantra {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError("setting '" + key + "': cannot parse '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("setting '" + key + "': expected true or false, got '" + v + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& v) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(key, trim(item)));
  if (out.empty()) throw ConfigError("setting '" + key + "' is an empty list");
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_floating_point_v<T>) {
      s += io::format_double(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

struct Field {
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

Field int_field(std::string key, int& ref) {
  return {key, [&ref] { return std::to_string(ref); },
          [&ref, key](const std::string& v) { ref = parse_number<int>(key, v); }};
}
Field u64_field(std::string key, std::uint64_t& ref) {
  return {key, [&ref] { return std::to_string(ref); },
          [&ref, key](const std::string& v) { ref = parse_number<std::uint64_t>(key, v); }};
}
Field double_field(std::string key, double& ref) {
  return {key, [&ref] { return io::format_double(ref); },
          [&ref, key](const std::string& v) { ref = parse_number<double>(key, v); }};
}
Field bool_field(std::string key, bool& ref) {
  return {key, [&ref] { return std::string(ref ? "true" : "false"); },
          [&ref, key](const std::string& v) { ref = parse_bool(key, v); }};
}

std::vector<Field> fields(RunConfig& c) {
  std::vector<Field> f;
  f.push_back(u64_field("run.seed", c.seed));

  GeneratorConfig& g = c.generator;
  f.push_back(int_field("data.scenes", c.scenes));
  f.push_back(int_field("data.lanes", g.lanes));
  f.push_back(double_field("data.lane_width", g.lane_width));
  f.push_back(int_field("data.fps", g.fps));
  f.push_back(double_field("data.duration_s", g.duration_s));
  f.push_back(int_field("data.vehicles", g.n_vehicles));
  f.push_back(double_field("data.lc_rate", g.lc_rate));
  f.push_back(double_field("data.speed_min", g.speed_min));
  f.push_back(double_field("data.speed_max", g.speed_max));
  f.push_back(double_field("data.lc_duration_min", g.lc_duration_min));
  f.push_back(double_field("data.lc_duration_max", g.lc_duration_max));
  f.push_back(double_field("data.lc_earliest_s", g.lc_earliest_s));
  f.push_back(double_field("data.min_gap", g.min_gap));
  f.push_back(bool_field("data.merge_ego", g.merge_ego));
  f.push_back(int_field("data.t_obs", c.dataset.t_obs));
  f.push_back(int_field("data.t_pred", c.dataset.horizon.t_pred));
  f.push_back(int_field("data.t_change", c.dataset.horizon.t_change));
  f.push_back(int_field("data.stride", c.dataset.stride));
  f.push_back(double_field("data.lateral_speed_eps", c.dataset.lateral_speed_eps));
  f.push_back(int_field("data.balance_cap", c.balance_cap));
  f.push_back(double_field("data.test_fraction", c.test_fraction));

  ModelConfig& m = c.model;
  f.push_back(int_field("model.d_model", m.d_model));
  f.push_back(int_field("model.n_heads", m.n_heads));
  f.push_back(int_field("model.n_layers", m.n_layers));
  f.push_back(int_field("model.d_ff", m.d_ff));
  f.push_back(int_field("model.mlp_hidden", m.mlp_hidden));
  f.push_back(int_field("model.n_modes", m.n_modes));
  f.push_back({"model.conditioning",
               [&m] {
                 return std::string(m.conditioning == DecoderConditioning::kManoeuvre ? "manoeuvre"
                                                                                      : "mode");
               },
               [&m](const std::string& v) {
                 if (v == "manoeuvre") {
                   m.conditioning = DecoderConditioning::kManoeuvre;
                 } else if (v == "mode") {
                   m.conditioning = DecoderConditioning::kMode;
                 } else {
                   throw ConfigError("setting 'model.conditioning': expected manoeuvre or mode");
                 }
               }});
  f.push_back(double_field("model.step_scale_lon", m.step_scale_lon));
  f.push_back(double_field("model.step_scale_lat", m.step_scale_lat));
  f.push_back(double_field("model.pos_scale_lon", m.pos_scale_lon));
  f.push_back(double_field("model.pos_scale_lat", m.pos_scale_lat));
  f.push_back(double_field("model.type_prior", m.type_prior));

  TrainConfig& t = c.train;
  f.push_back(int_field("train.epochs", t.epochs));
  f.push_back(int_field("train.batch_size", t.batch_size));
  f.push_back(double_field("train.learning_rate", t.learning_rate));
  f.push_back(int_field("train.warmup_epochs", t.warmup_epochs));
  f.push_back({"train.selection", [&t] { return std::string(mode_selection_name(t.selection)); },
               [&t](const std::string& v) {
                 try {
                   t.selection = mode_selection_from_name(v);
                 } catch (const ConfigError&) {
                   throw ConfigError("setting 'train.selection': expected MMP or MTP");
                 }
               }});
  f.push_back(double_field("train.grad_clip", t.grad_clip));

  f.push_back({"eval.ks", [&c] { return join(c.eval_ks); },
               [&c](const std::string& v) { c.eval_ks = parse_list<int>("eval.ks", v); }});
  f.push_back({"eval.horizons", [&c] { return join(c.eval_horizons); },
               [&c](const std::string& v) {
                 c.eval_horizons = parse_list<double>("eval.horizons", v);
               }});

  PlannerConfig& p = c.planner;
  f.push_back(double_field("planner.w_track", p.w_track));
  f.push_back(double_field("planner.w_speed", p.w_speed));
  f.push_back(double_field("planner.w_effort", p.w_effort));
  f.push_back(double_field("planner.w_prox", p.w_prox));
  f.push_back(double_field("planner.safe_lon", p.safe_lon));
  f.push_back(double_field("planner.safe_lat", p.safe_lat));
  f.push_back(double_field("planner.a_lon_min", p.a_lon_min));
  f.push_back(double_field("planner.a_lon_max", p.a_lon_max));
  f.push_back(double_field("planner.a_lat_max", p.a_lat_max));
  f.push_back(double_field("planner.prob_floor", p.prob_floor));
  f.push_back(double_field("planner.tolerance", p.tolerance));
  f.push_back(int_field("planner.max_iterations", p.max_iterations));
  f.push_back(int_field("planner.target_lane_offset", c.plan_target_lane_offset));
  return f;
}

}  // namespace

void RunConfig::finalise() {
  dataset.horizon.fps = generator.fps;
  model.t_obs = dataset.t_obs;
  model.t_pred = dataset.horizon.t_pred;
  model.t_change = dataset.horizon.t_change;
  model.fps = generator.fps;
  planner.dt = 1.0 / generator.fps;
  planner.horizon = dataset.horizon.t_pred;
  try {
    dataset.horizon.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  generator.validate();
  model.validate();
  train.validate();
  planner.validate();
  if (scenes < 1) throw ConfigError("data.scenes must be positive");
  if (dataset.t_obs < 2 || dataset.stride < 1) throw ConfigError("data.t_obs >= 2 and data.stride >= 1 required");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw ConfigError("data.test_fraction must lie in [0, 1)");
  if (balance_cap < 0) throw ConfigError("data.balance_cap must be non-negative");
  for (int k : eval_ks)
    if (k < 1 || k > model.n_modes) throw ConfigError("eval.ks entries must lie in [1, n_modes]");
  for (double h : eval_horizons) {
    const double steps = h * generator.fps;
    if (!(steps >= 1.0) || steps > dataset.horizon.t_pred || steps != std::round(steps))
      throw ConfigError("eval.horizons must map to whole steps inside the prediction window");
  }
}

KeyValues parse_ini(std::string_view text) {
  KeyValues out;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": bad section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (section.empty() || key.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": key outside a section");
    out.emplace_back(section + "." + key, trim(std::string_view(line).substr(eq + 1)));
  }
  return out;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (Field& f : fields(cfg)) {
    if (f.key == key) {
      f.set(value);
      return;
    }
  }
  throw ConfigError("unknown setting '" + key + "'");
}

RunConfig resolve_config(const std::string& file, const std::vector<std::string>& overrides) {
  RunConfig cfg;
  if (!file.empty()) {
    std::string text;
    try {
      text = io::read_file(file);
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
    for (const auto& [k, v] : parse_ini(text)) apply_setting(cfg, k, v);
  }
  if (const char* env = std::getenv("MMNTP_SEED"); env != nullptr && *env != '\0')
    apply_setting(cfg, "run.seed", env);
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    apply_setting(cfg, trim(std::string_view(o).substr(0, eq)), trim(std::string_view(o).substr(eq + 1)));
  }
  cfg.finalise();
  return cfg;
}

KeyValues settings_of(const RunConfig& cfg) {
  RunConfig copy = cfg;
  KeyValues out;
  for (Field& f : fields(copy)) out.emplace_back(f.key, f.get());
  return out;
}

io::Json to_json(const RunConfig& cfg) {
  io::Json j = io::Json::object();
  for (const auto& [k, v] : settings_of(cfg)) {
    const auto dot = k.find('.');
    j[k.substr(0, dot)][k.substr(dot + 1)] = v;
  }
  return j;
}

std::uint64_t stage_seed(std::uint64_t root, std::string_view stage) {
  // FNV-1a of the stage name, mixed with the root by splitmix64.
  std::uint64_t h = 1469598103934665603ull;
  for (char ch : stage) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  std::uint64_t z = root + h + 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace mantra
