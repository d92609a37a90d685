// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
#pragma once

#include <json.hpp>

#include "conflab/grid_manifold.hpp"

namespace conflab::detail {

using nlohmann::json;

inline json mesh_spec_to_json(const MeshSpec& spec) {
  return std::visit([](const auto& s) -> json {
    using T = std::decay_t<decltype(s)>;
    json j;
    if constexpr (std::is_same_v<T, TorusSpec>) {
      j["topology"] = "torus";
      j["dim"] = s.dim;
      j["side"] = s.side;
      j["divisions"] = s.divisions;
      if (!s.grading.empty()) {
        json g = json::array();
        for (const auto& a : s.grading) g.push_back({{"foci", a.foci}, {"ratio", a.ratio}});
        j["grading"] = g;
      }
    } else if constexpr (std::is_same_v<T, CylinderSpec>) {
      j["topology"] = "cylinder_s3";
      j["band_length"] = s.band_length;
      j["num_bands"] = s.num_bands;
      j["t_divisions_per_band"] = s.t_divisions_per_band;
      j["s3_resolution"] = s.s3_resolution;
      j["t_offset"] = s.t_offset;
    } else {
      j["topology"] = "stereo_ball";
      j["dim"] = s.dim;
      j["cutoff"] = s.cutoff;
      j["divisions"] = s.divisions;
      j["vertex_budget"] = s.vertex_budget;
    }
    return j;
  }, spec);
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

inline MeshSpec mesh_spec_from_json(const json& j) {
  const std::string topo = j.at("topology").get<std::string>();
  if (topo == "torus") {
    TorusSpec s;
    s.dim = j.at("dim").get<int>();
    s.side = get_or(j, "side", 1.0);
    s.divisions = j.at("divisions").get<int>();
    if (j.contains("grading")) {
      for (const auto& g : j.at("grading")) {
        AxisGrading a;
        a.foci = g.at("foci").get<std::vector<double>>();
        a.ratio = g.at("ratio").get<double>();
        s.grading.push_back(a);
      }
    }
    return s;
  }
  if (topo == "cylinder_s3") {
    CylinderSpec s;
    s.band_length = get_or(j, "band_length", 1.0);
    s.num_bands = get_or(j, "num_bands", 3);
    s.t_divisions_per_band = get_or(j, "t_divisions_per_band", 24);
    s.s3_resolution = get_or(j, "s3_resolution", 8);
    s.t_offset = get_or(j, "t_offset", 0.0);
    return s;
  }
  if (topo == "stereo_ball") {
    StereoBallSpec s;
    s.dim = j.at("dim").get<int>();
    s.cutoff = j.at("cutoff").get<double>();
    s.divisions = j.at("divisions").get<int>();
    s.vertex_budget = get_or<std::size_t>(j, "vertex_budget", 2'000'000);
    return s;
  }
  throw Error(ErrorCode::format_error, "unknown topology '" + topo + "'");
}

}  // namespace conflab::detail
