// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
#include "conflab/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "conflab/io.hpp"
#include "conflab/spectral.hpp"
#include "json_convert.hpp"

namespace conflab {

using detail::json;

const char* scenario_kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::smooth_convergent: return "smooth_convergent";
    case ScenarioKind::single_bubble: return "single_bubble";
    case ScenarioKind::two_bubble: return "two_bubble";
    case ScenarioKind::dumbbell: return "dumbbell";
    case ScenarioKind::cylinder_exact: return "cylinder_exact";
  }
  return "unknown";
}

ScenarioKind parse_scenario_kind(const std::string& s) {
  for (auto k : {ScenarioKind::smooth_convergent, ScenarioKind::single_bubble, ScenarioKind::two_bubble,
                 ScenarioKind::dumbbell, ScenarioKind::cylinder_exact})
    if (s == scenario_kind_name(k)) return k;
  fail(ErrorCode::invalid_argument, "unknown scenario kind '" + s + "'");
}

int thread_count() {
  const char* s = std::getenv("CONFLAB_THREADS");
  if (!s || !*s) return 1;
  char* end = nullptr;
  const long n = std::strtol(s, &end, 10);
  if (*end != '\0' || n < 1) return 1;
  return static_cast<int>(std::min<long>(n, 256));
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double yamabe_constant(int n) {
  constexpr double pi = std::numbers::pi;
  if (n == 4) return 12.0 * std::sqrt(8.0 * pi * pi / 3.0);
  if (n == 3) return 6.0 * std::pow(2.0 * pi * pi, 2.0 / 3.0);
  fail(ErrorCode::invalid_argument, "yamabe_constant supports n = 3 or 4");
}

namespace {

int mesh_dim(const MeshSpec& s) {
  return std::visit([](const auto& x) {
    using T = std::decay_t<decltype(x)>;
    if constexpr (std::is_same_v<T, CylinderSpec>) return 4;
    else return x.dim;
  }, s);
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

void check_points(const std::vector<Point>& pts, int n, const std::string& what) {
  for (const auto& p : pts)
    for (int a = n; a < 4; ++a) require(p[a] == 0.0, what + " has coordinates beyond the mesh dimension");
}

}  // namespace

void ScenarioConfig::validate() const {
  require(schema_version == 1, "unsupported config schema_version " + std::to_string(schema_version));
  require(k_count >= 4, "family length K must be at least 4");
  thresholds.validate();
  const int n = mesh_dim(mesh);
  const bool torus = std::holds_alternative<TorusSpec>(mesh);
  const bool ball = std::holds_alternative<StereoBallSpec>(mesh);
  const auto& a = analysis;
  require(a.landmarks >= 2 && a.radius_count >= 1 && a.scan_points_per_axis >= 1 && a.scan_peaks >= 0,
          "analysis counts out of range");
  require(a.radius_min > 0.0 && a.radius_min < a.radius_max, "need 0 < radius_min < radius_max");
  require(!a.blowup_levels.empty(), "blowup_levels must be nonempty");
  for (double l : a.blowup_levels) require(l > 0.0, "blowup levels must be positive");
  require(a.blowup_candidates >= 0, "blowup_candidates must be nonnegative");
  require(a.spectrum_count >= 2, "spectrum_count must be at least 2");
  require(a.neck_r_outer == 0.0 || (a.neck_r_inner >= 0.0 && a.neck_r_inner < a.neck_r_outer),
          "need neck_r_inner < neck_r_outer");
  require(a.blowup_target.cutoff > 0.0 && a.blowup_target.divisions >= 2, "bad blowup target");
  switch (kind) {
    case ScenarioKind::smooth_convergent:
      require(torus || ball, "smooth_convergent needs a torus or stereo_ball mesh");
      require(smooth.amplitude >= 0.0 && smooth.amplitude < 1.0, "smooth amplitude must lie in [0, 1)");
      require(smooth.perturbation >= 0.0 && smooth.perturbation < 1.0, "perturbation must lie in [0, 1)");
      break;
    case ScenarioKind::single_bubble:
    case ScenarioKind::two_bubble: {
      require(torus || ball, "bubble families need a torus or stereo_ball mesh");
      const std::size_t want = kind == ScenarioKind::single_bubble ? 1 : 2;
      require(bubble.centers.size() == want, std::string(scenario_kind_name(kind)) + " needs " +
                                                 std::to_string(want) + " center(s)");
      check_points(bubble.centers, n, "bubble center");
      require(bubble.lambdas.size() == static_cast<std::size_t>(k_count), "need one lambda per family member");
      require(strictly_decreasing(bubble.lambdas), "lambda schedule must be strictly decreasing");
      require(bubble.lambdas.back() > 0.0, "lambdas must be positive");
      require(bubble.background >= 0.0, "background must be nonnegative");
      require(bubble.blend_start > 0.0 && bubble.blend_width > 0.0 && bubble.blend_start + bubble.blend_width <= 0.5,
              "blend window must lie in (0, 0.5]");
      break;
    }
    case ScenarioKind::dumbbell:
      require(torus, "dumbbell needs a torus mesh");
      require(dumbbell.deltas.size() == static_cast<std::size_t>(k_count), "need one delta per family member");
      require(strictly_decreasing(dumbbell.deltas), "delta schedule must be strictly decreasing");
      require(dumbbell.deltas.front() < 1.0 && dumbbell.deltas.back() > 0.0, "deltas must lie in (0, 1)");
      require(dumbbell.lobes.size() == 2, "dumbbell needs two lobes");
      check_points(dumbbell.lobes, n, "lobe center");
      require(dumbbell.lobe_radius > 0.0 && dumbbell.lobe_transition > 0.0, "lobe sizes must be positive");
      break;
    case ScenarioKind::cylinder_exact:
      require(std::holds_alternative<CylinderSpec>(mesh), "cylinder_exact needs a cylinder_s3 mesh");
      require(cylinder.mode == "decaying" || cylinder.mode == "growing" || cylinder.mode == "constant",
              "cylinder mode must be decaying, growing or constant");
      require(cylinder.amplitude > 0.0, "cylinder amplitude must be positive");
      require(cylinder.perturbation >= 0.0 && cylinder.perturbation < 1.0, "perturbation must lie in [0, 1)");
      break;
  }
}

// ---------------------------------------------------------------- config text

namespace {

json point_json(const Point& p, int n) {
  json a = json::array();
  for (int i = 0; i < n; ++i) a.push_back(p[i]);
  return a;
}

Point point_from(const json& j) {
  Point p{};
  require(j.is_array() && j.size() <= 4, "points are arrays of at most 4 numbers");
  for (std::size_t i = 0; i < j.size(); ++i) p[i] = j[i].get<double>();
  return p;
}

json points_json(const std::vector<Point>& v, int n) {
  json a = json::array();
  for (const auto& p : v) a.push_back(point_json(p, n));
  return a;
}

std::vector<Point> points_from(const json& j) {
  std::vector<Point> v;
  for (const auto& p : j) v.push_back(point_from(p));
  return v;
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

double num(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

void read_num(const json& j, const char* key, double& out) {
  if (j.contains(key)) out = num(j.at(key));
}

}  // namespace

std::string config_to_text(const ScenarioConfig& c) {
  const int n = mesh_dim(c.mesh);
  json j;
  j["schema_version"] = c.schema_version;
  j["kind"] = scenario_kind_name(c.kind);
  j["mesh"] = detail::mesh_spec_to_json(c.mesh);
  j["K"] = c.k_count;
  j["normalize"] = c.normalize;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  const auto& t = c.thresholds;
  j["thresholds"] = {{"eps_detect", t.eps_detect}, {"eps_jn", t.eps_jn},         {"band_L", t.band_L},
                     {"p_sobolev", t.p_sobolev},   {"metric_tol", t.metric_tol}, {"eps_cylinder", t.eps_cylinder},
                     {"d", t.d},                   {"d_prime", t.d_prime},       {"d_dprime", t.d_dprime}};
  j["bubble"] = {{"lambdas", c.bubble.lambdas},         {"centers", points_json(c.bubble.centers, n)},
                 {"background", c.bubble.background},   {"blend_start", c.bubble.blend_start},
                 {"blend_width", c.bubble.blend_width}};
  j["smooth"] = {{"amplitude", c.smooth.amplitude}, {"perturbation", c.smooth.perturbation}};
  j["dumbbell"] = {{"deltas", c.dumbbell.deltas},
                   {"lobes", points_json(c.dumbbell.lobes, n)},
                   {"lobe_radius", c.dumbbell.lobe_radius},
                   {"lobe_transition", c.dumbbell.lobe_transition}};
  j["cylinder"] = {{"mode", c.cylinder.mode},
                   {"amplitude", c.cylinder.amplitude},
                   {"perturbation", c.cylinder.perturbation}};
  const auto& a = c.analysis;
  j["analysis"] = {{"landmarks", a.landmarks},
                   {"stencil", stencil_name(a.stencil)},
                   {"radius_min", a.radius_min},
                   {"radius_max", a.radius_max},
                   {"radius_count", a.radius_count},
                   {"scan_points_per_axis", a.scan_points_per_axis},
                   {"scan_peaks", a.scan_peaks},
                   {"blowup_levels", a.blowup_levels},
                   {"blowup_candidates", a.blowup_candidates},
                   {"spectrum_count", a.spectrum_count},
                   {"spectrum_vertex_budget", a.spectrum_vertex_budget},
                   {"direct_limit", a.direct_limit},
                   {"min_floor", a.min_floor},
                   {"l4_floor", a.l4_floor},
                   {"excluded_radius", a.excluded_radius},
                   {"neck_r_inner", a.neck_r_inner},
                   {"neck_r_outer", a.neck_r_outer},
                   {"neck_landmarks", a.neck_landmarks},
                   {"neck_stencil", stencil_name(a.neck_stencil)},
                   {"pinch_scale", a.pinch_scale},
                   {"background_floor", a.background_floor},
                   {"blowup_target",
                    {{"cutoff", a.blowup_target.cutoff},
                     {"divisions", a.blowup_target.divisions},
                     {"vertex_budget", a.blowup_target.vertex_budget}}}};
  const auto& s = c.assertions;
  j["assertions"] = {{"gap_factor", s.gap_factor},       {"gh_tol", s.gh_tol},
                     {"neck_drop", s.neck_drop},         {"ratio_tol", s.ratio_tol},
                     {"smooth_ratio_band", s.smooth_ratio_band}, {"volume_tol", s.volume_tol},
                     {"lambda_drop", s.lambda_drop},     {"decay_rate_tol", s.decay_rate_tol}};
  return j.dump(2) + "\n";
}

ScenarioConfig config_from_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorCode::format_error, std::string("config is not valid JSON: ") + e.what());
  }
  ScenarioConfig c;
  try {
    read(j, "schema_version", c.schema_version);
    if (c.schema_version != 1)
      fail(ErrorCode::format_error, "unsupported config schema_version " + std::to_string(c.schema_version));
    c.kind = parse_scenario_kind(j.at("kind").get<std::string>());
    c.mesh = detail::mesh_spec_from_json(j.at("mesh"));
    read(j, "K", c.k_count);
    read(j, "normalize", c.normalize);
    read(j, "seed", c.seed);
    read(j, "output_dir", c.output_dir);
    if (j.contains("thresholds")) {
      const auto& t = j["thresholds"];
      auto& o = c.thresholds;
      read(t, "eps_detect", o.eps_detect);
      read(t, "eps_jn", o.eps_jn);
      read(t, "band_L", o.band_L);
      read(t, "p_sobolev", o.p_sobolev);
      read(t, "metric_tol", o.metric_tol);
      read(t, "eps_cylinder", o.eps_cylinder);
      read(t, "d", o.d);
      read(t, "d_prime", o.d_prime);
      read(t, "d_dprime", o.d_dprime);
    }
    if (j.contains("bubble")) {
      const auto& b = j["bubble"];
      read(b, "lambdas", c.bubble.lambdas);
      if (b.contains("centers")) c.bubble.centers = points_from(b["centers"]);
      read(b, "background", c.bubble.background);
      read(b, "blend_start", c.bubble.blend_start);
      read(b, "blend_width", c.bubble.blend_width);
    }
    if (j.contains("smooth")) {
      read(j["smooth"], "amplitude", c.smooth.amplitude);
      read(j["smooth"], "perturbation", c.smooth.perturbation);
    }
    if (j.contains("dumbbell")) {
      const auto& d = j["dumbbell"];
      read(d, "deltas", c.dumbbell.deltas);
      if (d.contains("lobes")) c.dumbbell.lobes = points_from(d["lobes"]);
      read(d, "lobe_radius", c.dumbbell.lobe_radius);
      read(d, "lobe_transition", c.dumbbell.lobe_transition);
    }
    if (j.contains("cylinder")) {
      read(j["cylinder"], "mode", c.cylinder.mode);
      read(j["cylinder"], "amplitude", c.cylinder.amplitude);
      read(j["cylinder"], "perturbation", c.cylinder.perturbation);
    }
    if (j.contains("analysis")) {
      const auto& a = j["analysis"];
      auto& o = c.analysis;
      read(a, "landmarks", o.landmarks);
      if (a.contains("stencil")) o.stencil = parse_stencil(a["stencil"].get<std::string>());
      read(a, "radius_min", o.radius_min);
      read(a, "radius_max", o.radius_max);
      read(a, "radius_count", o.radius_count);
      read(a, "scan_points_per_axis", o.scan_points_per_axis);
      read(a, "scan_peaks", o.scan_peaks);
      read(a, "blowup_levels", o.blowup_levels);
      read(a, "blowup_candidates", o.blowup_candidates);
      read(a, "spectrum_count", o.spectrum_count);
      read(a, "spectrum_vertex_budget", o.spectrum_vertex_budget);
      read(a, "direct_limit", o.direct_limit);
      read(a, "min_floor", o.min_floor);
      read(a, "l4_floor", o.l4_floor);
      read(a, "excluded_radius", o.excluded_radius);
      read(a, "neck_r_inner", o.neck_r_inner);
      read(a, "neck_r_outer", o.neck_r_outer);
      read(a, "neck_landmarks", o.neck_landmarks);
      if (a.contains("neck_stencil")) o.neck_stencil = parse_stencil(a["neck_stencil"].get<std::string>());
      read(a, "pinch_scale", o.pinch_scale);
      read(a, "background_floor", o.background_floor);
      if (a.contains("blowup_target")) {
        const auto& b = a["blowup_target"];
        read(b, "cutoff", o.blowup_target.cutoff);
        read(b, "divisions", o.blowup_target.divisions);
        read(b, "vertex_budget", o.blowup_target.vertex_budget);
      }
    }
    c.analysis.blowup_target.dim = mesh_dim(c.mesh);
    if (j.contains("assertions")) {
      const auto& s = j["assertions"];
      auto& o = c.assertions;
      read(s, "gap_factor", o.gap_factor);
      read(s, "gh_tol", o.gh_tol);
      read(s, "neck_drop", o.neck_drop);
      read(s, "ratio_tol", o.ratio_tol);
      read(s, "smooth_ratio_band", o.smooth_ratio_band);
      read(s, "volume_tol", o.volume_tol);
      read(s, "lambda_drop", o.lambda_drop);
      read(s, "decay_rate_tol", o.decay_rate_tol);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::format_error, std::string("bad config: ") + e.what());
  }
  c.validate();
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_text(ss.str());
}

// ---------------------------------------------------------------- families

namespace {

double smoothstep5(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

// Offset from c to p: minimum image on periodic axes.
std::array<double, 4> offset(const GridManifold& m, const Point& c, const Point& p) {
  std::array<double, 4> d{};
  for (int a = 0; a < m.dim(); ++a) d[a] = m.axes()[a].delta(c[a], p[a]);
  return d;
}

double side_of(const GridManifold& m) {
  if (m.topology() == Topology::torus) return std::get<TorusSpec>(m.spec()).side;
  return 2.0 * std::get<StereoBallSpec>(m.spec()).cutoff;
}

std::vector<double> bubble_values(const GridManifold& m, const BubbleParams& b, double lambda) {
  const int n = m.dim();
  const double side = side_of(m);
  const bool torus = m.topology() == Topology::torus;
  const double e = 0.5 * (n - 2);
  const double pi = std::numbers::pi;
  std::vector<double> u(m.vertex_count(), b.background * std::pow(lambda, e));
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Point p = m.coords(static_cast<VertexId>(i));
    for (const Point& c : b.centers) {
      const auto d = offset(m, c, p);
      double r2 = 0.0, per = 0.0;
      for (int a = 0; a < n; ++a) {
        r2 += d[a] * d[a];
        const double s = std::sin(pi * d[a] / side);
        per += s * s;
      }
      per *= (side / pi) * (side / pi);
      double rho2 = r2;
      if (torus) {
        const double s = smoothstep5((std::sqrt(r2) / side - b.blend_start) / b.blend_width);
        rho2 = (1.0 - s) * r2 + s * per;
      }
      u[i] += std::pow(2.0 * lambda / (lambda * lambda + rho2), e);
    }
  }
  return u;
}

}  // namespace

Family gen_family(const ScenarioConfig& c) {
  c.validate();
  Family f;
  f.mesh = build_mesh(c.mesh);
  const auto& m = *f.mesh;
  const int n = m.dim();
  const int K = c.k_count;
  std::vector<std::vector<double>> raw(K);
  std::optional<std::vector<double>> limit;

  switch (c.kind) {
    case ScenarioKind::smooth_convergent: {
      const double side = side_of(m);
      const double w = 2.0 * std::numbers::pi / side;
      std::mt19937_64 g(c.seed);
      const double ph0 = side * uniform01(g), ph1 = side * uniform01(g);
      std::vector<double> base(m.vertex_count()), pert(m.vertex_count());
      for (std::size_t i = 0; i < base.size(); ++i) {
        const Point p = m.coords(static_cast<VertexId>(i));
        base[i] = 1.0 + c.smooth.amplitude * std::cos(w * p[0]) * std::cos(w * p[1]);
        pert[i] = c.smooth.perturbation * std::cos(w * (p[0] + ph0)) * std::cos(w * (p[n - 1] + ph1));
      }
      for (int k = 0; k < K; ++k) {
        const double s = std::ldexp(1.0, -(k + 1));
        raw[k].resize(base.size());
        for (std::size_t i = 0; i < base.size(); ++i) raw[k][i] = base[i] * (1.0 + s * pert[i]);
        f.parameters.push_back(s);
      }
      limit = std::move(base);
      break;
    }
    case ScenarioKind::single_bubble:
    case ScenarioKind::two_bubble: {
      const double reach = m.topology() == Topology::torus ? c.bubble.blend_start * side_of(m)
                                                           : 0.5 * std::get<StereoBallSpec>(m.spec()).cutoff;
      if (c.bubble.lambdas.front() > reach)
        fail(ErrorCode::chart_overflow, "bubble scale " + format_double(c.bubble.lambdas.front()) +
                                            " exceeds the chart reach " + format_double(reach));
      for (int k = 0; k < K; ++k) {
        raw[k] = bubble_values(m, c.bubble, c.bubble.lambdas[k]);
        f.parameters.push_back(c.bubble.lambdas[k]);
      }
      break;
    }
    case ScenarioKind::dumbbell: {
      const auto& d = c.dumbbell;
      std::vector<double> lobe(m.vertex_count(), 0.0);
      for (std::size_t i = 0; i < lobe.size(); ++i) {
        const Point p = m.coords(static_cast<VertexId>(i));
        for (const Point& l : d.lobes) {
          const double dist = m.base_distance(l, p);
          lobe[i] = std::max(lobe[i], 1.0 - smoothstep5((dist - d.lobe_radius) / d.lobe_transition));
        }
      }
      for (int k = 0; k < K; ++k) {
        raw[k].resize(lobe.size());
        for (std::size_t i = 0; i < lobe.size(); ++i) raw[k][i] = d.deltas[k] + (1.0 - d.deltas[k]) * lobe[i];
        f.parameters.push_back(d.deltas[k]);
      }
      break;
    }
    case ScenarioKind::cylinder_exact: {
      const auto& cy = c.cylinder;
      for (int k = 0; k < K; ++k) {
        std::mt19937_64 g(c.seed + static_cast<std::uint64_t>(k));
        const double s = cy.perturbation * std::ldexp(1.0, -k);
        raw[k].resize(m.vertex_count());
        for (std::size_t i = 0; i < raw[k].size(); ++i) {
          const double t = m.coords(static_cast<VertexId>(i))[0];
          double v = cy.amplitude;
          if (cy.mode == "decaying") v *= std::exp(-t);
          else if (cy.mode == "growing") v *= std::exp(t);
          raw[k][i] = v * (1.0 + s * (2.0 * uniform01(g) - 1.0));
        }
        f.parameters.push_back(s);
      }
      break;
    }
  }

  for (int k = 0; k < K; ++k) {
    ConformalField u(f.mesh, std::move(raw[k]));
    if (c.normalize) {
      auto nz = normalize_volume(u);
      f.factors.push_back(nz.factor);
      f.fields.push_back(std::move(nz.field));
    } else {
      f.factors.push_back(1.0);
      f.fields.push_back(std::move(u));
    }
  }
  if (limit) {
    ConformalField u(f.mesh, std::move(*limit));
    f.limit = c.normalize ? normalize_volume(u).field : u;
  }
  (void)n;
  return f;
}

ConformalField profile_field(const MeshPtr& mesh, const std::string& kind, double param, const Point& center) {
  require(mesh != nullptr, "null mesh");
  const auto& m = *mesh;
  std::vector<double> u(m.vertex_count());
  if (kind == "constant") {
    require(param > 0.0, "constant must be positive");
    std::fill(u.begin(), u.end(), param);
  } else if (kind == "bubble") {
    require(param > 0.0, "bubble scale must be positive");
    require(m.topology() != Topology::cylinder_s3, "bubble profile needs a flat chart");
    BubbleParams b;
    b.centers = {center};
    b.background = 0.0;
    u = bubble_values(m, b, param);
  } else if (kind == "smooth") {
    require(m.topology() != Topology::cylinder_s3, "smooth profile needs a flat chart");
    require(param >= 0.0 && param < 1.0, "smooth amplitude must lie in [0, 1)");
    const double w = 2.0 * std::numbers::pi / side_of(m);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const Point p = m.coords(static_cast<VertexId>(i));
      u[i] = 1.0 + param * std::cos(w * p[0]) * std::cos(w * p[1]);
    }
  } else if (kind == "decaying" || kind == "growing") {
    require(m.topology() == Topology::cylinder_s3, "exponential modes need a cylinder");
    require(param > 0.0, "amplitude must be positive");
    const double s = kind == "decaying" ? -1.0 : 1.0;
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = param * std::exp(s * m.coords(static_cast<VertexId>(i))[0]);
  } else {
    fail(ErrorCode::invalid_argument, "unknown profile '" + kind + "'");
  }
  return ConformalField(mesh, std::move(u));
}

// ---------------------------------------------------------------- threshold

namespace {

ThresholdReport threshold_from_ratios(std::vector<double> ratios, int n) {
  ThresholdReport t;
  const int K = static_cast<int>(ratios.size());
  t.ratios = std::move(ratios);
  t.tail_begin = K - tail_length(K);
  t.tail_ratio = std::numeric_limits<double>::infinity();
  for (int k = t.tail_begin; k < K; ++k) t.tail_ratio = std::min(t.tail_ratio, t.ratios[k]);
  t.yamabe = yamabe_constant(n);
  t.yamabe_sixth = t.yamabe / 6.0;
  t.below_yamabe = t.tail_ratio < t.yamabe;
  t.below_yamabe_sixth = t.tail_ratio < t.yamabe_sixth;
  t.rel_dev_yamabe = (t.tail_ratio - t.yamabe) / t.yamabe;
  t.rel_dev_yamabe_sixth = (t.tail_ratio - t.yamabe_sixth) / t.yamabe_sixth;
  return t;
}

}  // namespace

ThresholdReport threshold_check(std::span<const ConformalField> family, int n) {
  require(!family.empty(), "family must be nonempty");
  std::vector<double> ratios(family.size());
  parallel_for(family.size(), [&](std::size_t k) { ratios[k] = heat_invariants(family[k]).ratio(); });
  return threshold_from_ratios(std::move(ratios), n);
}

bool RunReport::all_checks_pass() const {
  if (!complete) return false;
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

// ---------------------------------------------------------------- pipeline

namespace {

void add_check(RunReport& r, std::string name, double value, double tol, const std::string& rel) {
  bool pass = false;
  if (rel == "<=") pass = value <= tol;
  else if (rel == ">=") pass = value >= tol;
  else if (rel == "<") pass = value < tol;
  else if (rel == "==") pass = value == tol;
  r.checks.push_back({std::move(name), value, tol, rel, pass});
}

// Largest successive ratio x[i+1]/x[i]; below 1 means strictly decreasing.
double max_step_ratio(const std::vector<double>& x) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < x.size(); ++i) worst = std::max(worst, x[i] / x[i - 1]);
  return worst;
}

}  // namespace

std::vector<VertexId> scan_centers(const ConformalField& last, int per_axis, int peaks) {
  require(per_axis >= 1 && peaks >= 0, "scan counts out of range");
  const auto& m = last.mesh();
  const int n = m.dim();
  std::vector<VertexId> out;
  std::vector<std::vector<int>> idx(n);
  for (int a = 0; a < n; ++a) {
    const auto& ax = m.axes()[a];
    const double lo = ax.nodes.front();
    const double span = ax.kind == AxisKind::periodic ? ax.period : ax.nodes.back() - ax.nodes.front();
    for (int j = 0; j < per_axis; ++j) {
      const double x = lo + span * (j + 0.5) / per_axis;
      auto it = std::lower_bound(ax.nodes.begin(), ax.nodes.end(), x);
      int i = static_cast<int>(it - ax.nodes.begin());
      if (i == ax.count() || (i > 0 && x - ax.nodes[i - 1] < ax.nodes[i] - x)) --i;
      idx[a].push_back(std::clamp(i, 0, ax.count() - 1));
    }
  }
  std::array<int, 4> pos{};
  while (true) {
    std::array<int, 4> l{};
    for (int a = 0; a < n; ++a) l[a] = idx[a][pos[a]];
    const VertexId v = m.vertex_at(l);
    if (v != kNoVertex) out.push_back(v);
    int a = 0;
    for (; a < n; ++a) {
      if (++pos[a] < per_axis) break;
      pos[a] = 0;
    }
    if (a == n) break;
  }
  if (peaks > 0) {
    const auto dens = curvature_energy_density(last);
    std::vector<VertexId> maxima;
    for (std::size_t i = 0; i < dens.size(); ++i) {
      const auto v = static_cast<VertexId>(i);
      if (m.is_boundary(v)) continue;
      bool top = dens[i] > 0.0;
      for (int a = 0; a < n && top; ++a)
        for (int dir : {-1, 1}) {
          const VertexId w = m.neighbor(v, a, dir);
          if (w != kNoVertex && w != v && dens[w] > dens[i]) top = false;
        }
      if (top) maxima.push_back(v);
    }
    std::stable_sort(maxima.begin(), maxima.end(), [&](VertexId a, VertexId b) { return dens[a] > dens[b]; });
    if (maxima.size() > static_cast<std::size_t>(peaks)) maxima.resize(peaks);
    out.insert(out.end(), maxima.begin(), maxima.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

std::vector<double> log_spaced(double a, double b, int count) {
  if (count == 1) return {a};
  std::vector<double> r(count);
  for (int i = 0; i < count; ++i) r[i] = a * std::pow(b / a, static_cast<double>(i) / (count - 1));
  return r;
}

double pinch_for(const ConformalField& u, VertexId center, double t) {
  const auto& m = u.mesh();
  const auto dv = conformal_volumes(u);
  const Point c = m.coords(center);
  double inner = 0.0, total = 0.0;
  for (std::size_t i = 0; i < dv.size(); ++i) {
    total += dv[i];
    if (m.base_distance(c, m.coords(static_cast<VertexId>(i))) <= t) inner += dv[i];
  }
  const double v1 = std::clamp(inner / total, 0.05, 0.95);
  return pinch_test(u, center, t, v1, 1.0 - v1).quotient;
}

VertexId nearest_vertex(const GridManifold& m, const Point& p) {
  VertexId best = kNoVertex;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m.vertex_count(); ++i) {
    const double d = m.base_distance(p, m.coords(static_cast<VertexId>(i)));
    if (d < bd) {
      bd = d;
      best = static_cast<VertexId>(i);
    }
  }
  return best;
}

void run_pipeline(const ScenarioConfig& c, RunReport& r, std::string& stage) {
  const auto& an = c.analysis;
  stage = "validate";
  c.validate();

  stage = "generate";
  Family fam = gen_family(c);
  const auto& m = *fam.mesh;
  const int n = m.dim();
  const int K = c.k_count;
  r.mesh_descriptor = mesh_descriptor_text(m);
  r.per_k.resize(K);
  for (int k = 0; k < K; ++k) {
    r.per_k[k].k = k + 1;
    r.per_k[k].parameter = fam.parameters[k];
    r.per_k[k].factor = fam.factors[k];
  }

  stage = "invariants";
  parallel_for(K, [&](std::size_t k) {
    const auto h = heat_invariants(fam.fields[k]);
    auto& rec = r.per_k[k];
    rec.volume = h.a0;
    rec.a0 = h.a0;
    rec.a1 = h.a1;
    rec.ratio = h.ratio();
    rec.r2_integral = h.r2_integral;
    const auto v = fam.fields[k].values();
    rec.min_u = *std::min_element(v.begin(), v.end());
  });
  {
    std::vector<double> ratios;
    for (const auto& rec : r.per_k) ratios.push_back(rec.ratio);
    r.threshold = threshold_from_ratios(std::move(ratios), n);
  }

  stage = "spectrum";
  if (m.vertex_count() <= an.spectrum_vertex_budget) {
    SpectrumOptions o;
    o.count = an.spectrum_count;
    o.seed = c.seed;
    o.direct_limit = an.direct_limit;
    parallel_for(K, [&](std::size_t k) { r.per_k[k].lambda1 = laplace_spectrum(fam.fields[k], o).lambda1; });
  }

  const bool flat_chart = m.topology() != Topology::cylinder_s3;

  stage = "distances";
  LandmarkSet marks;
  std::vector<FiniteMetricSpace> spaces;
  if (fam.limit) {
    marks = farthest_point_landmarks(*fam.limit, an.landmarks, an.stencil);
    spaces.resize(K);
    parallel_for(K, [&](std::size_t k) { spaces[k] = metric_on_points(fam.fields[k], marks.ids, an.stencil); });
  }

  stage = "concentration";
  std::vector<VertexId> bubble_pts;
  if (flat_chart) {
    const auto centers = scan_centers(fam.fields.back(), an.scan_points_per_axis, an.scan_peaks);
    const auto radii = log_spaced(an.radius_min, an.radius_max, an.radius_count);
    const auto prof = concentration_scan(fam.fields, centers, radii, c.thresholds.eps_detect);
    for (int k = 0; k < K; ++k)
      for (std::size_t ci = 0; ci < centers.size(); ++ci)
        for (std::size_t ri = 0; ri < radii.size(); ++ri)
          r.concentration.push_back({k + 1, centers[ci], radii[ri], prof.at(k, ci, ri)});
    bubble_pts = prof.bubble_points;
    for (VertexId b : bubble_pts) {
      BubbleRecord br;
      br.vertex = b;
      br.point = m.coords(b);
      const auto it = std::find(prof.centers.begin(), prof.centers.end(), b);
      br.tail_energy = prof.tail_energy[it - prof.centers.begin()];
      r.bubbles.push_back(br);
    }
  }

  stage = "blowup";
  const int tail = tail_length(K);
  const double merge_r = 2.0 * an.radius_min;
  std::vector<std::vector<BlowupSequence>> seqs(bubble_pts.size());
  if (!bubble_pts.empty()) {
    auto target_spec = an.blowup_target;
    target_spec.dim = n;
    const MeshPtr target = build_stereo_ball(target_spec);
    for (std::size_t b = 0; b < bubble_pts.size(); ++b) {
      const auto cand = ball_vertices(m, bubble_pts[b], merge_r);
      auto& br = r.bubbles[b];
      for (double level : an.blowup_levels) {
        BlowupSequence s;
        std::vector<ConcentrationScale> found(K);
        const auto cap = static_cast<std::size_t>(an.blowup_candidates);
        parallel_for(K, [&](std::size_t k) { found[k] = first_concentration_scale(fam.fields[k], level, cand, cap); });
        for (int k = 0; k < K; ++k) {
          s.centers.push_back(found[k].found ? found[k].center : bubble_pts[b]);
          s.scales.push_back(found[k].found ? found[k].radius : kNaN);
        }
        br.scales.push_back(s.scales);
        seqs[b].push_back(std::move(s));
      }
      const auto& s0 = seqs[b].front();
      BlowupSequence tail_seq;
      bool usable = true;
      for (int k = K - tail; k < K; ++k) {
        tail_seq.centers.push_back(s0.centers[k]);
        tail_seq.scales.push_back(s0.scales[k]);
        if (!(s0.scales[k] > 0.0)) usable = false;
      }
      if (usable) {
        const auto v = real_bubble_test(std::span(fam.fields).subspan(K - tail), tail_seq, target, an.min_floor,
                                        an.l4_floor);
        br.real = v.real;
        br.min_on_unit_ball = v.min_on_unit_ball;
        br.l4_on_unit_ball = v.l4_on_unit_ball;
      }
    }
  }

  stage = "classification";
  PairThresholds pt{c.thresholds.d, c.thresholds.d_prime, c.thresholds.d_dprime};
  auto label = [](std::size_t b, std::size_t l) { return "b" + std::to_string(b) + ":L" + std::to_string(l); };
  auto windowed_ok = [&](const BlowupSequence& s) {
    const int w = std::min(K, classification_window(K));
    for (int k = K - w; k < K; ++k)
      if (!(s.scales[k] > 0.0)) return false;
    return true;
  };
  for (std::size_t b = 0; b < seqs.size(); ++b)
    for (std::size_t l = 1; l < seqs[b].size(); ++l) {
      PairRecord p{label(b, 0), label(b, l), PairClass::indeterminate};
      if (windowed_ok(seqs[b][0]) && windowed_ok(seqs[b][l])) p.cls = classify_pair(m, seqs[b][0], seqs[b][l], pt);
      r.pairs.push_back(p);
    }
  for (std::size_t a = 0; a < seqs.size(); ++a)
    for (std::size_t b = a + 1; b < seqs.size(); ++b) {
      PairRecord p{label(a, 0), label(b, 0), PairClass::indeterminate};
      if (windowed_ok(seqs[a][0]) && windowed_ok(seqs[b][0])) p.cls = classify_pair(m, seqs[a][0], seqs[b][0], pt);
      r.pairs.push_back(p);
    }

  stage = "necks";
  if (an.neck_r_outer > 0.0 && !bubble_pts.empty()) {
    std::vector<NeckRecord> recs(K * bubble_pts.size());
    parallel_for(recs.size(), [&](std::size_t i) {
      const std::size_t k = i / bubble_pts.size(), b = i % bubble_pts.size();
      recs[i] = {static_cast<int>(k) + 1, static_cast<int>(b), an.neck_r_inner, an.neck_r_outer,
                 neck_stats(fam.fields[k], bubble_pts[b], an.neck_r_inner, an.neck_r_outer, an.neck_landmarks,
                            an.neck_stencil)};
    });
    r.necks = std::move(recs);
  }

  stage = "pinch";
  {
    VertexId pc = kNoVertex;
    double t = an.pinch_scale;
    if (c.kind == ScenarioKind::dumbbell) {
      pc = nearest_vertex(m, c.dumbbell.lobes.front());
      if (t <= 0.0) t = 3.0 * c.dumbbell.lobe_radius;
    } else if (!bubble_pts.empty() && (t > 0.0 || an.neck_r_outer > 0.0)) {
      pc = bubble_pts.front();
      if (t <= 0.0) t = an.neck_r_outer;
    }
    if (pc != kNoVertex)
      parallel_for(K, [&](std::size_t k) { r.per_k[k].pinch_quotient = pinch_for(fam.fields[k], pc, t); });
  }

  stage = "gaps";
  std::vector<std::uint8_t> excluded_vertex(m.vertex_count(), 0);
  for (VertexId b : bubble_pts)
    for (VertexId v : ball_vertices(m, b, an.excluded_radius)) excluded_vertex[v] = 1;
  if (fam.limit) {
    std::vector<std::uint8_t> excl;
    for (VertexId id : marks.ids) excl.push_back(excluded_vertex[id]);
    const auto rep = uniform_convergence_report(spaces, marks.space, excl);
    const double ex = exponents(n).length;
    const auto lim = fam.limit->values();
    for (int k = 0; k < K; ++k) {
      auto& rec = r.per_k[k];
      rec.local_gap = rep.local_gaps[k];
      rec.global_gap = rep.global_gaps[k];
      rec.gh_upper = gh_upper_shared(spaces[k], marks.space);
      double eps = 0.0;
      for (std::size_t i = 0; i < lim.size(); ++i)
        eps = std::max(eps, std::abs(std::pow(fam.fields[k][static_cast<VertexId>(i)] / lim[i], ex) - 1.0));
      rec.construction_gap = eps * marks.space.diameter();
    }
  }
  for (int k = 0; k < K; ++k) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m.vertex_count(); ++i)
      if (!excluded_vertex[i]) lo = std::min(lo, fam.fields[k][static_cast<VertexId>(i)]);
    r.per_k[k].background_min = lo;
  }

  stage = "cylinder";
  if (m.topology() == Topology::cylinder_s3) {
    r.cylinder.resize(K);
    const auto bands = cylinder_bands(m, c.thresholds.band_L);
    parallel_for(K, [&](std::size_t k) {
      auto& rec = r.cylinder[k];
      rec.k = static_cast<int>(k) + 1;
      rec.circles = three_circles_check(fam.fields[k], c.thresholds.band_L, c.thresholds.eps_cylinder);
      if (bands.size() >= 4) rec.decay = singularity_decay_profile(fam.fields[k], c.thresholds.band_L,
                                                                   c.thresholds.p_sobolev);
    });
  }

  stage = "case";
  if (!flat_chart) {
    r.case_label = "not_applicable";
  } else {
    int real = 0;
    for (const auto& b : r.bubbles) real += b.real ? 1 : 0;
    const double bg0 = r.per_k.front().background_min, bg1 = r.per_k.back().background_min;
    const bool vanishing = bg1 < an.background_floor && bg1 < bg0;
    if (!vanishing && real == 0) r.case_label = "case1";
    else if (vanishing && real == 1) r.case_label = "case2";
    else if (vanishing && real > 1) r.case_label = "multi_bubble";
    else r.case_label = "indeterminate";
  }

  stage = "checks";
  const auto& as = c.assertions;
  auto series = [&](double KRecord::*f) {
    std::vector<double> v;
    for (const auto& rec : r.per_k) v.push_back(rec.*f);
    return v;
  };
  if (c.normalize) {
    double worst = 0.0;
    for (const auto& rec : r.per_k) worst = std::max(worst, std::abs(rec.volume - 1.0));
    add_check(r, "volume_normalized", worst, as.volume_tol, "<=");
  }
  switch (c.kind) {
    case ScenarioKind::smooth_convergent: {
      add_check(r, "local_gap_decreasing", max_step_ratio(series(&KRecord::local_gap)), 1.0, "<");
      const auto& last = r.per_k.back();
      add_check(r, "final_gap_over_construction_gap", last.local_gap / last.construction_gap, as.gap_factor, "<=");
      add_check(r, "final_gh_upper", last.gh_upper, as.gh_tol, "<=");
      double band = 0.0;
      const double r1 = r.per_k.front().ratio;
      for (const auto& rec : r.per_k) band = std::max(band, std::abs(rec.ratio - r1) / std::max(std::abs(r1), 1e-12));
      add_check(r, "ratio_within_band_of_k1", band, as.smooth_ratio_band, "<=");
      add_check(r, "case1", r.case_label == "case1" ? 1.0 : 0.0, 1.0, "==");
      break;
    }
    case ScenarioKind::single_bubble: {
      add_check(r, "bubble_count", static_cast<double>(r.bubbles.size()), 1.0, "==");
      int bad = 0;
      for (const auto& p : r.pairs) bad += p.cls == PairClass::essentially_same ? 0 : 1;
      add_check(r, "pairs_not_essentially_same", bad, 0.0, "==");
      if (!r.necks.empty()) {
        const auto& n2 = r.necks[1 * bubble_pts.size()].stats;
        const auto& nK = r.necks[(K - 1) * bubble_pts.size()].stats;
        add_check(r, "neck_volume_drop_k2_to_K", n2.volume / nK.volume, as.neck_drop, ">=");
        add_check(r, "neck_diameter_drop_k2_to_K", n2.diameter / nK.diameter, as.neck_drop, ">=");
      }
      add_check(r, "tail_ratio_rel_dev_from_Y_over_6", std::abs(r.threshold.rel_dev_yamabe_sixth), as.ratio_tol, "<=");
      add_check(r, "case2", r.case_label == "case2" ? 1.0 : 0.0, 1.0, "==");
      break;
    }
    case ScenarioKind::two_bubble: {
      add_check(r, "bubble_count", static_cast<double>(r.bubbles.size()), 2.0, "==");
      int sep = 0;
      for (const auto& p : r.pairs)
        if (p.a.substr(0, 2) != p.b.substr(0, 2)) sep += p.cls == PairClass::separated ? 1 : 0;
      add_check(r, "separated_pairs", sep, 1.0, "==");
      break;
    }
    case ScenarioKind::dumbbell: {
      const auto lam = series(&KRecord::lambda1);
      if (!std::isnan(lam.front())) {
        add_check(r, "lambda1_decreasing", max_step_ratio(lam), 1.0, "<");
        add_check(r, "final_over_initial_lambda1", lam.back() / lam.front(), as.lambda_drop, "<=");
      }
      const auto pq = series(&KRecord::pinch_quotient);
      add_check(r, "pinch_quotient_decreasing", max_step_ratio(pq), 1.0, "<");
      if (!std::isnan(lam.front())) {
        double worst = std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k) worst = std::min(worst, pq[k] / lam[k]);
        add_check(r, "pinch_over_lambda1_min", worst, 1.0, ">=");
      }
      break;
    }
    case ScenarioKind::cylinder_exact: {
      const auto& last = r.cylinder.back();
      if (c.cylinder.mode == "constant") {
        add_check(r, "hypothesis_met", last.circles.hypothesis_met ? 1.0 : 0.0, 0.0, "==");
        add_check(r, "trichotomy_holds", last.circles.trichotomy_holds() ? 1.0 : 0.0, 0.0, "==");
      } else {
        int bad = 0;
        for (const auto& rec : r.cylinder) bad += rec.circles.trichotomy_holds() && rec.circles.implications_hold() ? 0 : 1;
        add_check(r, "members_failing_clauses", bad, 0.0, "==");
      }
      if (c.cylinder.mode == "decaying" && !last.decay.energies.empty()) {
        const double want = std::exp(-2.0 * c.thresholds.band_L);
        add_check(r, "decay_rate_rel_error", std::abs(last.decay.rate / want - 1.0), as.decay_rate_tol, "<=");
        add_check(r, "series_summable", last.decay.summable ? 1.0 : 0.0, 1.0, "==");
      }
      break;
    }
  }
  stage.clear();
}

// ---------------------------------------------------------------- outputs

void write_outputs(const ScenarioConfig& c, const RunReport& r) {
  namespace fs = std::filesystem;
  const fs::path dir(c.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io_error, "cannot create " + dir.string() + ": " + ec.message());

  {
    CsvWriter csv(dir / "per_k.csv",
                  {"k", "parameter", "factor", "volume", "a0", "a1", "ratio", "r2_integral", "lambda1",
                   "pinch_quotient", "local_gap", "global_gap", "gh_upper", "construction_gap", "background_min",
                   "min_u"});
    for (const auto& k : r.per_k) {
      csv.cell(k.k);
      for (double x : {k.parameter, k.factor, k.volume, k.a0, k.a1, k.ratio, k.r2_integral, k.lambda1,
                       k.pinch_quotient, k.local_gap, k.global_gap, k.gh_upper, k.construction_gap,
                       k.background_min, k.min_u})
        csv.cell(x);
      csv.end_row();
    }
  }
  {
    CsvWriter csv(dir / "concentration.csv", {"k", "center", "radius", "energy"});
    for (const auto& row : r.concentration) {
      csv.cell(row.k).cell(static_cast<std::int64_t>(row.center)).cell(row.radius).cell(row.energy);
      csv.end_row();
    }
  }
  {
    CsvWriter csv(dir / "bubbles.csv", {"bubble", "vertex", "x0", "x1", "x2", "x3", "tail_energy", "real"});
    for (std::size_t b = 0; b < r.bubbles.size(); ++b) {
      const auto& br = r.bubbles[b];
      csv.cell(static_cast<std::int64_t>(b)).cell(static_cast<std::int64_t>(br.vertex));
      for (double x : br.point) csv.cell(x);
      csv.cell(br.tail_energy).cell(br.real ? 1 : 0);
      csv.end_row();
    }
  }
  {
    CsvWriter csv(dir / "blowup_scales.csv", {"bubble", "level", "k", "scale"});
    for (std::size_t b = 0; b < r.bubbles.size(); ++b)
      for (std::size_t l = 0; l < r.bubbles[b].scales.size(); ++l)
        for (std::size_t k = 0; k < r.bubbles[b].scales[l].size(); ++k) {
          csv.cell(static_cast<std::int64_t>(b)).cell(static_cast<std::int64_t>(l));
          csv.cell(static_cast<std::int64_t>(k + 1)).cell(r.bubbles[b].scales[l][k]);
          csv.end_row();
        }
  }
  {
    CsvWriter csv(dir / "pairs.csv", {"a", "b", "class"});
    for (const auto& p : r.pairs) {
      csv.cell(p.a).cell(p.b).cell(std::string(pair_class_name(p.cls)));
      csv.end_row();
    }
  }
  {
    CsvWriter csv(dir / "necks.csv",
                  {"k", "bubble", "r_inner", "r_outer", "volume", "diameter", "covering_radius", "vertices"});
    for (const auto& n : r.necks) {
      csv.cell(n.k).cell(n.bubble).cell(n.r_inner).cell(n.r_outer).cell(n.stats.volume).cell(n.stats.diameter);
      csv.cell(n.stats.covering_radius).cell(static_cast<std::int64_t>(n.stats.vertices));
      csv.end_row();
    }
  }
  {
    CsvWriter csv(dir / "cylinder.csv",
                  {"k", "e1", "e2", "e3", "curvature_energy", "hypothesis_met", "clause1", "clause2", "clause3",
                   "clause3_symmetric", "decay_rate", "summable"});
    for (const auto& cy : r.cylinder) {
      const auto& v = cy.circles;
      csv.cell(cy.k).cell(v.e1).cell(v.e2).cell(v.e3).cell(v.curvature_energy).cell(v.hypothesis_met ? 1 : 0);
      csv.cell(v.clause1 ? 1 : 0).cell(v.clause2 ? 1 : 0).cell(v.clause3 ? 1 : 0).cell(v.clause3_symmetric ? 1 : 0);
      csv.cell(cy.decay.rate).cell(cy.decay.summable ? 1 : 0);
      csv.end_row();
    }
  }
  {
    CsvWriter csv(dir / "checks.csv", {"check", "value", "relation", "tolerance", "pass"});
    for (const auto& ch : r.checks) {
      csv.cell(ch.name).cell(ch.value).cell(ch.relation).cell(ch.tolerance).cell(ch.pass ? 1 : 0);
      csv.end_row();
    }
  }

  std::vector<double> ks;
  for (const auto& k : r.per_k) ks.push_back(k.k);
  auto dat = [&](const char* name, const char* what, double KRecord::*f) {
    std::vector<double> y;
    for (const auto& k : r.per_k) y.push_back(k.*f);
    write_dat(dir / name, std::string("k ") + what, ks, y);
  };
  dat("ratio.dat", "a1/sqrt(a0)", &KRecord::ratio);
  dat("lambda1.dat", "lambda1", &KRecord::lambda1);
  dat("pinch.dat", "pinch_quotient", &KRecord::pinch_quotient);
  dat("gap.dat", "local_gap", &KRecord::local_gap);
  dat("gh.dat", "gh_upper", &KRecord::gh_upper);
  if (!r.necks.empty()) {
    std::vector<double> kk, vol, dia;
    for (const auto& n : r.necks)
      if (n.bubble == 0) {
        kk.push_back(n.k);
        vol.push_back(n.stats.volume);
        dia.push_back(n.stats.diameter);
      }
    write_dat(dir / "neck_volume.dat", "k neck_volume", kk, vol);
    write_dat(dir / "neck_diameter.dat", "k neck_diameter", kk, dia);
  }
  if (!r.cylinder.empty() && !r.cylinder.back().decay.energies.empty()) {
    const auto& e = r.cylinder.back().decay.energies;
    std::vector<double> idx;
    for (std::size_t i = 0; i < e.size(); ++i) idx.push_back(static_cast<double>(i));
    write_dat(dir / "band_energy.dat", "band energy", idx, e);
  }

  std::ofstream(dir / "report.json") << report_to_text(r);
  std::ofstream(dir / "summary.txt") << render_summary(r);
  std::ofstream(dir / "config.json") << config_to_text(c);
}

}  // namespace

RunReport run_scenario(const ScenarioConfig& c, bool write) {
  RunReport r;
  r.kind = scenario_kind_name(c.kind);
  r.seed = c.seed;
  std::string stage;
  try {
    run_pipeline(c, r, stage);
    r.complete = true;
  } catch (const std::exception& e) {
    r.complete = false;
    r.failed_stage = stage;
    r.error = e.what();
  }
  if (write) write_outputs(c, r);
  return r;
}

// ---------------------------------------------------------------- report text

std::string report_to_text(const RunReport& r) {
  json j;
  j["format"] = "conflab-report";
  j["schema_version"] = r.schema_version;
  j["kind"] = r.kind;
  j["seed"] = r.seed;
  j["complete"] = r.complete;
  j["failed_stage"] = r.failed_stage;
  j["error"] = r.error;
  j["mesh"] = r.mesh_descriptor.empty() ? json() : json::parse(r.mesh_descriptor);
  j["case"] = r.case_label;
  json pk = json::array();
  for (const auto& k : r.per_k)
    pk.push_back({{"k", k.k},
                  {"parameter", k.parameter},
                  {"factor", k.factor},
                  {"volume", k.volume},
                  {"a0", k.a0},
                  {"a1", k.a1},
                  {"ratio", k.ratio},
                  {"r2_integral", k.r2_integral},
                  {"lambda1", k.lambda1},
                  {"pinch_quotient", k.pinch_quotient},
                  {"local_gap", k.local_gap},
                  {"global_gap", k.global_gap},
                  {"gh_upper", k.gh_upper},
                  {"construction_gap", k.construction_gap},
                  {"background_min", k.background_min},
                  {"min_u", k.min_u}});
  j["per_k"] = pk;
  json nk = json::array();
  for (const auto& n : r.necks)
    nk.push_back({{"k", n.k},
                  {"bubble", n.bubble},
                  {"r_inner", n.r_inner},
                  {"r_outer", n.r_outer},
                  {"volume", n.stats.volume},
                  {"diameter", n.stats.diameter},
                  {"covering_radius", n.stats.covering_radius},
                  {"vertices", n.stats.vertices}});
  j["necks"] = nk;
  json bb = json::array();
  for (const auto& b : r.bubbles)
    bb.push_back({{"vertex", b.vertex},
                  {"point", b.point},
                  {"tail_energy", b.tail_energy},
                  {"real", b.real},
                  {"min_on_unit_ball", b.min_on_unit_ball},
                  {"l4_on_unit_ball", b.l4_on_unit_ball},
                  {"scales", b.scales}});
  j["bubbles"] = bb;
  json pp = json::array();
  for (const auto& p : r.pairs) pp.push_back({{"a", p.a}, {"b", p.b}, {"class", pair_class_name(p.cls)}});
  j["pairs"] = pp;
  json cy = json::array();
  for (const auto& c : r.cylinder) {
    const auto& v = c.circles;
    const auto& d = c.decay;
    cy.push_back({{"k", c.k},
                  {"e1", v.e1},
                  {"e2", v.e2},
                  {"e3", v.e3},
                  {"curvature_energy", v.curvature_energy},
                  {"metric_certified", v.metric_certified},
                  {"hypothesis_met", v.hypothesis_met},
                  {"clause1_premise", v.clause1_premise},
                  {"clause1", v.clause1},
                  {"clause2_premise", v.clause2_premise},
                  {"clause2", v.clause2},
                  {"clause3", v.clause3},
                  {"clause3_symmetric", v.clause3_symmetric},
                  {"energies", d.energies},
                  {"ratios", d.ratios},
                  {"rate", d.rate},
                  {"decaying", d.decaying},
                  {"growth_detected", d.growth_detected},
                  {"p", d.p},
                  {"series_partial", d.series_partial},
                  {"series_tail_bound", d.series_tail_bound},
                  {"summable", d.summable}});
  }
  j["cylinder"] = cy;
  const auto& t = r.threshold;
  j["threshold"] = {{"ratios", t.ratios},
                    {"tail_begin", t.tail_begin},
                    {"tail_ratio", t.tail_ratio},
                    {"yamabe", t.yamabe},
                    {"yamabe_sixth", t.yamabe_sixth},
                    {"below_yamabe", t.below_yamabe},
                    {"below_yamabe_sixth", t.below_yamabe_sixth},
                    {"rel_dev_yamabe", t.rel_dev_yamabe},
                    {"rel_dev_yamabe_sixth", t.rel_dev_yamabe_sixth}};
  json ch = json::array();
  for (const auto& c : r.checks)
    ch.push_back({{"name", c.name}, {"value", c.value}, {"relation", c.relation}, {"tolerance", c.tolerance},
                  {"pass", c.pass}});
  j["checks"] = ch;
  return j.dump(2) + "\n";
}

namespace {

std::vector<double> nums(const json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(num(x));
  return v;
}

PairClass parse_pair_class(const std::string& s) {
  for (auto c : {PairClass::essentially_same, PairClass::separated, PairClass::nested, PairClass::indeterminate})
    if (s == pair_class_name(c)) return c;
  fail(ErrorCode::format_error, "unknown pair class '" + s + "'");
}

}  // namespace

RunReport report_from_text(const std::string& text) {
  RunReport r;
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "conflab-report") fail(ErrorCode::format_error, "not a conflab report");
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != 1) fail(ErrorCode::format_error, "unsupported report schema_version");
    r.kind = j.at("kind").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.complete = j.at("complete").get<bool>();
    r.failed_stage = j.at("failed_stage").get<std::string>();
    r.error = j.at("error").get<std::string>();
    if (!j.at("mesh").is_null()) r.mesh_descriptor = j["mesh"].dump(2) + "\n";
    r.case_label = j.at("case").get<std::string>();
    for (const auto& x : j.at("per_k")) {
      KRecord k;
      k.k = x.at("k").get<int>();
      read_num(x, "parameter", k.parameter);
      read_num(x, "factor", k.factor);
      read_num(x, "volume", k.volume);
      read_num(x, "a0", k.a0);
      read_num(x, "a1", k.a1);
      read_num(x, "ratio", k.ratio);
      read_num(x, "r2_integral", k.r2_integral);
      read_num(x, "lambda1", k.lambda1);
      read_num(x, "pinch_quotient", k.pinch_quotient);
      read_num(x, "local_gap", k.local_gap);
      read_num(x, "global_gap", k.global_gap);
      read_num(x, "gh_upper", k.gh_upper);
      read_num(x, "construction_gap", k.construction_gap);
      read_num(x, "background_min", k.background_min);
      read_num(x, "min_u", k.min_u);
      r.per_k.push_back(k);
    }
    for (const auto& x : j.at("necks")) {
      NeckRecord n;
      n.k = x.at("k").get<int>();
      n.bubble = x.at("bubble").get<int>();
      read_num(x, "r_inner", n.r_inner);
      read_num(x, "r_outer", n.r_outer);
      read_num(x, "volume", n.stats.volume);
      read_num(x, "diameter", n.stats.diameter);
      read_num(x, "covering_radius", n.stats.covering_radius);
      n.stats.vertices = x.at("vertices").get<std::size_t>();
      r.necks.push_back(n);
    }
    for (const auto& x : j.at("bubbles")) {
      BubbleRecord b;
      b.vertex = x.at("vertex").get<VertexId>();
      b.point = point_from(x.at("point"));
      read_num(x, "tail_energy", b.tail_energy);
      b.real = x.at("real").get<bool>();
      b.min_on_unit_ball = nums(x.at("min_on_unit_ball"));
      b.l4_on_unit_ball = nums(x.at("l4_on_unit_ball"));
      for (const auto& s : x.at("scales")) b.scales.push_back(nums(s));
      r.bubbles.push_back(b);
    }
    for (const auto& x : j.at("pairs"))
      r.pairs.push_back({x.at("a").get<std::string>(), x.at("b").get<std::string>(),
                         parse_pair_class(x.at("class").get<std::string>())});
    for (const auto& x : j.at("cylinder")) {
      CylinderRecord c;
      c.k = x.at("k").get<int>();
      auto& v = c.circles;
      read_num(x, "e1", v.e1);
      read_num(x, "e2", v.e2);
      read_num(x, "e3", v.e3);
      read_num(x, "curvature_energy", v.curvature_energy);
      v.metric_certified = x.at("metric_certified").get<bool>();
      v.hypothesis_met = x.at("hypothesis_met").get<bool>();
      v.clause1_premise = x.at("clause1_premise").get<bool>();
      v.clause1 = x.at("clause1").get<bool>();
      v.clause2_premise = x.at("clause2_premise").get<bool>();
      v.clause2 = x.at("clause2").get<bool>();
      v.clause3 = x.at("clause3").get<bool>();
      v.clause3_symmetric = x.at("clause3_symmetric").get<bool>();
      auto& d = c.decay;
      d.energies = nums(x.at("energies"));
      d.ratios = nums(x.at("ratios"));
      read_num(x, "rate", d.rate);
      d.decaying = x.at("decaying").get<bool>();
      d.growth_detected = x.at("growth_detected").get<bool>();
      read_num(x, "p", d.p);
      read_num(x, "series_partial", d.series_partial);
      read_num(x, "series_tail_bound", d.series_tail_bound);
      d.summable = x.at("summable").get<bool>();
      r.cylinder.push_back(c);
    }
    const auto& t = j.at("threshold");
    r.threshold.ratios = nums(t.at("ratios"));
    r.threshold.tail_begin = t.at("tail_begin").get<int>();
    read_num(t, "tail_ratio", r.threshold.tail_ratio);
    read_num(t, "yamabe", r.threshold.yamabe);
    read_num(t, "yamabe_sixth", r.threshold.yamabe_sixth);
    r.threshold.below_yamabe = t.at("below_yamabe").get<bool>();
    r.threshold.below_yamabe_sixth = t.at("below_yamabe_sixth").get<bool>();
    read_num(t, "rel_dev_yamabe", r.threshold.rel_dev_yamabe);
    read_num(t, "rel_dev_yamabe_sixth", r.threshold.rel_dev_yamabe_sixth);
    for (const auto& x : j.at("checks")) {
      Check c;
      c.name = x.at("name").get<std::string>();
      read_num(x, "value", c.value);
      c.relation = x.at("relation").get<std::string>();
      read_num(x, "tolerance", c.tolerance);
      c.pass = x.at("pass").get<bool>();
      r.checks.push_back(c);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::format_error, std::string("bad report: ") + e.what());
  }
  return r;
}

std::string render_summary(const RunReport& r) {
  std::ostringstream o;
  auto f = [](double x) { return format_double(x); };
  o << "scenario " << r.kind << " (seed " << r.seed << ")\n";
  o << "status   " << (r.complete ? "complete" : "incomplete") << "\n";
  if (!r.complete) o << "failed   stage " << r.failed_stage << ": " << r.error << "\n";
  o << "case     " << r.case_label << "\n\n";
  o << "k  parameter  volume  a1/sqrt(a0)  lambda1  pinch  local_gap  gh_upper  background_min\n";
  for (const auto& k : r.per_k)
    o << k.k << "  " << f(k.parameter) << "  " << f(k.volume) << "  " << f(k.ratio) << "  " << f(k.lambda1) << "  "
      << f(k.pinch_quotient) << "  " << f(k.local_gap) << "  " << f(k.gh_upper) << "  " << f(k.background_min)
      << "\n";
  if (!r.per_k.empty()) {
    const auto& t = r.threshold;
    o << "\nthreshold: tail a1/sqrt(a0) = " << f(t.tail_ratio) << " over k >= " << t.tail_begin + 1 << "\n";
    o << "  vs Y       = " << f(t.yamabe) << ": " << (t.below_yamabe ? "below" : "not below")
      << " (rel. dev. " << f(t.rel_dev_yamabe) << ")\n";
    o << "  vs Y/6     = " << f(t.yamabe_sixth) << ": " << (t.below_yamabe_sixth ? "below" : "not below")
      << " (rel. dev. " << f(t.rel_dev_yamabe_sixth) << ")\n";
  }
  if (!r.bubbles.empty()) {
    o << "\nbubbles\n";
    for (std::size_t b = 0; b < r.bubbles.size(); ++b) {
      const auto& br = r.bubbles[b];
      o << "  b" << b << " vertex " << br.vertex << " at (";
      for (int a = 0; a < 4; ++a) o << (a ? ", " : "") << f(br.point[a]);
      o << ") tail energy " << f(br.tail_energy) << (br.real ? " real" : " not real") << "\n";
    }
  }
  if (!r.pairs.empty()) {
    o << "\npairs\n";
    for (const auto& p : r.pairs) o << "  " << p.a << " ~ " << p.b << ": " << pair_class_name(p.cls) << "\n";
  }
  if (!r.necks.empty()) {
    o << "\nnecks (k bubble volume diameter)\n";
    for (const auto& n : r.necks)
      o << "  " << n.k << " b" << n.bubble << " " << f(n.stats.volume) << " " << f(n.stats.diameter) << "\n";
  }
  if (!r.cylinder.empty()) {
    o << "\ncylinder (k E1 E2 E3 hypothesis clause1 clause2 clause3 clause3_sym rate summable)\n";
    for (const auto& c : r.cylinder) {
      const auto& v = c.circles;
      o << "  " << c.k << " " << f(v.e1) << " " << f(v.e2) << " " << f(v.e3) << " " << v.hypothesis_met << " "
        << v.clause1 << " " << v.clause2 << " " << v.clause3 << " " << v.clause3_symmetric << " " << f(c.decay.rate)
        << " " << c.decay.summable << "\n";
    }
  }
  o << "\nchecks\n";
  for (const auto& c : r.checks)
    o << "  " << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << f(c.value) << " " << c.relation << " "
      << f(c.tolerance) << "\n";
  o << (r.all_checks_pass() ? "\nall checks passed\n" : "\nsome checks failed\n");
  return o.str();
}

}  // namespace conflab
