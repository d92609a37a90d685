// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
#include "conflab/conflab.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <limits>
#include <string>

#include "conflab/io.hpp"
#include "conflab/scenario.hpp"
#include "conflab/spectral.hpp"

struct conflab_mesh {
  conflab::MeshPtr mesh;
};
struct conflab_field {
  conflab::ConformalField field;
};
struct conflab_spectrum {
  conflab::SpectrumResult result;
};
struct conflab_report {
  conflab::RunReport report;
  std::string summary;
  std::string text;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_scratch;

template <class F>
conflab_status guard(F&& f) {
  try {
    f();
    g_error.clear();
    return CONFLAB_OK;
  } catch (const conflab::Error& e) {
    g_error = e.what();
    return static_cast<conflab_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_error = "out of memory";
    return CONFLAB_E_BUDGET_EXCEEDED;
  } catch (const std::exception& e) {
    g_error = e.what();
    return CONFLAB_E_INTERNAL;
  } catch (...) {
    g_error = "unknown error";
    return CONFLAB_E_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) conflab::fail(conflab::ErrorCode::invalid_argument, std::string("null ") + what);
}

conflab::Point to_point(const double* p) {
  conflab::Point q{};
  if (p)
    for (int i = 0; i < 4; ++i) q[i] = p[i];
  return q;
}

}  // namespace

extern "C" {

const char* conflab_version(void) { return "0.1.0"; }

const char* conflab_status_name(conflab_status s) {
  switch (s) {
    case CONFLAB_OK: return "ok";
    case CONFLAB_E_INVALID_ARGUMENT: return "invalid_argument";
    case CONFLAB_E_BUDGET_EXCEEDED: return "budget_exceeded";
    case CONFLAB_E_DEGENERATE_FIELD: return "degenerate_field";
    case CONFLAB_E_SOLVER_FAILURE: return "solver_failure";
    case CONFLAB_E_IO: return "io_error";
    case CONFLAB_E_FORMAT: return "format_error";
    case CONFLAB_E_CHART_OVERFLOW: return "chart_overflow";
    case CONFLAB_E_STAGE_FAILURE: return "stage_failure";
    case CONFLAB_E_INTERNAL: return "internal_error";
  }
  return "unknown";
}

const char* conflab_last_error(void) { return g_error.c_str(); }

conflab_status conflab_mesh_torus(int n, double side, int divisions, conflab_mesh** out) {
  return guard([&] {
    need(out, "output");
    *out = new conflab_mesh{conflab::build_torus(n, side, divisions)};
  });
}

conflab_status conflab_mesh_cylinder(double band_length, int num_bands, int t_divisions_per_band, int s3_resolution,
                                     double t_offset, conflab_mesh** out) {
  return guard([&] {
    need(out, "output");
    conflab::CylinderSpec s{band_length, num_bands, t_divisions_per_band, s3_resolution, t_offset};
    *out = new conflab_mesh{conflab::build_cylinder(s)};
  });
}

conflab_status conflab_mesh_stereo_ball(int n, double cutoff, int divisions, size_t vertex_budget,
                                        conflab_mesh** out) {
  return guard([&] {
    need(out, "output");
    *out = new conflab_mesh{conflab::build_stereo_ball(n, cutoff, divisions, vertex_budget)};
  });
}

conflab_status conflab_mesh_from_descriptor(const char* text, conflab_mesh** out) {
  return guard([&] {
    need(text, "descriptor");
    need(out, "output");
    *out = new conflab_mesh{conflab::mesh_from_descriptor(text)};
  });
}

conflab_status conflab_mesh_load(const char* path, conflab_mesh** out) {
  return guard([&] {
    need(path, "path");
    need(out, "output");
    *out = new conflab_mesh{conflab::load_mesh(path)};
  });
}

conflab_status conflab_mesh_save(const conflab_mesh* m, const char* path) {
  return guard([&] {
    need(m, "mesh");
    need(path, "path");
    conflab::save_mesh(*m->mesh, path);
  });
}

size_t conflab_mesh_vertex_count(const conflab_mesh* m) { return m ? m->mesh->vertex_count() : 0; }
int conflab_mesh_dim(const conflab_mesh* m) { return m ? m->mesh->dim() : 0; }
uint64_t conflab_mesh_hash(const conflab_mesh* m) { return m ? m->mesh->content_hash() : 0; }

conflab_status conflab_mesh_coords(const conflab_mesh* m, int32_t v, double out[4]) {
  return guard([&] {
    need(m, "mesh");
    need(out, "output");
    conflab::require(v >= 0 && static_cast<size_t>(v) < m->mesh->vertex_count(), "vertex out of range");
    const auto p = m->mesh->coords(v);
    for (int i = 0; i < 4; ++i) out[i] = p[i];
  });
}

conflab_status conflab_mesh_nearest_vertex(const conflab_mesh* m, const double p[4], int32_t* out) {
  return guard([&] {
    need(m, "mesh");
    need(p, "point");
    need(out, "output");
    const auto q = to_point(p);
    const auto& g = *m->mesh;
    double best = std::numeric_limits<double>::infinity();
    *out = conflab::kNoVertex;
    for (size_t i = 0; i < g.vertex_count(); ++i) {
      const double d = g.base_distance(q, g.coords(static_cast<conflab::VertexId>(i)));
      if (d < best) {
        best = d;
        *out = static_cast<int32_t>(i);
      }
    }
  });
}

void conflab_mesh_free(conflab_mesh* m) { delete m; }

conflab_status conflab_field_create(const conflab_mesh* m, const double* values, size_t count, conflab_field** out) {
  return guard([&] {
    need(m, "mesh");
    need(values, "values");
    need(out, "output");
    conflab::require(count == m->mesh->vertex_count(), "value count does not match the mesh");
    *out = new conflab_field{conflab::ConformalField(m->mesh, std::vector<double>(values, values + count))};
  });
}

conflab_status conflab_field_profile(const conflab_mesh* m, const char* kind, double param, const double center[4],
                                     conflab_field** out) {
  return guard([&] {
    need(m, "mesh");
    need(kind, "kind");
    need(out, "output");
    *out = new conflab_field{conflab::profile_field(m->mesh, kind, param, to_point(center))};
  });
}

conflab_status conflab_field_from_config(const char* config_text, int k, conflab_mesh** mesh_out,
                                         conflab_field** field_out) {
  return guard([&] {
    need(config_text, "config");
    need(field_out, "output");
    const auto c = conflab::config_from_text(config_text);
    conflab::require(k >= 1 && k <= c.k_count, "k must lie in [1, K]");
    auto fam = conflab::gen_family(c);
    if (mesh_out) *mesh_out = new conflab_mesh{fam.mesh};
    *field_out = new conflab_field{std::move(fam.fields[k - 1])};
  });
}

conflab_status conflab_field_load(const conflab_mesh* m, const char* path, conflab_field** out) {
  return guard([&] {
    need(m, "mesh");
    need(path, "path");
    need(out, "output");
    *out = new conflab_field{conflab::load_field(m->mesh, path)};
  });
}

conflab_status conflab_field_save(const conflab_field* f, const char* path) {
  return guard([&] {
    need(f, "field");
    need(path, "path");
    conflab::save_field(f->field, path);
  });
}

size_t conflab_field_size(const conflab_field* f) { return f ? f->field.size() : 0; }

conflab_status conflab_field_values(const conflab_field* f, double* out, size_t count) {
  return guard([&] {
    need(f, "field");
    need(out, "output");
    conflab::require(count >= f->field.size(), "output buffer too small");
    std::memcpy(out, f->field.values().data(), f->field.size() * sizeof(double));
  });
}

conflab_status conflab_field_scaled(const conflab_field* f, double c, conflab_field** out) {
  return guard([&] {
    need(f, "field");
    need(out, "output");
    *out = new conflab_field{f->field.scaled(c)};
  });
}

conflab_status conflab_field_normalize(const conflab_field* f, conflab_field** out, double* factor) {
  return guard([&] {
    need(f, "field");
    need(out, "output");
    auto n = conflab::normalize_volume(f->field);
    if (factor) *factor = n.factor;
    *out = new conflab_field{std::move(n.field)};
  });
}

conflab_status conflab_field_curvature(const conflab_field* f, double* out, size_t count) {
  return guard([&] {
    need(f, "field");
    need(out, "output");
    conflab::require(count >= f->field.size(), "output buffer too small");
    const auto r = conflab::scalar_curvature(f->field);
    std::memcpy(out, r.data(), r.size() * sizeof(double));
  });
}

conflab_status conflab_field_invariants(const conflab_field* f, double* a0, double* a1, double* r2_integral) {
  return guard([&] {
    need(f, "field");
    const auto h = conflab::heat_invariants(f->field);
    if (a0) *a0 = h.a0;
    if (a1) *a1 = h.a1;
    if (r2_integral) *r2_integral = h.r2_integral;
  });
}

conflab_status conflab_field_write_vertex_csv(const conflab_field* f, const char* path) {
  return guard([&] {
    need(f, "field");
    need(path, "path");
    const auto r = conflab::scalar_curvature(f->field);
    conflab::write_vertex_csv(f->field, r, path);
  });
}

void conflab_field_free(conflab_field* f) { delete f; }

conflab_status conflab_spectrum_compute(const conflab_field* f, int count, uint64_t seed, double tol,
                                        conflab_spectrum** out) {
  return guard([&] {
    need(f, "field");
    need(out, "output");
    conflab::SpectrumOptions o;
    o.count = count;
    o.seed = seed;
    if (tol > 0.0) o.tol = tol;
    *out = new conflab_spectrum{conflab::laplace_spectrum(f->field, o)};
  });
}

size_t conflab_spectrum_count(const conflab_spectrum* s) { return s ? s->result.eigenvalues.size() : 0; }

conflab_status conflab_spectrum_eigenvalues(const conflab_spectrum* s, double* out, size_t count) {
  return guard([&] {
    need(s, "spectrum");
    need(out, "output");
    conflab::require(count >= s->result.eigenvalues.size(), "output buffer too small");
    std::memcpy(out, s->result.eigenvalues.data(), s->result.eigenvalues.size() * sizeof(double));
  });
}

conflab_status conflab_spectrum_residuals(const conflab_spectrum* s, double* out, size_t count) {
  return guard([&] {
    need(s, "spectrum");
    need(out, "output");
    conflab::require(count >= s->result.residuals.size(), "output buffer too small");
    std::memcpy(out, s->result.residuals.data(), s->result.residuals.size() * sizeof(double));
  });
}

double conflab_spectrum_lambda1(const conflab_spectrum* s) {
  return s ? s->result.lambda1 : std::numeric_limits<double>::quiet_NaN();
}

conflab_status conflab_heat_trace(const conflab_spectrum* s, double t, int weyl_tail, double* out) {
  return guard([&] {
    need(s, "spectrum");
    need(out, "output");
    *out = conflab::heat_trace(s->result, t,
                               weyl_tail ? conflab::TraceCompletion::weyl_tail : conflab::TraceCompletion::truncated);
  });
}

void conflab_spectrum_free(conflab_spectrum* s) { delete s; }

conflab_status conflab_distance_rows(const conflab_field* f, const int32_t* sources, size_t nsources,
                                     const char* stencil, double* out) {
  return guard([&] {
    need(f, "field");
    need(sources, "sources");
    need(out, "output");
    const auto st = conflab::parse_stencil(stencil ? stencil : "face_diagonal");
    const auto rows = conflab::conformal_distances(f->field, std::span(sources, nsources), st);
    const size_t nv = f->field.size();
    for (size_t i = 0; i < nsources; ++i) std::memcpy(out + i * nv, rows.rows[i].data(), nv * sizeof(double));
  });
}

conflab_status conflab_confined_distance(const conflab_field* f, int32_t x, int32_t y, double radius,
                                        const char* stencil, double* confined, double* unconfined, double* ball_r2,
                                        int* connected) {
  return guard([&] {
    need(f, "field");
    const auto& u = f->field;
    const auto nv = static_cast<int32_t>(u.size());
    if (x < 0 || x >= nv || y < 0 || y >= nv) conflab::fail(conflab::ErrorCode::invalid_argument, "vertex out of range");
    const auto st = conflab::parse_stencil(stencil ? stencil : "face_diagonal");
    const auto region = conflab::ball_vertices(u.mesh(), x, radius);
    if (!std::binary_search(region.begin(), region.end(), y))
      conflab::fail(conflab::ErrorCode::invalid_argument, "target vertex lies outside the ball");
    const auto c = conflab::confined_distance(u, x, y, region, st);
    const int32_t src[1] = {x};
    const auto rows = conflab::conformal_distances(u, src, st);
    if (confined) *confined = c.distance;
    if (connected) *connected = c.connected ? 1 : 0;
    if (unconfined) *unconfined = rows.rows[0][y];
    if (ball_r2) *ball_r2 = conflab::region_measures(u, region).r2_integral;
  });
}

conflab_status conflab_landmarks(const conflab_field* f, int m, const char* stencil, int32_t* ids, double* dist,
                                 double* covering_radius) {
  return guard([&] {
    need(f, "field");
    need(ids, "ids");
    const auto st = conflab::parse_stencil(stencil ? stencil : "face_diagonal");
    const auto l = conflab::farthest_point_landmarks(f->field, m, st);
    const size_t k = l.ids.size();
    for (size_t i = 0; i < k; ++i) ids[i] = l.ids[i];
    if (dist)
      for (size_t i = 0; i < k; ++i)
        for (size_t j = 0; j < k; ++j) dist[i * k + j] = l.space(i, j);
    if (covering_radius) *covering_radius = l.covering_radius;
  });
}

conflab_status conflab_concentration_scan(const conflab_field* const* family, size_t k_count, const int32_t* centers,
                                          size_t ncenters, const double* radii, size_t nradii, double eps_detect,
                                          double* energies, int32_t* bubbles, size_t bubble_capacity,
                                          size_t* nbubbles) {
  return guard([&] {
    need(family, "family");
    need(centers, "centers");
    need(radii, "radii");
    std::vector<conflab::ConformalField> fam;
    for (size_t k = 0; k < k_count; ++k) {
      need(family[k], "family member");
      fam.push_back(family[k]->field);
    }
    const auto p = conflab::concentration_scan(fam, std::span(centers, ncenters), std::span(radii, nradii), eps_detect);
    if (energies) std::memcpy(energies, p.energy.data(), p.energy.size() * sizeof(double));
    if (nbubbles) *nbubbles = p.bubble_points.size();
    if (bubbles)
      for (size_t i = 0; i < p.bubble_points.size() && i < bubble_capacity; ++i) bubbles[i] = p.bubble_points[i];
  });
}

conflab_status conflab_scan_centers(const conflab_field* f, int per_axis, int peaks, int32_t* out, size_t capacity,
                                    size_t* count) {
  return guard([&] {
    need(f, "field");
    const auto c = conflab::scan_centers(f->field, per_axis, peaks);
    if (count) *count = c.size();
    if (out)
      for (size_t i = 0; i < c.size() && i < capacity; ++i) out[i] = c[i];
  });
}

conflab_status conflab_concentration_scale(const conflab_field* f, double level, int* found, int32_t* center,
                                           double* radius, double* energy) {
  return guard([&] {
    need(f, "field");
    const auto s = conflab::first_concentration_scale(f->field, level);
    if (found) *found = s.found ? 1 : 0;
    if (center) *center = s.center;
    if (radius) *radius = s.radius;
    if (energy) *energy = s.energy;
  });
}

conflab_status conflab_yamabe_constant(int n, double* out) {
  return guard([&] {
    need(out, "output");
    *out = conflab::yamabe_constant(n);
  });
}

conflab_status conflab_scenario_run(const char* config_text, const char* output_dir, int write,
                                    conflab_report** out) {
  return guard([&] {
    need(config_text, "config");
    need(out, "output");
    auto c = conflab::config_from_text(config_text);
    if (output_dir) c.output_dir = output_dir;
    auto* r = new conflab_report{conflab::run_scenario(c, write != 0), {}, {}};
    r->summary = conflab::render_summary(r->report);
    r->text = conflab::report_to_text(r->report);
    *out = r;
  });
}

conflab_status conflab_config_canonical(const char* config_text, const char** out) {
  return guard([&] {
    need(config_text, "config");
    need(out, "output");
    g_scratch = conflab::config_to_text(conflab::config_from_text(config_text));
    *out = g_scratch.c_str();
  });
}

conflab_status conflab_report_load(const char* path, conflab_report** out) {
  return guard([&] {
    need(path, "path");
    need(out, "output");
    std::ifstream in(path);
    if (!in) conflab::fail(conflab::ErrorCode::io_error, std::string("cannot open ") + path);
    std::stringstream ss;
    ss << in.rdbuf();
    auto* r = new conflab_report{conflab::report_from_text(ss.str()), {}, {}};
    r->summary = conflab::render_summary(r->report);
    r->text = conflab::report_to_text(r->report);
    *out = r;
  });
}

int conflab_report_complete(const conflab_report* r) { return r && r->report.complete ? 1 : 0; }
int conflab_report_all_checks_pass(const conflab_report* r) { return r && r->report.all_checks_pass() ? 1 : 0; }
const char* conflab_report_case(const conflab_report* r) { return r ? r->report.case_label.c_str() : ""; }
const char* conflab_report_summary(const conflab_report* r) { return r ? r->summary.c_str() : ""; }
const char* conflab_report_text(const conflab_report* r) { return r ? r->text.c_str() : ""; }
void conflab_report_free(conflab_report* r) { delete r; }

}  // extern "C"
