/* Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0. */
#ifndef CONFLAB_CONFLAB_H
#define CONFLAB_CONFLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(CONFLAB_BUILDING_LIBRARY)
#    define CONFLAB_API __declspec(dllexport)
#  else
#    define CONFLAB_API __declspec(dllimport)
#  endif
#else
#  define CONFLAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum conflab_status {
  CONFLAB_OK = 0,
  CONFLAB_E_INVALID_ARGUMENT = 1,
  CONFLAB_E_BUDGET_EXCEEDED = 2,
  CONFLAB_E_DEGENERATE_FIELD = 3,
  CONFLAB_E_SOLVER_FAILURE = 4,
  CONFLAB_E_IO = 5,
  CONFLAB_E_FORMAT = 6,
  CONFLAB_E_CHART_OVERFLOW = 7,
  CONFLAB_E_STAGE_FAILURE = 8,
  CONFLAB_E_INTERNAL = 99
} conflab_status;

typedef struct conflab_mesh conflab_mesh;
typedef struct conflab_field conflab_field;
typedef struct conflab_spectrum conflab_spectrum;
typedef struct conflab_report conflab_report;

CONFLAB_API const char* conflab_version(void);
CONFLAB_API const char* conflab_status_name(conflab_status s);
/* Message of the last failed call on this thread; empty after success. */
CONFLAB_API const char* conflab_last_error(void);

/* Meshes. A descriptor is the structured text written by conflab_mesh_save. */
CONFLAB_API conflab_status conflab_mesh_torus(int n, double side, int divisions, conflab_mesh** out);
CONFLAB_API conflab_status conflab_mesh_cylinder(double band_length, int num_bands, int t_divisions_per_band,
                                                 int s3_resolution, double t_offset, conflab_mesh** out);
CONFLAB_API conflab_status conflab_mesh_stereo_ball(int n, double cutoff, int divisions, size_t vertex_budget,
                                                    conflab_mesh** out);
CONFLAB_API conflab_status conflab_mesh_from_descriptor(const char* text, conflab_mesh** out);
CONFLAB_API conflab_status conflab_mesh_load(const char* path, conflab_mesh** out);
CONFLAB_API conflab_status conflab_mesh_save(const conflab_mesh* m, const char* path);
CONFLAB_API size_t conflab_mesh_vertex_count(const conflab_mesh* m);
CONFLAB_API int conflab_mesh_dim(const conflab_mesh* m);
CONFLAB_API uint64_t conflab_mesh_hash(const conflab_mesh* m);
CONFLAB_API conflab_status conflab_mesh_coords(const conflab_mesh* m, int32_t v, double out[4]);
CONFLAB_API conflab_status conflab_mesh_nearest_vertex(const conflab_mesh* m, const double p[4], int32_t* out);
CONFLAB_API void conflab_mesh_free(conflab_mesh* m);

/* Conformal factors u > 0 on a mesh; the field keeps its mesh alive. */
CONFLAB_API conflab_status conflab_field_create(const conflab_mesh* m, const double* values, size_t count,
                                                conflab_field** out);
/* kind: constant | bubble | smooth | decaying | growing (see README). center may be NULL. */
CONFLAB_API conflab_status conflab_field_profile(const conflab_mesh* m, const char* kind, double param,
                                                 const double center[4], conflab_field** out);
/* Member k (1-based) of the family described by a scenario config. */
CONFLAB_API conflab_status conflab_field_from_config(const char* config_text, int k, conflab_mesh** mesh_out,
                                                     conflab_field** field_out);
CONFLAB_API conflab_status conflab_field_load(const conflab_mesh* m, const char* path, conflab_field** out);
CONFLAB_API conflab_status conflab_field_save(const conflab_field* f, const char* path);
CONFLAB_API size_t conflab_field_size(const conflab_field* f);
CONFLAB_API conflab_status conflab_field_values(const conflab_field* f, double* out, size_t count);
CONFLAB_API conflab_status conflab_field_scaled(const conflab_field* f, double c, conflab_field** out);
CONFLAB_API conflab_status conflab_field_normalize(const conflab_field* f, conflab_field** out, double* factor);
CONFLAB_API conflab_status conflab_field_curvature(const conflab_field* f, double* out, size_t count);
CONFLAB_API conflab_status conflab_field_invariants(const conflab_field* f, double* a0, double* a1,
                                                    double* r2_integral);
CONFLAB_API conflab_status conflab_field_write_vertex_csv(const conflab_field* f, const char* path);
CONFLAB_API void conflab_field_free(conflab_field* f);

/* Spectrum of the conformal Laplacian; count includes the constant mode. */
CONFLAB_API conflab_status conflab_spectrum_compute(const conflab_field* f, int count, uint64_t seed, double tol,
                                                    conflab_spectrum** out);
CONFLAB_API size_t conflab_spectrum_count(const conflab_spectrum* s);
CONFLAB_API conflab_status conflab_spectrum_eigenvalues(const conflab_spectrum* s, double* out, size_t count);
CONFLAB_API conflab_status conflab_spectrum_residuals(const conflab_spectrum* s, double* out, size_t count);
CONFLAB_API double conflab_spectrum_lambda1(const conflab_spectrum* s);
/* weyl_tail != 0 completes the truncated sum with the Weyl tail. */
CONFLAB_API conflab_status conflab_heat_trace(const conflab_spectrum* s, double t, int weyl_tail, double* out);
CONFLAB_API void conflab_spectrum_free(conflab_spectrum* s);

/* Distances. stencil: axis | face_diagonal | full. out holds nsources rows of
   vertex_count entries; unreachable entries are +inf. */
CONFLAB_API conflab_status conflab_distance_rows(const conflab_field* f, const int32_t* sources, size_t nsources,
                                                 const char* stencil, double* out);
/* Distance from x to y with paths confined to the base ball of the given radius
   around x, next to the unconfined distance and the curvature energy of that
   ball. confined is +inf (connected = 0) when y is unreachable inside it. */
CONFLAB_API conflab_status conflab_confined_distance(const conflab_field* f, int32_t x, int32_t y, double radius,
                                                     const char* stencil, double* confined, double* unconfined,
                                                     double* ball_r2, int* connected);
/* Farthest-point landmarks: ids (m entries) and their distance matrix (m*m). */
CONFLAB_API conflab_status conflab_landmarks(const conflab_field* f, int m, const char* stencil, int32_t* ids,
                                             double* dist, double* covering_radius);

/* Concentration scan over a family sharing one mesh. energies (optional)
   receives K*ncenters*nradii values in [k][center][radius] order. */
CONFLAB_API conflab_status conflab_concentration_scan(const conflab_field* const* family, size_t k_count,
                                                      const int32_t* centers, size_t ncenters, const double* radii,
                                                      size_t nradii, double eps_detect, double* energies,
                                                      int32_t* bubbles, size_t bubble_capacity, size_t* nbubbles);
CONFLAB_API conflab_status conflab_scan_centers(const conflab_field* f, int per_axis, int peaks, int32_t* out,
                                                size_t capacity, size_t* count);
CONFLAB_API conflab_status conflab_concentration_scale(const conflab_field* f, double level, int* found,
                                                       int32_t* center, double* radius, double* energy);

CONFLAB_API conflab_status conflab_yamabe_constant(int n, double* out);

/* Scenarios. output_dir overrides the config's directory when non-NULL;
   write = 0 skips all file output. */
CONFLAB_API conflab_status conflab_scenario_run(const char* config_text, const char* output_dir, int write,
                                                conflab_report** out);
/* Canonical text of a config after parsing and validation (owned by the library
   until the next call on this thread). */
CONFLAB_API conflab_status conflab_config_canonical(const char* config_text, const char** out);
CONFLAB_API conflab_status conflab_report_load(const char* path, conflab_report** out);
CONFLAB_API int conflab_report_complete(const conflab_report* r);
CONFLAB_API int conflab_report_all_checks_pass(const conflab_report* r);
CONFLAB_API const char* conflab_report_case(const conflab_report* r);
CONFLAB_API const char* conflab_report_summary(const conflab_report* r);
CONFLAB_API const char* conflab_report_text(const conflab_report* r);
CONFLAB_API void conflab_report_free(conflab_report* r);

#ifdef __cplusplus
}
#endif

#endif /* CONFLAB_CONFLAB_H */
