// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "conflab/bubbles.hpp"
#include "conflab/conformal.hpp"
#include "conflab/metric_spaces.hpp"

namespace conflab {

enum class ScenarioKind { smooth_convergent, single_bubble, two_bubble, dumbbell, cylinder_exact };
const char* scenario_kind_name(ScenarioKind k);
ScenarioKind parse_scenario_kind(const std::string& s);

struct BubbleParams {
  std::vector<double> lambdas;     // strictly decreasing, one per family member
  std::vector<Point> centers;      // one bubble per center
  double background = 4.0;         // background level b0 * lambda_k
  double blend_start = 0.3;        // fraction of the side where rho^2 turns periodic
  double blend_width = 0.18;
};

struct SmoothParams {
  double amplitude = 0.3;          // u = 1 + a * prod cos(2 pi x_i / side), first two axes
  double perturbation = 0.08;      // w amplitude; u_k = u (1 + 2^-k w)
};

struct DumbbellParams {
  std::vector<double> deltas;      // strictly decreasing neck levels
  std::vector<Point> lobes;        // two lobe centres
  double lobe_radius = 0.08;
  double lobe_transition = 0.04;
};

struct CylinderParams {
  std::string mode = "decaying";   // decaying | growing | constant
  double amplitude = 1.0;
  double perturbation = 0.0;       // relative, scaled by 2^-k along the family
};

struct AnalysisParams {
  int landmarks = 64;
  Stencil stencil = Stencil::face_diagonal;
  double radius_min = 0.05;
  double radius_max = 0.25;
  int radius_count = 8;
  int scan_points_per_axis = 4;
  int scan_peaks = 8;
  std::vector<double> blowup_levels{947.0, 1895.0};
  int blowup_candidates = 32;      // densest centres tried per level; 0 = all
  int spectrum_count = 4;
  std::size_t spectrum_vertex_budget = 20000;
  std::size_t direct_limit = 12000;
  double min_floor = 0.05;
  double l4_floor = 0.01;
  double excluded_radius = 0.1;
  double neck_r_inner = 0.0;       // 0: neck stats skipped
  double neck_r_outer = 0.0;
  int neck_landmarks = 8;
  Stencil neck_stencil = Stencil::axis;
  double pinch_scale = 0.0;        // 0: neck_r_outer (bubbles) or 3 lobe radii (dumbbell)
  double background_floor = 0.1;
  StereoBallSpec blowup_target{4, 2.0, 16, 2'000'000};
};

// Tolerances behind every asserted check of a run.
struct AssertionParams {
  double gap_factor = 2.0;
  double gh_tol = 0.05;
  double neck_drop = 4.0;
  double ratio_tol = 0.04;
  double smooth_ratio_band = 0.10;
  double volume_tol = 1e-6;
  double lambda_drop = 0.1;
  double decay_rate_tol = 0.05;
};

struct ScenarioConfig {
  int schema_version = 1;
  ScenarioKind kind = ScenarioKind::smooth_convergent;
  MeshSpec mesh = TorusSpec{};
  int k_count = 6;
  bool normalize = true;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  ThresholdConfig thresholds;
  BubbleParams bubble;
  SmoothParams smooth;
  DumbbellParams dumbbell;
  CylinderParams cylinder;
  AnalysisParams analysis;
  AssertionParams assertions;

  void validate() const;
};

std::string config_to_text(const ScenarioConfig& c);
ScenarioConfig config_from_text(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

// n(n-1) Vol(S^n)^{2/n}.
double yamabe_constant(int n);

struct Family {
  MeshPtr mesh;
  std::vector<ConformalField> fields;
  std::vector<double> parameters;     // lambda_k, delta_k, 2^-k ...
  std::vector<double> factors;        // volume normalization factors (1 when raw)
  std::optional<ConformalField> limit;  // smooth_convergent only
};
Family gen_family(const ScenarioConfig& c);

// Single analytic field on a mesh. kinds: constant (value = param), bubble
// (scale = param at center; periodic blend on the torus), smooth (amplitude =
// param), decaying / growing (param * e^{-+t} on the cylinder).
ConformalField profile_field(const MeshPtr& mesh, const std::string& kind, double param, const Point& center = {});

// Coarse coordinate lattice (per_axis^n) plus the strongest local maxima of
// the curvature-energy density.
std::vector<VertexId> scan_centers(const ConformalField& u, int per_axis, int peaks);

struct ThresholdReport {
  std::vector<double> ratios;
  int tail_begin = 0;
  double tail_ratio = 0.0;  // min over the tail window
  double yamabe = 0.0;
  double yamabe_sixth = 0.0;
  bool below_yamabe = false;
  bool below_yamabe_sixth = false;
  double rel_dev_yamabe = 0.0;
  double rel_dev_yamabe_sixth = 0.0;
};
ThresholdReport threshold_check(std::span<const ConformalField> family, int n);

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  std::string relation;  // "<=", ">=", "==", "decreasing" ...
  bool pass = false;
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct KRecord {
  int k = 0;
  double parameter = kNaN;
  double factor = 1.0;
  double volume = kNaN;
  double a0 = kNaN, a1 = kNaN, ratio = kNaN, r2_integral = kNaN;
  double lambda1 = kNaN;
  double pinch_quotient = kNaN;
  double local_gap = kNaN, global_gap = kNaN, gh_upper = kNaN;
  double construction_gap = kNaN;
  double background_min = kNaN;
  double min_u = kNaN;
};

struct NeckRecord {
  int k = 0;
  int bubble = 0;
  double r_inner = 0.0, r_outer = 0.0;
  NeckStats stats;
};

struct PairRecord {
  std::string a, b;
  PairClass cls = PairClass::indeterminate;
};

struct BubbleRecord {
  VertexId vertex = kNoVertex;
  Point point{};
  double tail_energy = 0.0;
  bool real = false;
  std::vector<double> min_on_unit_ball, l4_on_unit_ball;
  std::vector<std::vector<double>> scales;  // per blowup level, per k
};

struct CylinderRecord {
  int k = 0;
  ThreeCirclesVerdict circles;
  DecayProfile decay;
};

struct ConcentrationRow {
  int k = 0;
  VertexId center = kNoVertex;
  double radius = 0.0;
  double energy = 0.0;
};

struct RunReport {
  int schema_version = 1;
  std::string kind;
  std::uint64_t seed = 0;
  std::string mesh_descriptor;
  bool complete = false;
  std::string failed_stage;
  std::string error;
  std::vector<KRecord> per_k;
  std::vector<NeckRecord> necks;
  std::vector<BubbleRecord> bubbles;
  std::vector<PairRecord> pairs;
  std::vector<CylinderRecord> cylinder;
  ThresholdReport threshold;
  std::string case_label = "indeterminate";
  std::vector<Check> checks;
  std::vector<ConcentrationRow> concentration;  // CSV only, not part of the text form

  bool all_checks_pass() const;
};

// Runs the pipeline and writes outputs below c.output_dir unless write is false.
// Stage failures are captured in the report (complete = false).
RunReport run_scenario(const ScenarioConfig& c, bool write = true);

std::string report_to_text(const RunReport& r);
RunReport report_from_text(const std::string& text);
std::string render_summary(const RunReport& r);

// Worker count from CONFLAB_THREADS (default 1).
int thread_count();
// Calls f(i) for i in [0, n); results must be written to per-index slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

}  // namespace conflab
