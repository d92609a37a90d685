// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "conflab/conformal.hpp"
#include "conflab/metric_spaces.hpp"

namespace conflab {

// Length of the trailing k-window used in place of liminf: max(1, K/4).
int tail_length(int k_count);

// R^2 dV_g per vertex.
std::vector<double> curvature_energy_density(const ConformalField& u);

struct ConcentrationProfile {
  std::vector<VertexId> centers;
  std::vector<double> radii;
  int families = 0;
  int tail_begin = 0;
  std::vector<double> energy;       // [k][center][radius]
  std::vector<double> tail_energy;  // min over the tail at the smallest radius, per center
  std::vector<VertexId> passing;    // centers above eps_detect
  std::vector<VertexId> bubble_points;  // passing centers after merging

  double at(int k, std::size_t c, std::size_t r) const {
    return energy[(static_cast<std::size_t>(k) * centers.size() + c) * radii.size() + r];
  }
};

// merge_radius < 0 selects twice the smallest radius.
ConcentrationProfile concentration_scan(std::span<const ConformalField> family, std::span<const VertexId> centers,
                                        std::span<const double> radii, double eps_detect,
                                        double merge_radius = -1.0);

struct ConcentrationScale {
  bool found = false;
  VertexId center = kNoVertex;
  double radius = 0.0;
  double energy = 0.0;
};
// Smallest ball reaching `level` curvature energy; candidates restricts the
// centres (every vertex when empty); max_candidates > 0 keeps only that many
// of the densest ones.
ConcentrationScale first_concentration_scale(const ConformalField& u, double level,
                                             std::span<const VertexId> candidates = {},
                                             std::size_t max_candidates = 0);

// v(y) = r^{(n-2)/2} u(x + r y) sampled on target.
ConformalField blowup_rescale(const ConformalField& u, const Point& x, double r, const MeshPtr& target);

struct BlowupSequence {
  std::vector<VertexId> centers;
  std::vector<double> scales;
};

enum class PairClass { essentially_same, separated, nested, indeterminate };
const char* pair_class_name(PairClass c);

struct PairThresholds {
  double d = 0.25;
  double d_prime = 4.0;
  double d_dprime = 4.0;
};

// Trend window used by classify_pair: max(2, ceil(K/4)).
int classification_window(int k_count);

PairClass classify_pair(const GridManifold& m, const BlowupSequence& s1, const BlowupSequence& s2,
                        const PairThresholds& th);
// Same tests on explicit coordinates (Euclidean offsets).
PairClass classify_pair(std::span<const Point> x1, std::span<const double> r1, std::span<const Point> x2,
                        std::span<const double> r2, int dim, const PairThresholds& th);

struct RealBubbleVerdict {
  bool real = false;
  std::vector<double> min_on_unit_ball;
  std::vector<double> l4_on_unit_ball;
};
RealBubbleVerdict real_bubble_test(std::span<const ConformalField> tail_fields, const BlowupSequence& tail_seq,
                                   const MeshPtr& target, double min_floor, double l4_floor);

struct NeckStats {
  double volume = 0.0;
  double diameter = 0.0;
  double covering_radius = 0.0;
  std::size_t vertices = 0;
};
NeckStats neck_stats(const ConformalField& u, VertexId x, double r_inner, double r_outer, int landmarks,
                     Stencil stencil = Stencil::face_diagonal);

struct ThreeCirclesVerdict {
  double e1 = 0.0, e2 = 0.0, e3 = 0.0;
  double curvature_energy = 0.0;
  bool metric_certified = false;
  bool hypothesis_met = false;
  bool clause1_premise = false;
  bool clause1 = false;
  bool clause2_premise = false;
  bool clause2 = false;
  bool clause3 = false;            // as printed: E1 <= e^{-L}E2 or E2 <= e^{-L}E1
  bool clause3_symmetric = false;  // E2 <= e^{-L}E1 or E2 <= e^{-L}E3
  bool implications_hold() const { return clause1 && clause2; }
  bool trichotomy_holds() const { return clause3; }
};
ThreeCirclesVerdict three_circles_check(const ConformalField& v, double band_length, double eps_cylinder);

// Vertex groups of consecutive t-slabs of the given length.
std::vector<std::vector<VertexId>> cylinder_bands(const GridManifold& cyl, double band_length);

struct DecayProfile {
  std::vector<double> energies;
  std::vector<double> ratios;
  double rate = 0.0;  // fitted E_{i+1}/E_i
  bool decaying = false;
  bool growth_detected = false;
  double p = 1.5;
  double series_partial = 0.0;     // sum E_i^{p/4}
  double series_tail_bound = 0.0;  // geometric bound on the remainder
  bool summable = false;
};
DecayProfile singularity_decay_profile(const ConformalField& v, double band_length, double p = 1.5);

}  // namespace conflab
