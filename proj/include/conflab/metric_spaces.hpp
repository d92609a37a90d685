// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "conflab/conformal.hpp"

namespace conflab {

enum class Stencil { axis, face_diagonal, full };
const char* stencil_name(Stencil s);
Stencil parse_stencil(const std::string& s);

// Reusable single-source shortest paths with edge weight
// l0(e) * (phi(a) + phi(b)) / 2, phi = u^{2/(n-2)}.
class DistanceEngine {
 public:
  DistanceEngine(const ConformalField& u, Stencil stencil, std::span<const std::uint8_t> region_mask = {});
  // Distances to every vertex; +inf outside the region or when disconnected.
  const std::vector<double>& run(VertexId source);

 private:
  struct Move {
    std::vector<std::pair<int, int>> steps;  // (axis, dir)
  };
  const ConformalField& u_;
  std::vector<Move> moves_;
  std::vector<double> phi_;
  std::vector<std::uint8_t> mask_;
  std::vector<double> dist_;
  bool symmetrize_;

  VertexId walk(VertexId v, const Move& mv, int sign, double& len) const;
};

struct DistanceRows {
  std::vector<VertexId> sources;
  std::vector<std::vector<double>> rows;
};

DistanceRows conformal_distances(const ConformalField& u, std::span<const VertexId> sources,
                                 Stencil stencil = Stencil::face_diagonal);

struct ConfinedDistance {
  double distance = 0.0;
  bool connected = true;
};
ConfinedDistance confined_distance(const ConformalField& u, VertexId x, VertexId y,
                                   std::span<const VertexId> region, Stencil stencil = Stencil::face_diagonal);

struct DiameterEstimate {
  double diameter = 0.0;
  double covering_radius = 0.0;
  bool exact = false;
  int sources = 0;
};
DiameterEstimate region_diameter(const ConformalField& u, std::span<const VertexId> region, int sample_size,
                                 Stencil stencil = Stencil::face_diagonal);

class FiniteMetricSpace {
 public:
  FiniteMetricSpace() = default;
  // Throws format_error when the axioms fail beyond tol (relative to the diameter).
  FiniteMetricSpace(std::vector<std::int64_t> ids, std::vector<double> dist, std::vector<double> measure = {},
                    double tol = 1e-9);

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::int64_t>& ids() const { return ids_; }
  const std::vector<double>& measure() const { return measure_; }
  double operator()(std::size_t i, std::size_t j) const { return dist_[i * ids_.size() + j]; }
  double diameter() const;

  // Checks symmetry, zero diagonal, nonnegativity and the triangle inequality
  // on all triples (small spaces) or `triples` seeded random triples.
  bool check_axioms(double tol, std::size_t triples = 10000, std::uint64_t seed = 7,
                    std::string* why = nullptr) const;

  std::string to_text() const;
  static FiniteMetricSpace from_text(const std::string& text);

 private:
  std::vector<std::int64_t> ids_;
  std::vector<double> dist_;
  std::vector<double> measure_;
};

struct LandmarkSet {
  std::vector<VertexId> ids;
  FiniteMetricSpace space;
  double covering_radius = 0.0;
};

// Farthest-point sampling starting at `first` (lowest region vertex if none).
LandmarkSet farthest_point_landmarks(const ConformalField& u, int m, Stencil stencil = Stencil::face_diagonal,
                                     std::span<const VertexId> region = {}, VertexId first = kNoVertex);

// Shortest-path metric of u restricted to a fixed point list.
FiniteMetricSpace metric_on_points(const ConformalField& u, std::span<const VertexId> points,
                                   Stencil stencil = Stencil::face_diagonal);

double gh_upper_shared(const FiniteMetricSpace& a, const FiniteMetricSpace& b);
double gh_bruteforce(const FiniteMetricSpace& x, const FiniteMetricSpace& y, std::size_t max_points = 6);

struct ConvergenceReport {
  std::vector<double> local_gaps;   // pairs outside the excluded set
  std::vector<double> global_gaps;  // all pairs
};
// excluded flags are per point of the reference space.
ConvergenceReport uniform_convergence_report(std::span<const FiniteMetricSpace> family,
                                             const FiniteMetricSpace& reference,
                                             std::span<const std::uint8_t> excluded);
// Row form: the source-by-source block of each DistanceRows is compared;
// excluded is a per-vertex mask.
ConvergenceReport uniform_convergence_report(std::span<const DistanceRows> family, const DistanceRows& reference,
                                             std::span<const std::uint8_t> excluded_vertices);

}  // namespace conflab
