// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "conflab/types.hpp"

namespace conflab {

enum class Topology { torus, cylinder_s3, stereo_ball };

const char* topology_name(Topology t);

// How an axis ends: wrapped, open (flagged boundary vertices), or closed at a
// coordinate pole where the face measure vanishes.
enum class AxisKind { periodic, open, closed };

struct Axis {
  AxisKind kind = AxisKind::open;
  std::vector<double> nodes;
  double period = 0.0;

  int count() const { return static_cast<int>(nodes.size()); }
  // Coordinate distance to node i+1, wrapping on periodic axes; 0 past the end.
  double step(int i) const;
  // Control width around node i.
  double dual(int i) const;
  // Signed coordinate difference b - a, minimum image on periodic axes.
  double delta(double a, double b) const;
};

// sinh grading of a periodic axis around equally spaced foci. ratio is the
// approximate largest-to-smallest spacing ratio.
struct AxisGrading {
  std::vector<double> foci;
  double ratio = 1.0;
};

struct TorusSpec {
  int dim = 3;
  double side = 1.0;
  int divisions = 16;
  std::vector<AxisGrading> grading;  // empty, or one entry per axis
};

struct CylinderSpec {
  double band_length = 1.0;
  int num_bands = 3;
  int t_divisions_per_band = 24;
  int s3_resolution = 8;
  double t_offset = 0.0;
};

struct StereoBallSpec {
  int dim = 4;
  double cutoff = 4.0;
  int divisions = 32;
  std::size_t vertex_budget = 2'000'000;
};

using MeshSpec = std::variant<TorusSpec, CylinderSpec, StereoBallSpec>;

struct BandDecomposition {
  double band_length = 0.0;
  double t_origin = 0.0;
  int cells_per_band = 0;
  std::vector<std::vector<VertexId>> bands;

  double t_begin(int i) const { return t_origin + band_length * i; }
  double t_end(int i) const { return t_origin + band_length * (i + 1); }
};

class GridManifold {
 public:
  int dim() const { return dim_; }
  Topology topology() const { return topology_; }
  const MeshSpec& spec() const { return spec_; }
  const std::vector<Axis>& axes() const { return axes_; }
  std::span<const int> shape() const { return shape_; }
  std::size_t vertex_count() const { return volume_.size(); }
  double r0() const { return r0_; }

  std::int64_t lattice_index(VertexId v) const;
  std::array<int, 4> lattice_coords(VertexId v) const;
  VertexId vertex_at(const std::array<int, 4>& idx) const;  // kNoVertex if masked out
  Point coords(VertexId v) const;

  std::span<const double> volumes() const { return volume_; }
  double volume(VertexId v) const { return volume_[v]; }
  double total_volume() const;

  VertexId neighbor(VertexId v, int axis, int dir) const {
    return nbr_[static_cast<std::size_t>(v) * 2 * dim_ + 2 * axis + (dir > 0 ? 1 : 0)];
  }
  // Divergence-form coefficient of the edge v -> neighbor(v, axis, +1).
  double conductance(VertexId v, int axis) const {
    return cond_[static_cast<std::size_t>(axis) * vertex_count() + v];
  }
  // Base-metric length of the edge v -> neighbor(v, axis, +1).
  double edge_length(VertexId v, int axis) const {
    return elen_[static_cast<std::size_t>(axis) * vertex_count() + v];
  }
  bool is_boundary(VertexId v) const { return boundary_[v] != 0; }
  std::span<const std::uint8_t> boundary_mask() const { return boundary_; }

  // Diagonal of the base metric in the coordinate frame at point p.
  std::array<double, 4> metric_diag(const Point& p) const;

  // Base-coordinate distance (periodic on the torus, product metric on the cylinder).
  double base_distance(const Point& a, const Point& b) const;
  double base_distance(VertexId a, VertexId b) const { return base_distance(coords(a), coords(b)); }

  const BandDecomposition* bands() const { return bands_ ? &*bands_ : nullptr; }

  // FNV-1a over shape, volumes and conductances.
  std::uint64_t content_hash() const { return hash_; }

  // Smallest edge length in the base metric.
  double min_spacing() const;

 private:
  friend class GridBuilder;
  GridManifold() = default;

  int dim_ = 0;
  Topology topology_ = Topology::torus;
  MeshSpec spec_;
  std::vector<Axis> axes_;
  std::vector<int> shape_;
  std::vector<std::int64_t> strides_;
  std::vector<VertexId> lattice_to_vertex_;  // empty when every lattice point is a vertex
  std::vector<std::int64_t> vertex_to_lattice_;
  std::vector<VertexId> nbr_;
  std::vector<double> cond_;
  std::vector<double> elen_;
  std::vector<double> volume_;
  std::vector<std::uint8_t> boundary_;
  double r0_ = 0.0;
  std::optional<BandDecomposition> bands_;
  std::uint64_t hash_ = 0;
};

using MeshPtr = std::shared_ptr<const GridManifold>;

MeshPtr build_torus(int n, double side, int divisions);
MeshPtr build_torus(const TorusSpec& spec);
MeshPtr build_cylinder(double band_length, int num_bands, int t_divisions_per_band, int s3_resolution);
MeshPtr build_cylinder(const CylinderSpec& spec);
MeshPtr build_stereo_ball(int n, double cutoff_radius, int divisions,
                          std::size_t vertex_budget = 2'000'000);
MeshPtr build_stereo_ball(const StereoBallSpec& spec);
MeshPtr build_mesh(const MeshSpec& spec);

// Discrete Laplace-Beltrami of g0. Vertices with a missing neighbour on an open
// axis use a quadratic ghost value 3f0 - 3f1 + f2.
std::vector<double> laplacian_apply(const GridManifold& m, std::span<const double> f);

// Vertices within base distance r of center, ascending id.
std::vector<VertexId> ball_vertices(const GridManifold& m, VertexId center, double r);
std::vector<VertexId> ball_vertices(const GridManifold& m, const Point& center, double r);

// Multilinear interpolation on torus or stereo_ball grids.
double interpolate(const GridManifold& m, std::span<const double> f, const Point& p);

// Largest r for which a ball around v stays inside the chart; torus: half the
// smallest period, cylinder: distance to the nearest t end.
double admissible_radius(const GridManifold& m, VertexId v);

}  // namespace conflab
