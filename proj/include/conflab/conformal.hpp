// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
#pragma once

#include <span>
#include <vector>

#include "conflab/grid_manifold.hpp"

namespace conflab {

// Positive conformal factor u with g = u^{4/(n-2)} g0.
class ConformalField {
 public:
  ConformalField(MeshPtr mesh, std::vector<double> values);

  const GridManifold& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  std::span<const double> values() const { return values_; }
  double operator[](VertexId v) const { return values_[v]; }
  std::size_t size() const { return values_.size(); }
  int dim() const { return mesh_->dim(); }

  ConformalField scaled(double c) const;

 private:
  MeshPtr mesh_;
  std::vector<double> values_;
};

struct Exponents {
  double volume;     // 2n/(n-2)
  double curvature;  // (n+2)/(n-2)
  double yamabe;     // 4(n-1)/(n-2)
  double length;     // 2/(n-2)
};
Exponents exponents(int n);

struct ThresholdConfig {
  double eps_detect = 189.496;  // 5% of a standard bubble's 384 pi^2
  double eps_jn = 0.1;
  double band_L = 1.0;
  double p_sobolev = 1.5;
  double metric_tol = 1e-6;
  double eps_cylinder = 1.0;  // curvature-energy hypothesis on three-circle cylinders
  double d = 0.25;
  double d_prime = 4.0;
  double d_dprime = 4.0;

  void validate() const;
};

// u^{2n/(n-2)} w per vertex.
std::vector<double> conformal_volumes(const ConformalField& u);

// R(g) from the Yamabe identity; throws degenerate_field if min(u) < min_floor.
std::vector<double> scalar_curvature(const ConformalField& u, double min_floor = 1e-8);

// -(4(n-1)/(n-2)) Delta u + R0 u, the left side of the Yamabe identity.
std::vector<double> yamabe_operator(const ConformalField& u);

struct RegionMeasures {
  double volume = 0.0;
  double r2_integral = 0.0;
};
RegionMeasures region_measures(const ConformalField& u, std::span<const VertexId> region);
RegionMeasures region_measures(const ConformalField& u, std::span<const VertexId> region,
                               std::span<const double> curvature);

struct HeatInvariants {
  double a0 = 0.0;
  double a1 = 0.0;
  double r2_integral = 0.0;
  double ratio() const;  // a1 / sqrt(a0)
};
HeatInvariants heat_invariants(const ConformalField& u);

struct Normalization {
  ConformalField field;
  double factor;
  double volume_before;
};
Normalization normalize_volume(const ConformalField& u);

// r_max < 0 selects the admissible radius of the chart at x.
double jn_radius(const ConformalField& u, VertexId x, double eps_jn, double r_max = -1.0);

// Discrete W^{order,p} norm with base weights. An empty region means every
// vertex; exclude_boundary drops vertices within two steps of an open boundary.
double sobolev_norm(const GridManifold& m, std::span<const double> f, int order, double p,
                    std::span<const VertexId> region = {}, bool exclude_boundary = true);

// ||u||_{W^{2,p}(B_{r/2}(x))} / ||u||_{L^4(B_r(x))}.
double regularity_ratio(const ConformalField& u, VertexId x, double r, double p);

struct CylindricalTransform {
  ConformalField field;
  double energy_cylinder = 0.0;  // sum R^2 v^4 w over the cylinder
  double energy_annulus = 0.0;   // sum R^2 u^4 w over the matching annulus
  double volume_cylinder = 0.0;  // sum v^4 w
  double volume_annulus = 0.0;   // sum u^4 w
};
// v(t, omega) = u(x0 + e^{-t} omega) e^{-t} on a cylinder built from target.
CylindricalTransform cylindrical_transform(const ConformalField& u, VertexId x0, const CylinderSpec& target);

}  // namespace conflab
