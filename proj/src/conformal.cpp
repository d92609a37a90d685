// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
#include "conflab/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace conflab {

ConformalField::ConformalField(MeshPtr mesh, std::vector<double> values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
  require(mesh_ != nullptr, "conformal field needs a mesh");
  require(values_.size() == mesh_->vertex_count(), "conformal field size does not match mesh");
  for (double x : values_)
    if (!(x > 0.0) || !std::isfinite(x)) fail(ErrorCode::degenerate_field, "conformal factor must be positive and finite");
}

ConformalField ConformalField::scaled(double c) const {
  require(c > 0.0 && std::isfinite(c), "scale must be positive");
  std::vector<double> v(values_);
  for (double& x : v) x *= c;
  return ConformalField(mesh_, std::move(v));
}

Exponents exponents(int n) {
  require(n == 3 || n == 4, "dimension must be 3 or 4");
  const double d = n - 2.0;
  return {2.0 * n / d, (n + 2.0) / d, 4.0 * (n - 1.0) / d, 2.0 / d};
}

void ThresholdConfig::validate() const {
  for (double x : {eps_detect, eps_jn, band_L, p_sobolev, metric_tol, eps_cylinder, d, d_prime, d_dprime})
    require(x > 0.0 && std::isfinite(x), "thresholds must be positive");
  require(p_sobolev > 1.0 && p_sobolev < 2.0, "p_sobolev must lie in (1, 2)");
  require(d < d_prime, "need d < d_prime");
}

namespace {

// Integer powers keep n = 4 exact (u^4, u^3) and avoid pow() noise.
double upow(double u, double e) {
  if (e == 4.0) { const double u2 = u * u; return u2 * u2; }
  if (e == 6.0) { const double u3 = u * u * u; return u3 * u3; }
  if (e == 3.0) return u * u * u;
  if (e == 5.0) { const double u2 = u * u; return u2 * u2 * u; }
  if (e == 2.0) return u * u;
  if (e == 1.0) return u;
  return std::pow(u, e);
}

}  // namespace

std::vector<double> conformal_volumes(const ConformalField& u) {
  const auto& m = u.mesh();
  const double e = exponents(m.dim()).volume;
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = upow(u.values()[i], e) * m.volumes()[i];
  return out;
}

std::vector<double> yamabe_operator(const ConformalField& u) {
  const auto& m = u.mesh();
  const double c = exponents(m.dim()).yamabe;
  auto lap = laplacian_apply(m, u.values());
  for (std::size_t i = 0; i < lap.size(); ++i) lap[i] = -c * lap[i] + m.r0() * u.values()[i];
  return lap;
}

std::vector<double> scalar_curvature(const ConformalField& u, double min_floor) {
  const auto vals = u.values();
  const double umin = *std::min_element(vals.begin(), vals.end());
  if (umin < min_floor)
    fail(ErrorCode::degenerate_field, "min(u) below curvature floor: field is degenerate");
  const double e = exponents(u.dim()).curvature;
  auto r = yamabe_operator(u);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] /= upow(vals[i], e);
  return r;
}

RegionMeasures region_measures(const ConformalField& u, std::span<const VertexId> region,
                               std::span<const double> curvature) {
  require(!region.empty(), "region must be nonempty");
  require(curvature.size() == u.size(), "curvature size mismatch");
  const double e = exponents(u.dim()).volume;
  const auto& w = u.mesh().volumes();
  RegionMeasures out;
  for (VertexId v : region) {
    const double dv = upow(u[v], e) * w[v];
    out.volume += dv;
    out.r2_integral += curvature[v] * curvature[v] * dv;
  }
  return out;
}

RegionMeasures region_measures(const ConformalField& u, std::span<const VertexId> region) {
  return region_measures(u, region, scalar_curvature(u));
}

double HeatInvariants::ratio() const { return a1 / std::sqrt(a0); }

HeatInvariants heat_invariants(const ConformalField& u) {
  const auto r = scalar_curvature(u);
  const auto dv = conformal_volumes(u);
  HeatInvariants h;
  double rint = 0.0;
  for (std::size_t i = 0; i < dv.size(); ++i) {
    h.a0 += dv[i];
    rint += r[i] * dv[i];
    h.r2_integral += r[i] * r[i] * dv[i];
  }
  h.a1 = rint / 6.0;
  return h;
}

Normalization normalize_volume(const ConformalField& u) {
  const auto dv = conformal_volumes(u);
  double vol = 0.0;
  for (double x : dv) vol += x;
  const int n = u.dim();
  const double c = std::pow(vol, -(n - 2.0) / (2.0 * n));
  return {u.scaled(c), c, vol};
}

double jn_radius(const ConformalField& u, VertexId x, double eps_jn, double r_max) {
  require(eps_jn > 0.0, "eps_jn must be positive");
  const auto& m = u.mesh();
  const double radm = admissible_radius(m, x);
  const double rlim = r_max < 0.0 ? radm : std::min(r_max, radm);
  const Point cx = m.coords(x);
  auto ball = ball_vertices(m, cx, rlim);
  std::vector<std::pair<double, VertexId>> byd;
  byd.reserve(ball.size());
  for (VertexId v : ball) byd.emplace_back(m.base_distance(cx, m.coords(v)), v);
  std::sort(byd.begin(), byd.end());

  std::vector<double> logu, wts;
  double best = 0.0;
  std::size_t i = 0;
  while (i < byd.size()) {
    const double t = byd[i].first;
    while (i < byd.size() && byd[i].first == t) {
      logu.push_back(std::log(u[byd[i].second]));
      wts.push_back(m.volume(byd[i].second));
      ++i;
    }
    double wsum = 0.0, mean = 0.0;
    for (std::size_t j = 0; j < logu.size(); ++j) {
      wsum += wts[j];
      mean += wts[j] * logu[j];
    }
    mean /= wsum;
    double osc = 0.0;
    for (std::size_t j = 0; j < logu.size(); ++j) osc += wts[j] * std::abs(logu[j] - mean);
    osc /= wsum;
    if (!(osc < eps_jn)) break;
    best = t;
  }
  return best;
}

namespace {

// Central difference along axis a with one-sided fallback; scaled by the
// base-metric edge length so the result is a unit-frame component.
double first_diff(const GridManifold& m, std::span<const double> f, VertexId v, int a) {
  const VertexId p = m.neighbor(v, a, +1), q = m.neighbor(v, a, -1);
  const double hp = p != kNoVertex ? m.edge_length(v, a) : 0.0;
  const double hq = q != kNoVertex ? m.edge_length(q, a) : 0.0;
  if (p != kNoVertex && q != kNoVertex) return (f[p] - f[q]) / (hp + hq);
  if (p != kNoVertex) return (f[p] - f[v]) / hp;
  if (q != kNoVertex) return (f[v] - f[q]) / hq;
  return 0.0;
}

double second_diff(const GridManifold& m, std::span<const double> f, VertexId v, int a) {
  const VertexId p = m.neighbor(v, a, +1), q = m.neighbor(v, a, -1);
  if (p != kNoVertex && q != kNoVertex) {
    const double hp = m.edge_length(v, a), hq = m.edge_length(q, a);
    return 2.0 * ((f[p] - f[v]) / hp - (f[v] - f[q]) / hq) / (hp + hq);
  }
  const int dir = p != kNoVertex ? +1 : -1;
  const VertexId o = p != kNoVertex ? p : q;
  if (o == kNoVertex) return 0.0;
  const VertexId o2 = m.neighbor(o, a, dir);
  if (o2 == kNoVertex) return 0.0;
  const double h = dir > 0 ? m.edge_length(v, a) : m.edge_length(o, a);
  return (f[v] - 2.0 * f[o] + f[o2]) / (h * h);
}

}  // namespace

double sobolev_norm(const GridManifold& m, std::span<const double> f, int order, double p,
                    std::span<const VertexId> region, bool exclude_boundary) {
  require(p >= 1.0, "p must be at least 1");
  require(order >= 0 && order <= 2, "order must be 0, 1 or 2");
  require(f.size() == m.vertex_count(), "field size does not match mesh");
  const int n = m.dim();
  const std::size_t nv = m.vertex_count();

  std::vector<std::uint8_t> skip(nv, 0);
  if (exclude_boundary) {
    for (std::size_t vi = 0; vi < nv; ++vi) {
      if (!m.is_boundary(static_cast<VertexId>(vi))) continue;
      skip[vi] = 1;
      for (int a = 0; a < n; ++a)
        for (int d = -1; d <= 1; d += 2) {
          const VertexId w = m.neighbor(static_cast<VertexId>(vi), a, d);
          if (w != kNoVertex) skip[w] = 1;
        }
    }
  }

  std::vector<VertexId> all;
  if (region.empty()) {
    all.resize(nv);
    std::iota(all.begin(), all.end(), 0);
    region = all;
  }

  // Gradient components are needed at neighbours for mixed second derivatives.
  std::vector<std::vector<double>> grad;
  if (order >= 2) {
    grad.assign(n, std::vector<double>(nv));
    for (int a = 0; a < n; ++a)
      for (std::size_t vi = 0; vi < nv; ++vi) grad[a][vi] = first_diff(m, f, static_cast<VertexId>(vi), a);
  }

  double acc = 0.0;
  for (VertexId v : region) {
    if (skip[v]) continue;
    double term = std::pow(std::abs(f[v]), p);
    if (order >= 1) {
      double g2 = 0.0;
      for (int a = 0; a < n; ++a) {
        const double d = order >= 2 ? grad[a][v] : first_diff(m, f, v, a);
        g2 += d * d;
      }
      term += std::pow(std::sqrt(g2), p);
    }
    if (order >= 2) {
      double h2 = 0.0;
      for (int a = 0; a < n; ++a) {
        const double daa = second_diff(m, f, v, a);
        h2 += daa * daa;
        for (int b = a + 1; b < n; ++b) {
          const double dab = 0.5 * (first_diff(m, grad[a], v, b) + first_diff(m, grad[b], v, a));
          h2 += 2.0 * dab * dab;
        }
      }
      term += std::pow(std::sqrt(h2), p);
    }
    acc += term * m.volume(v);
  }
  return std::pow(acc, 1.0 / p);
}

double regularity_ratio(const ConformalField& u, VertexId x, double r, double p) {
  const auto& m = u.mesh();
  require(r > 0.0, "radius must be positive");
  require(r <= admissible_radius(m, x) + 1e-12, "ball must lie within the domain");
  const auto outer = ball_vertices(m, x, r);
  const auto inner = ball_vertices(m, x, 0.5 * r);
  double l4 = 0.0;
  for (VertexId v : outer) {
    const double u2 = u[v] * u[v];
    l4 += u2 * u2 * m.volume(v);
  }
  l4 = std::pow(l4, 0.25);
  if (l4 < 1e-14) fail(ErrorCode::degenerate_field, "L4 norm below division guard");
  return sobolev_norm(m, u.values(), 2, p, inner, true) / l4;
}

CylindricalTransform cylindrical_transform(const ConformalField& u, VertexId x0, const CylinderSpec& target) {
  const auto& m = u.mesh();
  require(m.dim() == 4, "cylindrical transform needs n = 4");
  require(m.topology() == Topology::stereo_ball || m.topology() == Topology::torus,
          "cylindrical transform needs a flat chart");
  require(!m.is_boundary(x0), "transform centre must be interior");
  const double rout = std::exp(-target.t_offset);
  const double rin = std::exp(-(target.t_offset + target.num_bands * target.band_length));
  if (rout > admissible_radius(m, x0))
    fail(ErrorCode::chart_overflow, "transform annulus leaves the chart");

  auto cyl = build_cylinder(target);
  const Point c = m.coords(x0);
  std::vector<double> v(cyl->vertex_count());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point q = cyl->coords(static_cast<VertexId>(i));
    const double s = std::exp(-q[0]);
    const double sp = std::sin(q[1]), st = std::sin(q[2]);
    const Point om{std::cos(q[1]), sp * std::cos(q[2]), sp * st * std::cos(q[3]), sp * st * std::sin(q[3])};
    Point x{};
    for (int a = 0; a < 4; ++a) x[a] = c[a] + s * om[a];
    v[i] = interpolate(m, u.values(), x) * s;
  }
  CylindricalTransform out{ConformalField(cyl, std::move(v)), 0, 0, 0, 0};

  const auto rv = scalar_curvature(out.field);
  const auto dvq = conformal_volumes(out.field);
  for (std::size_t i = 0; i < dvq.size(); ++i) {
    out.volume_cylinder += dvq[i];
    out.energy_cylinder += rv[i] * rv[i] * dvq[i];
  }
  const auto ru = scalar_curvature(u);
  const auto dvu = conformal_volumes(u);
  for (VertexId w : ball_vertices(m, c, rout)) {
    if (m.base_distance(c, m.coords(w)) <= rin) continue;
    out.volume_annulus += dvu[w];
    out.energy_annulus += ru[w] * ru[w] * dvu[w];
  }
  return out;
}

}  // namespace conflab
