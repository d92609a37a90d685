// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
#include "conflab/bubbles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace conflab {

int tail_length(int k_count) { return std::max(1, k_count / 4); }

int classification_window(int k_count) { return std::max(2, (k_count + 3) / 4); }

std::vector<double> curvature_energy_density(const ConformalField& u) {
  const auto r = scalar_curvature(u);
  auto dv = conformal_volumes(u);
  for (std::size_t i = 0; i < dv.size(); ++i) dv[i] *= r[i] * r[i];
  return dv;
}

ConcentrationProfile concentration_scan(std::span<const ConformalField> family, std::span<const VertexId> centers,
                                        std::span<const double> radii, double eps_detect, double merge_radius) {
  require(!family.empty(), "family must be nonempty");
  require(!radii.empty() && !centers.empty(), "centers and radii must be nonempty");
  for (std::size_t i = 0; i + 1 < radii.size(); ++i) require(radii[i] < radii[i + 1], "radii must ascend");
  const auto& m = family.front().mesh();
  for (const auto& u : family) require(&u.mesh() == &m, "family members must share a mesh");

  ConcentrationProfile p;
  p.centers.assign(centers.begin(), centers.end());
  p.radii.assign(radii.begin(), radii.end());
  p.families = static_cast<int>(family.size());
  p.tail_begin = p.families - tail_length(p.families);
  const std::size_t nc = centers.size(), nr = radii.size();
  p.energy.assign(family.size() * nc * nr, 0.0);

  std::vector<std::vector<double>> dens;
  for (const auto& u : family) dens.push_back(curvature_energy_density(u));

  for (std::size_t c = 0; c < nc; ++c) {
    const Point pc = m.coords(centers[c]);
    const auto ball = ball_vertices(m, pc, radii.back());
    std::vector<std::size_t> bin(ball.size());
    for (std::size_t i = 0; i < ball.size(); ++i) {
      const double d = m.base_distance(pc, m.coords(ball[i]));
      bin[i] = static_cast<std::size_t>(std::lower_bound(radii.begin(), radii.end(), d) - radii.begin());
    }
    for (std::size_t k = 0; k < family.size(); ++k) {
      std::vector<double> acc(nr, 0.0);
      for (std::size_t i = 0; i < ball.size(); ++i)
        if (bin[i] < nr) acc[bin[i]] += dens[k][ball[i]];
      double run = 0.0;
      for (std::size_t r = 0; r < nr; ++r) {
        run += acc[r];
        p.energy[(k * nc + c) * nr + r] = run;
      }
    }
  }

  p.tail_energy.assign(nc, std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < nc; ++c)
    for (int k = p.tail_begin; k < p.families; ++k) p.tail_energy[c] = std::min(p.tail_energy[c], p.at(k, c, 0));
  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < nc; ++c)
    if (p.tail_energy[c] > eps_detect) {
      p.passing.push_back(centers[c]);
      order.push_back(c);
    }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (p.tail_energy[a] != p.tail_energy[b]) return p.tail_energy[a] > p.tail_energy[b];
    return centers[a] < centers[b];
  });
  const double mr = merge_radius < 0.0 ? 2.0 * radii.front() : merge_radius;
  for (std::size_t c : order) {
    bool near = false;
    for (VertexId k : p.bubble_points)
      if (m.base_distance(centers[c], k) <= mr) near = true;
    if (!near) p.bubble_points.push_back(centers[c]);
  }
  return p;
}

ConcentrationScale first_concentration_scale(const ConformalField& u, double level,
                                             std::span<const VertexId> candidates,
                                             std::size_t max_candidates) {
  require(level > 0.0, "level must be positive");
  const auto& m = u.mesh();
  const auto dens = curvature_energy_density(u);
  std::vector<VertexId> order;
  if (candidates.empty()) {
    order.resize(u.size());
    std::iota(order.begin(), order.end(), 0);
  } else {
    order.assign(candidates.begin(), candidates.end());
  }
  std::stable_sort(order.begin(), order.end(), [&](VertexId a, VertexId b) { return dens[a] > dens[b]; });
  if (max_candidates > 0 && order.size() > max_candidates) order.resize(max_candidates);

  ConcentrationScale best;
  const double h = m.min_spacing();
  for (VertexId x : order) {
    const Point px = m.coords(x);
    const double rad_max = admissible_radius(m, x);
    double r_probe;
    if (best.found) {
      r_probe = best.radius;
      double e = 0.0;
      for (VertexId v : ball_vertices(m, px, r_probe)) e += dens[v];
      if (e < level) continue;
    } else {
      r_probe = h;
      while (true) {
        double e = 0.0;
        for (VertexId v : ball_vertices(m, px, r_probe)) e += dens[v];
        if (e >= level) break;
        if (r_probe >= rad_max) {
          r_probe = -1.0;
          break;
        }
        r_probe = std::min(2.0 * r_probe, rad_max);
      }
      if (r_probe < 0.0) continue;
    }
    auto ball = ball_vertices(m, px, r_probe);
    std::vector<std::pair<double, VertexId>> byd;
    for (VertexId v : ball) byd.emplace_back(m.base_distance(px, m.coords(v)), v);
    std::sort(byd.begin(), byd.end());
    double run = 0.0;
    std::size_t i = 0;
    while (i < byd.size()) {
      const double d = byd[i].first;
      while (i < byd.size() && byd[i].first == d) run += dens[byd[i++].second];
      if (run >= level) {
        if (!best.found || d < best.radius || (d == best.radius && x < best.center)) {
          best = {true, x, d, run};
        }
        break;
      }
    }
  }
  return best;
}

ConformalField blowup_rescale(const ConformalField& u, const Point& x, double r, const MeshPtr& target) {
  require(r > 0.0, "rescale radius must be positive");
  require(target && target->topology() == Topology::stereo_ball, "target must be a stereo_ball chart");
  const auto& m = u.mesh();
  require(target->dim() == m.dim(), "target dimension mismatch");
  const double cutoff = std::get<StereoBallSpec>(target->spec()).cutoff;
  if (m.topology() == Topology::torus) {
    for (const Axis& a : m.axes())
      if (r * cutoff > 0.5 * a.period) fail(ErrorCode::chart_overflow, "rescaled chart wraps the torus");
  }
  const double scale = std::pow(r, 0.5 * (m.dim() - 2));
  std::vector<double> v(target->vertex_count());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point y = target->coords(static_cast<VertexId>(i));
    Point q{};
    for (int a = 0; a < m.dim(); ++a) q[a] = x[a] + r * y[a];
    v[i] = scale * interpolate(m, u.values(), q);
  }
  return ConformalField(target, std::move(v));
}

const char* pair_class_name(PairClass c) {
  switch (c) {
    case PairClass::essentially_same: return "essentially_same";
    case PairClass::separated: return "separated";
    case PairClass::nested: return "nested";
    case PairClass::indeterminate: return "indeterminate";
  }
  return "unknown";
}

namespace {

PairClass classify_offsets(std::span<const double> off, std::span<const double> r1, std::span<const double> r2,
                           const PairThresholds& th) {
  const int k = static_cast<int>(r1.size());
  require(k >= 1 && r2.size() == r1.size() && off.size() == r1.size(), "sequences must have equal length");
  const int w = std::min(k, classification_window(k));
  const int b = k - w;
  std::vector<double> q, sigma, nest;
  for (int i = b; i < k; ++i) {
    require(r1[i] > 0 && r2[i] > 0, "scales must be positive");
    q.push_back(off[i] / (r1[i] + r2[i]));
    sigma.push_back(std::min(r1[i], r2[i]) / std::max(r1[i], r2[i]));
    nest.push_back(off[i] / std::max(r1[i], r2[i]));
  }
  bool same = true;
  for (int i = b; i < k; ++i) {
    const double ratio = r2[i] / r1[i];
    if (!(th.d < ratio && ratio < th.d_prime && th.d < 1.0 / ratio && 1.0 / ratio < th.d_prime)) same = false;
    if (!(q[i - b] < th.d_dprime)) same = false;
  }
  if (same) return PairClass::essentially_same;

  bool inc = q.size() >= 2;
  for (std::size_t i = 1; i < q.size(); ++i)
    if (!(q[i] > q[i - 1])) inc = false;
  if (inc && q.back() > th.d_dprime && q.back() >= 1.5 * q.front()) return PairClass::separated;

  bool dec = sigma.size() >= 2;
  for (std::size_t i = 1; i < sigma.size(); ++i)
    if (!(sigma[i] < sigma[i - 1])) dec = false;
  bool bounded = true;
  for (double x : nest)
    if (!(x <= th.d_dprime)) bounded = false;
  if (dec && sigma.back() < th.d && bounded) return PairClass::nested;
  return PairClass::indeterminate;
}

}  // namespace

PairClass classify_pair(const GridManifold& m, const BlowupSequence& s1, const BlowupSequence& s2,
                        const PairThresholds& th) {
  require(s1.centers.size() == s2.centers.size() && s1.scales.size() == s2.scales.size() &&
              s1.centers.size() == s1.scales.size(),
          "blowup sequences must have equal length");
  std::vector<double> off;
  for (std::size_t i = 0; i < s1.centers.size(); ++i) off.push_back(m.base_distance(s1.centers[i], s2.centers[i]));
  return classify_offsets(off, s1.scales, s2.scales, th);
}

PairClass classify_pair(std::span<const Point> x1, std::span<const double> r1, std::span<const Point> x2,
                        std::span<const double> r2, int dim, const PairThresholds& th) {
  require(x1.size() == x2.size() && x1.size() == r1.size(), "sequences must have equal length");
  std::vector<double> off;
  for (std::size_t i = 0; i < x1.size(); ++i) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += (x1[i][a] - x2[i][a]) * (x1[i][a] - x2[i][a]);
    off.push_back(std::sqrt(s));
  }
  return classify_offsets(off, r1, r2, th);
}

RealBubbleVerdict real_bubble_test(std::span<const ConformalField> tail_fields, const BlowupSequence& tail_seq,
                                   const MeshPtr& target, double min_floor, double l4_floor) {
  require(tail_fields.size() == tail_seq.centers.size(), "tail length mismatch");
  RealBubbleVerdict out;
  out.real = !tail_fields.empty();
  const Point origin{};
  const auto unit = ball_vertices(*target, origin, 1.0);
  for (std::size_t i = 0; i < tail_fields.size(); ++i) {
    const auto& u = tail_fields[i];
    const auto v = blowup_rescale(u, u.mesh().coords(tail_seq.centers[i]), tail_seq.scales[i], target);
    double vmin = std::numeric_limits<double>::infinity(), l4 = 0.0;
    for (VertexId w : unit) {
      vmin = std::min(vmin, v[w]);
      const double v2 = v[w] * v[w];
      l4 += v2 * v2 * target->volume(w);
    }
    out.min_on_unit_ball.push_back(vmin);
    out.l4_on_unit_ball.push_back(l4);
    if (!(vmin > min_floor && l4 > l4_floor)) out.real = false;
  }
  return out;
}

NeckStats neck_stats(const ConformalField& u, VertexId x, double r_inner, double r_outer, int landmarks,
                     Stencil stencil) {
  require(r_inner >= 0.0 && r_inner < r_outer, "need r_inner < r_outer");
  const auto& m = u.mesh();
  const Point c = m.coords(x);
  std::vector<VertexId> ann;
  for (VertexId v : ball_vertices(m, c, r_outer))
    if (m.base_distance(c, m.coords(v)) > r_inner) ann.push_back(v);
  if (ann.empty()) fail(ErrorCode::invalid_argument, "neck annulus contains no vertices");
  NeckStats s;
  s.vertices = ann.size();
  const auto dv = conformal_volumes(u);
  for (VertexId v : ann) s.volume += dv[v];
  const auto d = region_diameter(u, ann, landmarks, stencil);
  s.diameter = d.diameter;
  s.covering_radius = d.covering_radius;
  return s;
}

std::vector<std::vector<VertexId>> cylinder_bands(const GridManifold& cyl, double band_length) {
  require(cyl.topology() == Topology::cylinder_s3, "bands need a cylinder");
  const auto& spec = std::get<CylinderSpec>(cyl.spec());
  const double dt = spec.band_length / spec.t_divisions_per_band;
  const double cells = band_length / dt;
  const int per = static_cast<int>(std::lround(cells));
  require(per >= 1 && std::abs(cells - per) <= 1e-9 * cells, "band length must be a multiple of the t spacing");
  const int nt = cyl.shape()[0];
  const int nb = nt / per;
  std::vector<std::vector<VertexId>> bands(nb);
  for (std::size_t vi = 0; vi < cyl.vertex_count(); ++vi) {
    const int j = cyl.lattice_coords(static_cast<VertexId>(vi))[0];
    if (j / per < nb) bands[j / per].push_back(static_cast<VertexId>(vi));
  }
  return bands;
}

ThreeCirclesVerdict three_circles_check(const ConformalField& v, double band_length, double eps_cylinder) {
  const auto& cyl = v.mesh();
  const auto bands = cylinder_bands(cyl, band_length);
  require(bands.size() >= 3, "three-circles check needs at least 3 bands");
  const auto r = scalar_curvature(v);
  const auto dv = conformal_volumes(v);
  ThreeCirclesVerdict out;
  double e[3] = {0, 0, 0};
  for (int i = 0; i < 3; ++i)
    for (VertexId w : bands[i]) {
      e[i] += v[w] * v[w] * cyl.volume(w);
      out.curvature_energy += r[w] * r[w] * dv[w];
    }
  out.e1 = e[0];
  out.e2 = e[1];
  out.e3 = e[2];
  const double q = std::exp(-band_length);
  out.metric_certified = cyl.topology() == Topology::cylinder_s3;
  out.hypothesis_met = out.metric_certified && out.curvature_energy < eps_cylinder;
  out.clause1_premise = e[0] <= q * e[1];
  out.clause1 = !out.clause1_premise || e[1] <= q * e[2];
  out.clause2_premise = e[1] >= q * e[2];
  out.clause2 = !out.clause2_premise || e[0] >= q * e[1];
  out.clause3 = e[0] <= q * e[1] || e[1] <= q * e[0];
  out.clause3_symmetric = e[1] <= q * e[0] || e[1] <= q * e[2];
  return out;
}

DecayProfile singularity_decay_profile(const ConformalField& v, double band_length, double p) {
  const auto bands = cylinder_bands(v.mesh(), band_length);
  require(bands.size() >= 4, "decay profile needs at least 4 bands");
  DecayProfile out;
  out.p = p;
  for (const auto& b : bands) {
    double e = 0.0;
    for (VertexId w : b) e += v[w] * v[w] * v.mesh().volume(w);
    out.energies.push_back(e);
  }
  const std::size_t n = out.energies.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i), y = std::log(out.energies[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  out.rate = std::exp(slope);
  bool all_down = true;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    out.ratios.push_back(out.energies[i + 1] / out.energies[i]);
    if (!(out.ratios.back() < 1.0)) all_down = false;
  }
  out.decaying = out.rate < 1.0 && all_down;
  out.growth_detected = !out.decaying;
  for (double e : out.energies) out.series_partial += std::pow(e, 0.25 * p);
  if (out.decaying) {
    const double q = std::pow(out.rate, 0.25 * p);
    out.series_tail_bound = std::pow(out.energies.back(), 0.25 * p) * q / (1.0 - q);
    out.summable = true;
  } else {
    out.series_tail_bound = std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace conflab
