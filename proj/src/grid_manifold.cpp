// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
#include "conflab/grid_manifold.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

namespace conflab {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

Axis uniform_periodic_axis(double side, int divisions) {
  Axis a;
  a.kind = AxisKind::periodic;
  a.period = side;
  a.nodes.resize(divisions);
  const double h = side / divisions;
  for (int j = 0; j < divisions; ++j) a.nodes[j] = j * h;
  return a;
}

Axis graded_periodic_axis(double side, int divisions, const AxisGrading& g) {
  const int m = static_cast<int>(g.foci.size());
  require(m >= 1, "graded axis needs at least one focus");
  require(g.ratio > 1.0, "grading ratio must exceed 1");
  require(divisions % (2 * m) == 0, "graded axis divisions must be a multiple of 2 x focus count");
  std::vector<double> foci = g.foci;
  std::sort(foci.begin(), foci.end());
  const double seg = side / m;
  for (int i = 1; i < m; ++i)
    require(std::abs(foci[i] - foci[0] - i * seg) <= 1e-12 * side, "grading foci must be equally spaced");

  const int q = divisions / (2 * m);
  const double beta = std::acosh(g.ratio);
  const double a = 0.5 * seg / std::sinh(beta);
  Axis ax;
  ax.kind = AxisKind::periodic;
  ax.period = side;
  for (int s = 0; s < m; ++s) {
    for (int j = -q; j < q; ++j) {
      double x = foci[s] + a * std::sinh(beta * static_cast<double>(j) / q);
      x = std::fmod(x, side);
      if (x < 0) x += side;
      if (x >= side) x -= side;
      ax.nodes.push_back(x);
    }
  }
  std::sort(ax.nodes.begin(), ax.nodes.end());
  for (int i = 0; i + 1 < ax.count(); ++i)
    require(ax.nodes[i + 1] > ax.nodes[i], "graded axis produced coincident nodes");
  return ax;
}

}  // namespace

const char* topology_name(Topology t) {
  switch (t) {
    case Topology::torus: return "torus";
    case Topology::cylinder_s3: return "cylinder_s3";
    case Topology::stereo_ball: return "stereo_ball";
  }
  return "unknown";
}

double Axis::step(int i) const {
  if (i + 1 < count()) return nodes[i + 1] - nodes[i];
  if (kind == AxisKind::periodic) return nodes.front() + period - nodes.back();
  return 0.0;
}

double Axis::dual(int i) const {
  if (kind == AxisKind::periodic) {
    const int prev = (i + count() - 1) % count();
    return 0.5 * (step(prev) + step(i));
  }
  // Open and closed axes here are uniform or cell-centred: the control width
  // is the local spacing.
  if (count() == 1) return 0.0;
  return i + 1 < count() ? step(i) : step(i - 1);
}

double Axis::delta(double a, double b) const {
  double d = b - a;
  if (kind == AxisKind::periodic) d -= period * std::round(d / period);
  return d;
}

// Assembles a GridManifold from axes plus per-topology metric data.
class GridBuilder {
 public:
  static MeshPtr torus(const TorusSpec& s);
  static MeshPtr cylinder(const CylinderSpec& s);
  static MeshPtr ball(const StereoBallSpec& s);

 private:
  static void init_lattice(GridManifold& m);
  static void link_neighbors(GridManifold& m);
  static void finish(GridManifold& m);
};

void GridBuilder::init_lattice(GridManifold& m) {
  m.shape_.clear();
  m.strides_.clear();
  std::int64_t stride = 1;
  for (const Axis& a : m.axes_) {
    m.shape_.push_back(a.count());
    m.strides_.push_back(stride);
    stride *= a.count();
  }
}

void GridBuilder::link_neighbors(GridManifold& m) {
  const int n = m.dim_;
  const std::size_t nv = m.vertex_count();
  m.nbr_.assign(nv * 2 * n, kNoVertex);
  m.boundary_.assign(nv, 0);
  for (std::size_t vi = 0; vi < nv; ++vi) {
    const auto v = static_cast<VertexId>(vi);
    const auto idx = m.lattice_coords(v);
    for (int a = 0; a < n; ++a) {
      const Axis& ax = m.axes_[a];
      for (int dir = -1; dir <= 1; dir += 2) {
        auto j = idx;
        j[a] += dir;
        if (ax.kind == AxisKind::periodic) {
          j[a] = (j[a] + ax.count()) % ax.count();
        }
        VertexId w = kNoVertex;
        if (j[a] >= 0 && j[a] < ax.count()) w = m.vertex_at(j);
        m.nbr_[vi * 2 * n + 2 * a + (dir > 0 ? 1 : 0)] = w;
        if (w == kNoVertex && ax.kind == AxisKind::open) m.boundary_[vi] = 1;
      }
    }
  }
}

void GridBuilder::finish(GridManifold& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const int tag = static_cast<int>(m.topology_);
  h = fnv1a(h, &tag, sizeof tag);
  h = fnv1a(h, m.shape_.data(), m.shape_.size() * sizeof(int));
  for (const Axis& a : m.axes_) h = fnv1a(h, a.nodes.data(), a.nodes.size() * sizeof(double));
  h = fnv1a(h, m.volume_.data(), m.volume_.size() * sizeof(double));
  h = fnv1a(h, m.cond_.data(), m.cond_.size() * sizeof(double));
  if (!m.vertex_to_lattice_.empty())
    h = fnv1a(h, m.vertex_to_lattice_.data(), m.vertex_to_lattice_.size() * sizeof(std::int64_t));
  m.hash_ = h;
}

MeshPtr GridBuilder::torus(const TorusSpec& s) {
  require(s.dim == 3 || s.dim == 4, "torus dimension must be 3 or 4");
  require(s.divisions >= 4, "torus divisions must be at least 4");
  require(s.side > 0 && std::isfinite(s.side), "torus side must be positive");
  require(s.grading.empty() || static_cast<int>(s.grading.size()) == s.dim,
          "grading must list one entry per axis");
  std::shared_ptr<GridManifold> m(new GridManifold());
  m->dim_ = s.dim;
  m->topology_ = Topology::torus;
  m->spec_ = s;
  m->r0_ = 0.0;
  for (int a = 0; a < s.dim; ++a) {
    const bool graded = !s.grading.empty() && !s.grading[a].foci.empty() && s.grading[a].ratio > 1.0;
    m->axes_.push_back(graded ? graded_periodic_axis(s.side, s.divisions, s.grading[a])
                              : uniform_periodic_axis(s.side, s.divisions));
  }
  init_lattice(*m);
  std::int64_t total = 1;
  for (int c : m->shape_) total *= c;
  require(total < (std::int64_t{1} << 31), "torus too large");
  const auto nv = static_cast<std::size_t>(total);
  m->volume_.resize(nv);
  m->cond_.assign(nv * s.dim, 0.0);
  m->elen_.assign(nv * s.dim, 0.0);
  std::vector<std::vector<double>> dual(s.dim);
  for (int a = 0; a < s.dim; ++a)
    for (int i = 0; i < m->axes_[a].count(); ++i) dual[a].push_back(m->axes_[a].dual(i));
  for (std::size_t vi = 0; vi < nv; ++vi) {
    const auto idx = m->lattice_coords(static_cast<VertexId>(vi));
    double w = 1.0;
    for (int a = 0; a < s.dim; ++a) w *= dual[a][idx[a]];
    m->volume_[vi] = w;
    for (int a = 0; a < s.dim; ++a) {
      const double step = m->axes_[a].step(idx[a]);
      m->cond_[a * nv + vi] = w / dual[a][idx[a]] / step;
      m->elen_[a * nv + vi] = step;
    }
  }
  link_neighbors(*m);
  finish(*m);
  return m;
}

MeshPtr GridBuilder::cylinder(const CylinderSpec& s) {
  require(s.band_length > 0 && std::isfinite(s.band_length), "band length must be positive");
  require(s.num_bands >= 3, "cylinder needs at least 3 bands");
  require(s.t_divisions_per_band >= 1, "t divisions per band must be positive");
  require(s.s3_resolution >= 4, "s3_resolution below 4 leaves only pole-adjacent cells");
  std::shared_ptr<GridManifold> m(new GridManifold());
  m->dim_ = 4;
  m->topology_ = Topology::cylinder_s3;
  m->spec_ = s;
  m->r0_ = 6.0;

  const int nt = s.num_bands * s.t_divisions_per_band;
  const int npsi = s.s3_resolution;
  const int ntheta = s.s3_resolution;
  const int nphi = 2 * s.s3_resolution;
  const double dt = s.band_length / s.t_divisions_per_band;
  const double dpsi = kPi / npsi;
  const double dtheta = kPi / ntheta;
  const double dphi = 2.0 * kPi / nphi;

  Axis at, apsi, atheta, aphi;
  at.kind = AxisKind::open;
  for (int j = 0; j < nt; ++j) at.nodes.push_back(s.t_offset + (j + 0.5) * dt);
  apsi.kind = AxisKind::closed;
  for (int i = 0; i < npsi; ++i) apsi.nodes.push_back((i + 0.5) * dpsi);
  atheta.kind = AxisKind::closed;
  for (int i = 0; i < ntheta; ++i) atheta.nodes.push_back((i + 0.5) * dtheta);
  aphi.kind = AxisKind::periodic;
  aphi.period = 2.0 * kPi;
  for (int i = 0; i < nphi; ++i) aphi.nodes.push_back((i + 0.5) * dphi);
  m->axes_ = {at, apsi, atheta, aphi};
  init_lattice(*m);

  // Exact cell integrals of the S^3 measure sin^2(psi) sin(theta).
  std::vector<double> psi_cell(npsi), theta_cell(ntheta);
  for (int i = 0; i < npsi; ++i) {
    const double lo = i * dpsi, hi = (i + 1) * dpsi;
    psi_cell[i] = 0.5 * (hi - lo) - 0.25 * (std::sin(2 * hi) - std::sin(2 * lo));
  }
  for (int i = 0; i < ntheta; ++i) theta_cell[i] = std::cos(i * dtheta) - std::cos((i + 1) * dtheta);

  const std::size_t nv = static_cast<std::size_t>(nt) * npsi * ntheta * nphi;
  m->volume_.resize(nv);
  m->cond_.assign(nv * 4, 0.0);
  m->elen_.assign(nv * 4, 0.0);
  for (std::size_t vi = 0; vi < nv; ++vi) {
    const auto idx = m->lattice_coords(static_cast<VertexId>(vi));
    const int j = idx[0], ip = idx[1], it = idx[2];
    const double psi = apsi.nodes[ip], theta = atheta.nodes[it];
    m->volume_[vi] = dt * psi_cell[ip] * theta_cell[it] * dphi;
    if (j + 1 < nt) m->cond_[0 * nv + vi] = psi_cell[ip] * theta_cell[it] * dphi / dt;
    if (ip + 1 < npsi) {
      const double sf = std::sin((ip + 1) * dpsi);
      m->cond_[1 * nv + vi] = sf * sf * theta_cell[it] * dphi * dt / dpsi;
    }
    if (it + 1 < ntheta) {
      m->cond_[2 * nv + vi] = std::sin((it + 1) * dtheta) * dpsi * dphi * dt / dtheta;
    }
    m->cond_[3 * nv + vi] = dpsi * (dtheta / std::sin(theta)) * dt / dphi;
    m->elen_[0 * nv + vi] = j + 1 < nt ? dt : 0.0;
    m->elen_[1 * nv + vi] = ip + 1 < npsi ? dpsi : 0.0;
    m->elen_[2 * nv + vi] = it + 1 < ntheta ? std::sin(psi) * dtheta : 0.0;
    m->elen_[3 * nv + vi] = std::sin(psi) * std::sin(theta) * dphi;
  }
  link_neighbors(*m);

  BandDecomposition bd;
  bd.band_length = s.band_length;
  bd.t_origin = s.t_offset;
  bd.cells_per_band = s.t_divisions_per_band;
  bd.bands.resize(s.num_bands);
  for (std::size_t vi = 0; vi < nv; ++vi) {
    const int j = m->lattice_coords(static_cast<VertexId>(vi))[0];
    bd.bands[j / s.t_divisions_per_band].push_back(static_cast<VertexId>(vi));
  }
  m->bands_ = std::move(bd);
  finish(*m);
  return m;
}

MeshPtr GridBuilder::ball(const StereoBallSpec& s) {
  require(s.dim == 3 || s.dim == 4, "stereo_ball dimension must be 3 or 4");
  require(s.cutoff > 0 && std::isfinite(s.cutoff), "cutoff radius must be positive");
  require(s.divisions >= 2 && s.divisions % 2 == 0, "stereo_ball divisions must be even");
  const double lattice = std::pow(static_cast<double>(s.divisions + 1), s.dim);
  require(lattice < 2.0e9, "stereo_ball lattice too large");
  // Count before allocating so an over-budget request fails cheaply.
  const double h = 2.0 * s.cutoff / s.divisions;
  const int np = s.divisions + 1;
  const double r2max = s.cutoff * s.cutoff * (1.0 + 1e-12);
  auto node = [&](int j) { return -s.cutoff + j * h; };
  std::size_t count = 0;
  {
    std::array<int, 4> idx{};
    const std::int64_t total = static_cast<std::int64_t>(lattice);
    for (std::int64_t li = 0; li < total; ++li) {
      std::int64_t r = li;
      double r2 = 0;
      for (int a = 0; a < s.dim; ++a) {
        idx[a] = static_cast<int>(r % np);
        r /= np;
        r2 += node(idx[a]) * node(idx[a]);
      }
      if (r2 <= r2max) ++count;
    }
  }
  if (count > s.vertex_budget)
    fail(ErrorCode::budget_exceeded, "stereo_ball has " + std::to_string(count) +
                                         " vertices, over budget " + std::to_string(s.vertex_budget));

  std::shared_ptr<GridManifold> m(new GridManifold());
  m->dim_ = s.dim;
  m->topology_ = Topology::stereo_ball;
  m->spec_ = s;
  m->r0_ = 0.0;
  for (int a = 0; a < s.dim; ++a) {
    Axis ax;
    ax.kind = AxisKind::open;
    for (int j = 0; j < np; ++j) ax.nodes.push_back(node(j));
    m->axes_.push_back(ax);
  }
  init_lattice(*m);
  const auto total = static_cast<std::int64_t>(lattice);
  m->lattice_to_vertex_.assign(static_cast<std::size_t>(total), kNoVertex);
  m->vertex_to_lattice_.reserve(count);
  for (std::int64_t li = 0; li < total; ++li) {
    std::int64_t r = li;
    double r2 = 0;
    for (int a = 0; a < s.dim; ++a) {
      const double x = node(static_cast<int>(r % np));
      r /= np;
      r2 += x * x;
    }
    if (r2 <= r2max) {
      m->lattice_to_vertex_[li] = static_cast<VertexId>(m->vertex_to_lattice_.size());
      m->vertex_to_lattice_.push_back(li);
    }
  }
  const std::size_t nv = m->vertex_to_lattice_.size();
  m->volume_.assign(nv, std::pow(h, s.dim));
  m->cond_.assign(nv * s.dim, 0.0);
  m->elen_.assign(nv * s.dim, 0.0);
  link_neighbors(*m);
  const double kappa = std::pow(h, s.dim - 2);
  for (std::size_t vi = 0; vi < nv; ++vi) {
    for (int a = 0; a < s.dim; ++a) {
      if (m->neighbor(static_cast<VertexId>(vi), a, +1) != kNoVertex) {
        m->cond_[a * nv + vi] = kappa;
        m->elen_[a * nv + vi] = h;
      }
    }
  }
  finish(*m);
  return m;
}

std::int64_t GridManifold::lattice_index(VertexId v) const {
  return vertex_to_lattice_.empty() ? static_cast<std::int64_t>(v) : vertex_to_lattice_[v];
}

std::array<int, 4> GridManifold::lattice_coords(VertexId v) const {
  std::array<int, 4> idx{};
  std::int64_t r = lattice_index(v);
  for (int a = 0; a < dim_; ++a) {
    idx[a] = static_cast<int>(r % shape_[a]);
    r /= shape_[a];
  }
  return idx;
}

VertexId GridManifold::vertex_at(const std::array<int, 4>& idx) const {
  std::int64_t li = 0;
  for (int a = 0; a < dim_; ++a) {
    if (idx[a] < 0 || idx[a] >= shape_[a]) return kNoVertex;
    li += idx[a] * strides_[a];
  }
  if (lattice_to_vertex_.empty()) return static_cast<VertexId>(li);
  return lattice_to_vertex_[static_cast<std::size_t>(li)];
}

Point GridManifold::coords(VertexId v) const {
  const auto idx = lattice_coords(v);
  Point p{};
  for (int a = 0; a < dim_; ++a) p[a] = axes_[a].nodes[idx[a]];
  return p;
}

double GridManifold::total_volume() const {
  double s = 0;
  for (double w : volume_) s += w;
  return s;
}

std::array<double, 4> GridManifold::metric_diag(const Point& p) const {
  std::array<double, 4> g{1.0, 1.0, 1.0, 1.0};
  if (topology_ == Topology::cylinder_s3) {
    const double sp = std::sin(p[1]), st = std::sin(p[2]);
    g[2] = sp * sp;
    g[3] = sp * sp * st * st;
  }
  return g;
}

namespace {

std::array<double, 4> s3_embed(const Point& p) {
  const double sp = std::sin(p[1]), st = std::sin(p[2]);
  return {std::cos(p[1]), sp * std::cos(p[2]), sp * st * std::cos(p[3]), sp * st * std::sin(p[3])};
}

}  // namespace

double GridManifold::base_distance(const Point& a, const Point& b) const {
  if (topology_ == Topology::cylinder_s3) {
    const double dt = b[0] - a[0];
    const auto ea = s3_embed(a), eb = s3_embed(b);
    double c = 0;
    for (int i = 0; i < 4; ++i) c += ea[i] * eb[i];
    const double ang = std::acos(std::clamp(c, -1.0, 1.0));
    return std::sqrt(dt * dt + ang * ang);
  }
  double s = 0;
  for (int i = 0; i < dim_; ++i) {
    const double d = axes_[i].delta(a[i], b[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

double GridManifold::min_spacing() const {
  double h = INFINITY;
  for (double l : elen_)
    if (l > 0) h = std::min(h, l);
  return h;
}

MeshPtr build_torus(int n, double side, int divisions) {
  TorusSpec s;
  s.dim = n;
  s.side = side;
  s.divisions = divisions;
  return GridBuilder::torus(s);
}
MeshPtr build_torus(const TorusSpec& spec) { return GridBuilder::torus(spec); }

MeshPtr build_cylinder(double band_length, int num_bands, int t_divisions_per_band, int s3_resolution) {
  CylinderSpec s;
  s.band_length = band_length;
  s.num_bands = num_bands;
  s.t_divisions_per_band = t_divisions_per_band;
  s.s3_resolution = s3_resolution;
  return GridBuilder::cylinder(s);
}
MeshPtr build_cylinder(const CylinderSpec& spec) { return GridBuilder::cylinder(spec); }

MeshPtr build_stereo_ball(int n, double cutoff_radius, int divisions, std::size_t vertex_budget) {
  StereoBallSpec s;
  s.dim = n;
  s.cutoff = cutoff_radius;
  s.divisions = divisions;
  s.vertex_budget = vertex_budget;
  return GridBuilder::ball(s);
}
MeshPtr build_stereo_ball(const StereoBallSpec& spec) { return GridBuilder::ball(spec); }

MeshPtr build_mesh(const MeshSpec& spec) {
  return std::visit([](const auto& s) -> MeshPtr {
    using T = std::decay_t<decltype(s)>;
    if constexpr (std::is_same_v<T, TorusSpec>) return GridBuilder::torus(s);
    else if constexpr (std::is_same_v<T, CylinderSpec>) return GridBuilder::cylinder(s);
    else return GridBuilder::ball(s);
  }, spec);
}

std::vector<double> laplacian_apply(const GridManifold& m, std::span<const double> f) {
  const std::size_t nv = m.vertex_count();
  require(f.size() == nv, "field size does not match mesh");
  const int n = m.dim();
  std::vector<double> out(nv, 0.0);
  for (std::size_t vi = 0; vi < nv; ++vi) {
    const auto v = static_cast<VertexId>(vi);
    const double fv = f[vi];
    double acc = 0.0;
    for (int a = 0; a < n; ++a) {
      for (int dir = -1; dir <= 1; dir += 2) {
        const VertexId w = m.neighbor(v, a, dir);
        if (w != kNoVertex) {
          const double k = dir > 0 ? m.conductance(v, a) : m.conductance(w, a);
          acc += k * (f[w] - fv);
          continue;
        }
        if (m.axes()[a].kind == AxisKind::closed) continue;
        const VertexId o = m.neighbor(v, a, -dir);
        if (o == kNoVertex) continue;
        const double k = dir > 0 ? m.conductance(o, a) : m.conductance(v, a);
        const VertexId o2 = m.neighbor(o, a, -dir);
        const double ghost = o2 != kNoVertex ? 3.0 * fv - 3.0 * f[o] + f[o2] : f[o];
        acc += k * (ghost - fv);
      }
    }
    out[vi] = acc / m.volume(v);
  }
  return out;
}

std::vector<VertexId> ball_vertices(const GridManifold& m, const Point& c, double r) {
  require(r >= 0, "ball radius must be nonnegative");
  const int n = m.dim();
  std::vector<std::vector<int>> cand(n);
  for (int a = 0; a < n; ++a) {
    const Axis& ax = m.axes()[a];
    const bool angular = m.topology() == Topology::cylinder_s3 && a >= 2;
    for (int i = 0; i < ax.count(); ++i) {
      if (angular || std::abs(ax.delta(c[a], ax.nodes[i])) <= r) cand[a].push_back(i);
    }
    if (cand[a].empty()) return {};
  }
  std::vector<VertexId> out;
  std::array<std::size_t, 4> pos{};
  while (true) {
    std::array<int, 4> idx{};
    for (int a = 0; a < n; ++a) idx[a] = cand[a][pos[a]];
    const VertexId v = m.vertex_at(idx);
    if (v != kNoVertex && m.base_distance(c, m.coords(v)) <= r) out.push_back(v);
    int a = 0;
    for (; a < n; ++a) {
      if (++pos[a] < cand[a].size()) break;
      pos[a] = 0;
    }
    if (a == n) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<VertexId> ball_vertices(const GridManifold& m, VertexId center, double r) {
  auto out = ball_vertices(m, m.coords(center), r);
  if (out.empty() || !std::binary_search(out.begin(), out.end(), center)) {
    out.push_back(center);
    std::sort(out.begin(), out.end());
  }
  return out;
}

double interpolate(const GridManifold& m, std::span<const double> f, const Point& p) {
  require(m.topology() != Topology::cylinder_s3, "interpolation is supported on flat charts only");
  const int n = m.dim();
  std::array<int, 4> lo{};
  std::array<double, 4> t{};
  for (int a = 0; a < n; ++a) {
    const Axis& ax = m.axes()[a];
    double x = p[a];
    if (ax.kind == AxisKind::periodic) {
      x = std::fmod(x - ax.nodes.front(), ax.period);
      if (x < 0) x += ax.period;
      x += ax.nodes.front();
      auto it = std::upper_bound(ax.nodes.begin(), ax.nodes.end(), x);
      int i = static_cast<int>(it - ax.nodes.begin()) - 1;
      if (i < 0) i = ax.count() - 1;
      lo[a] = i;
      t[a] = std::clamp((x - ax.nodes[i]) / ax.step(i), 0.0, 1.0);
    } else {
      const double tol = 1e-12 * (std::abs(ax.nodes.back()) + std::abs(ax.nodes.front()) + 1.0);
      if (x < ax.nodes.front() - tol || x > ax.nodes.back() + tol)
        fail(ErrorCode::chart_overflow, "interpolation point outside chart");
      auto it = std::upper_bound(ax.nodes.begin(), ax.nodes.end(), x);
      int i = std::clamp(static_cast<int>(it - ax.nodes.begin()) - 1, 0, ax.count() - 2);
      lo[a] = i;
      t[a] = std::clamp((x - ax.nodes[i]) / ax.step(i), 0.0, 1.0);
    }
  }
  double acc = 0.0;
  for (int corner = 0; corner < (1 << n); ++corner) {
    double wgt = 1.0;
    std::array<int, 4> idx{};
    for (int a = 0; a < n; ++a) {
      const bool up = (corner >> a) & 1;
      wgt *= up ? t[a] : 1.0 - t[a];
      idx[a] = lo[a] + (up ? 1 : 0);
      if (m.axes()[a].kind == AxisKind::periodic) idx[a] %= m.axes()[a].count();
    }
    if (wgt == 0.0) continue;
    const VertexId v = m.vertex_at(idx);
    if (v == kNoVertex) fail(ErrorCode::chart_overflow, "interpolation stencil leaves the chart");
    acc += wgt * f[v];
  }
  return acc;
}

double admissible_radius(const GridManifold& m, VertexId v) {
  const Point p = m.coords(v);
  switch (m.topology()) {
    case Topology::torus: {
      double r = INFINITY;
      for (const Axis& a : m.axes()) r = std::min(r, 0.5 * a.period);
      return r;
    }
    case Topology::stereo_ball: {
      const auto& s = std::get<StereoBallSpec>(m.spec());
      double r2 = 0;
      for (int a = 0; a < m.dim(); ++a) r2 += p[a] * p[a];
      return std::max(0.0, s.cutoff - std::sqrt(r2));
    }
    case Topology::cylinder_s3: {
      const auto& s = std::get<CylinderSpec>(m.spec());
      const double t0 = s.t_offset, t1 = s.t_offset + s.num_bands * s.band_length;
      return std::max(0.0, std::min(p[0] - t0, t1 - p[0]));
    }
  }
  return 0.0;
}

}  // namespace conflab
