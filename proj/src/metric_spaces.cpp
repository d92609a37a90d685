// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
#include "conflab/metric_spaces.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <random>
#include <sstream>

#include "conflab/io.hpp"

namespace conflab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* stencil_name(Stencil s) {
  switch (s) {
    case Stencil::axis: return "axis";
    case Stencil::face_diagonal: return "face_diagonal";
    case Stencil::full: return "full";
  }
  return "unknown";
}

Stencil parse_stencil(const std::string& s) {
  if (s == "axis") return Stencil::axis;
  if (s == "face_diagonal") return Stencil::face_diagonal;
  if (s == "full") return Stencil::full;
  fail(ErrorCode::invalid_argument, "unknown stencil '" + s + "'");
}

DistanceEngine::DistanceEngine(const ConformalField& u, Stencil stencil, std::span<const std::uint8_t> region_mask)
    : u_(u), symmetrize_(u.mesh().topology() == Topology::cylinder_s3) {
  const auto& m = u.mesh();
  const int n = m.dim();
  // Every nonzero offset in {-1,0,1}^n whose support size fits the stencil.
  const int max_support = stencil == Stencil::axis ? 1 : stencil == Stencil::face_diagonal ? 2 : n;
  int total = 1;
  for (int a = 0; a < n; ++a) total *= 3;
  for (int code = 0; code < total; ++code) {
    Move mv;
    int c = code;
    for (int a = 0; a < n; ++a) {
      const int d = c % 3 - 1;
      c /= 3;
      if (d != 0) mv.steps.emplace_back(a, d);
    }
    if (!mv.steps.empty() && static_cast<int>(mv.steps.size()) <= max_support) moves_.push_back(mv);
  }
  const double e = exponents(n).length;
  phi_.resize(u.size());
  for (std::size_t i = 0; i < phi_.size(); ++i) phi_[i] = e == 1.0 ? u[static_cast<VertexId>(i)] : std::pow(u[static_cast<VertexId>(i)], e);
  if (!region_mask.empty()) {
    require(region_mask.size() == u.size(), "region mask size mismatch");
    mask_.assign(region_mask.begin(), region_mask.end());
  }
  dist_.assign(u.size(), kInf);
}

VertexId DistanceEngine::walk(VertexId v, const Move& mv, int sign, double& len) const {
  const auto& m = u_.mesh();
  double l2 = 0.0;
  VertexId cur = v;
  for (const auto& [a, d0] : mv.steps) {
    const int d = d0 * sign;
    const VertexId nxt = m.neighbor(cur, a, d);
    if (nxt == kNoVertex || nxt == cur) return kNoVertex;
    const double l = d > 0 ? m.edge_length(cur, a) : m.edge_length(nxt, a);
    l2 += l * l;
    cur = nxt;
  }
  len = std::sqrt(l2);
  return cur;
}

const std::vector<double>& DistanceEngine::run(VertexId source) {
  std::fill(dist_.begin(), dist_.end(), kInf);
  if (!mask_.empty() && !mask_[source]) return dist_;
  using Item = std::pair<double, VertexId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist_[source] = 0.0;
  pq.emplace(0.0, source);
  while (!pq.empty()) {
    const auto [dv, v] = pq.top();
    pq.pop();
    if (dv > dist_[v]) continue;
    for (const Move& mv : moves_) {
      double len = 0.0;
      const VertexId w = walk(v, mv, +1, len);
      if (w == kNoVertex || w == v) continue;
      if (!mask_.empty() && !mask_[w]) continue;
      if (symmetrize_) {
        double back = 0.0;
        walk(w, mv, -1, back);
        len = 0.5 * (len + back);
      }
      const double nd = dv + len * 0.5 * (phi_[v] + phi_[w]);
      if (nd < dist_[w]) {
        dist_[w] = nd;
        pq.emplace(nd, w);
      }
    }
  }
  return dist_;
}

DistanceRows conformal_distances(const ConformalField& u, std::span<const VertexId> sources, Stencil stencil) {
  require(!sources.empty(), "sources must be nonempty");
  DistanceEngine eng(u, stencil);
  DistanceRows out;
  out.sources.assign(sources.begin(), sources.end());
  for (VertexId s : sources) out.rows.push_back(eng.run(s));
  return out;
}

namespace {

std::vector<std::uint8_t> region_mask(std::size_t nv, std::span<const VertexId> region) {
  std::vector<std::uint8_t> mask(nv, 0);
  for (VertexId v : region) mask[v] = 1;
  return mask;
}

}  // namespace

ConfinedDistance confined_distance(const ConformalField& u, VertexId x, VertexId y,
                                   std::span<const VertexId> region, Stencil stencil) {
  const auto mask = region_mask(u.size(), region);
  require(mask[x] && mask[y], "endpoints must lie in the region");
  DistanceEngine eng(u, stencil, mask);
  const double d = eng.run(x)[y];
  return {d, std::isfinite(d)};
}

DiameterEstimate region_diameter(const ConformalField& u, std::span<const VertexId> region, int sample_size,
                                 Stencil stencil) {
  require(!region.empty(), "region must be nonempty");
  require(sample_size >= 1, "sample size must be positive");
  DiameterEstimate out;
  if (region.size() == 1) {
    out.exact = true;
    out.sources = 1;
    return out;
  }
  if (static_cast<std::size_t>(sample_size) >= region.size()) {
    const auto mask = region_mask(u.size(), region);
    DistanceEngine eng(u, stencil, mask);
    for (VertexId s : region) {
      const auto& d = eng.run(s);
      for (VertexId t : region)
        if (std::isfinite(d[t])) out.diameter = std::max(out.diameter, d[t]);
    }
    out.exact = true;
    out.sources = static_cast<int>(region.size());
    return out;
  }
  // Farthest-point sources; each row reaches every region vertex, so the
  // sweep also sees non-landmark pairs. Unreachable vertices are skipped.
  std::vector<VertexId> members(region.begin(), region.end());
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  const auto mask = region_mask(u.size(), members);
  DistanceEngine eng(u, stencil, mask);
  std::vector<double> dmin(u.size(), kInf);
  VertexId next = members.front();
  for (int k = 0; k < sample_size; ++k) {
    const auto& d = eng.run(next);
    ++out.sources;
    double best = -1.0;
    VertexId arg = members.front();
    for (VertexId t : members) {
      if (std::isfinite(d[t])) out.diameter = std::max(out.diameter, d[t]);
      dmin[t] = std::min(dmin[t], d[t]);
      const double key = std::isfinite(dmin[t]) ? dmin[t] : std::numeric_limits<double>::max();
      if (key > best) {
        best = key;
        arg = t;
      }
    }
    out.covering_radius = best;
    next = arg;
  }
  return out;
}

FiniteMetricSpace::FiniteMetricSpace(std::vector<std::int64_t> ids, std::vector<double> dist,
                                     std::vector<double> measure, double tol)
    : ids_(std::move(ids)), dist_(std::move(dist)), measure_(std::move(measure)) {
  if (dist_.size() != ids_.size() * ids_.size()) fail(ErrorCode::format_error, "distance matrix has wrong size");
  if (!measure_.empty() && measure_.size() != ids_.size()) fail(ErrorCode::format_error, "measure has wrong size");
  std::string why;
  if (!check_axioms(tol, 10000, 7, &why)) fail(ErrorCode::format_error, "metric axioms violated: " + why);
}

double FiniteMetricSpace::diameter() const {
  double d = 0.0;
  for (double x : dist_) d = std::max(d, x);
  return d;
}

bool FiniteMetricSpace::check_axioms(double tol, std::size_t triples, std::uint64_t seed, std::string* why) const {
  const std::size_t n = size();
  auto say = [&](const std::string& s) {
    if (why) *why = s;
    return false;
  };
  for (std::size_t i = 0; i < n; ++i) {
    if ((*this)(i, i) != 0.0) return say("nonzero diagonal");
    for (std::size_t j = 0; j < n; ++j) {
      const double d = (*this)(i, j);
      if (!std::isfinite(d) || d < 0.0) return say("negative or non-finite distance");
      if (d != (*this)(j, i)) return say("asymmetric distance");
    }
  }
  if (n < 3) return true;
  const double slack = tol * std::max(1.0, diameter());
  auto ok = [&](std::size_t a, std::size_t b, std::size_t c) { return (*this)(a, c) <= (*this)(a, b) + (*this)(b, c) + slack; };
  if (n * n * n <= triples) {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < n; ++c)
          if (!ok(a, b, c)) return say("triangle inequality");
    return true;
  }
  std::mt19937_64 g(seed);
  for (std::size_t t = 0; t < triples; ++t) {
    const std::size_t a = g() % n, b = g() % n, c = g() % n;
    if (!ok(a, b, c)) return say("triangle inequality");
  }
  return true;
}

std::string FiniteMetricSpace::to_text() const {
  std::ostringstream os;
  os << "conflab-metric-space 1\n";
  os << "points " << size() << '\n';
  os << "ids";
  for (auto id : ids_) os << ' ' << id;
  os << '\n';
  if (measure_.empty()) os << "measure none\n";
  else {
    os << "measure";
    for (double x : measure_) os << ' ' << format_double(x);
    os << '\n';
  }
  for (std::size_t i = 0; i < size(); ++i) {
    os << "row";
    for (std::size_t j = 0; j < size(); ++j) os << ' ' << format_double((*this)(i, j));
    os << '\n';
  }
  return os.str();
}

FiniteMetricSpace FiniteMetricSpace::from_text(const std::string& text) {
  std::istringstream is(text);
  std::string tag, word;
  int version = 0;
  if (!(is >> tag >> version) || tag != "conflab-metric-space" || version != 1)
    fail(ErrorCode::format_error, "not a version-1 metric space document");
  std::size_t n = 0;
  if (!(is >> word >> n) || word != "points") fail(ErrorCode::format_error, "missing point count");
  std::vector<std::int64_t> ids(n);
  if (!(is >> word) || word != "ids") fail(ErrorCode::format_error, "missing ids");
  for (auto& id : ids)
    if (!(is >> id)) fail(ErrorCode::format_error, "truncated ids");
  std::vector<double> measure;
  if (!(is >> word) || word != "measure") fail(ErrorCode::format_error, "missing measure");
  std::string first;
  is >> first;
  if (first != "none") {
    measure.push_back(parse_double(first));
    for (std::size_t i = 1; i < n; ++i) {
      is >> word;
      measure.push_back(parse_double(word));
    }
  }
  std::vector<double> dist(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(is >> word) || word != "row") fail(ErrorCode::format_error, "missing row");
    for (std::size_t j = 0; j < n; ++j) {
      if (!(is >> word)) fail(ErrorCode::format_error, "truncated row");
      dist[i * n + j] = parse_double(word);
    }
  }
  return FiniteMetricSpace(std::move(ids), std::move(dist), std::move(measure));
}

LandmarkSet farthest_point_landmarks(const ConformalField& u, int m, Stencil stencil,
                                     std::span<const VertexId> region, VertexId first) {
  require(m >= 1, "landmark count must be positive");
  std::vector<std::uint8_t> mask;
  std::vector<VertexId> members;
  if (!region.empty()) {
    mask = region_mask(u.size(), region);
    members.assign(region.begin(), region.end());
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
  }
  DistanceEngine eng(u, stencil, mask);
  const std::size_t count = region.empty() ? u.size() : members.size();
  const int mm = static_cast<int>(std::min<std::size_t>(m, count));
  auto member = [&](std::size_t i) { return region.empty() ? static_cast<VertexId>(i) : members[i]; };

  LandmarkSet out;
  std::vector<double> dmin(u.size(), kInf);
  std::vector<double> dist(static_cast<std::size_t>(mm) * mm, 0.0);
  VertexId next = first != kNoVertex ? first : member(0);
  if (!mask.empty()) require(mask[next] != 0, "first landmark must lie in the region");
  for (int k = 0; k < mm; ++k) {
    out.ids.push_back(next);
    const auto& d = eng.run(next);
    // Entries against earlier landmarks come from the later row.
    for (int i = 0; i < k; ++i) {
      dist[static_cast<std::size_t>(i) * mm + k] = d[out.ids[i]];
      dist[static_cast<std::size_t>(k) * mm + i] = d[out.ids[i]];
    }
    double best = -1.0;
    VertexId arg = kNoVertex;
    for (std::size_t i = 0; i < count; ++i) {
      const VertexId v = member(i);
      dmin[v] = std::min(dmin[v], d[v]);
      if (dmin[v] > best) {
        best = dmin[v];
        arg = v;
      }
    }
    out.covering_radius = best;
    if (k + 1 < mm) next = arg;
  }
  std::vector<std::int64_t> ids(out.ids.begin(), out.ids.end());
  out.space = FiniteMetricSpace(std::move(ids), std::move(dist));
  return out;
}

FiniteMetricSpace metric_on_points(const ConformalField& u, std::span<const VertexId> points, Stencil stencil) {
  require(!points.empty(), "point list must be nonempty");
  DistanceEngine eng(u, stencil);
  const std::size_t L = points.size();
  std::vector<double> dist(L * L, 0.0);
  std::vector<std::int64_t> ids(points.begin(), points.end());
  for (std::size_t i = 0; i + 1 < L; ++i) {
    const auto& d = eng.run(points[i]);
    for (std::size_t j = i + 1; j < L; ++j) {
      dist[i * L + j] = d[points[j]];
      dist[j * L + i] = d[points[j]];
    }
  }
  return FiniteMetricSpace(std::move(ids), std::move(dist));
}

double gh_upper_shared(const FiniteMetricSpace& a, const FiniteMetricSpace& b) {
  if (a.ids() != b.ids()) fail(ErrorCode::invalid_argument, "metric spaces do not share a point set");
  double g = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) g = std::max(g, std::abs(a(i, j) - b(i, j)));
  return 0.5 * g;
}

namespace {

// Decides whether a correspondence of distortion <= tau exists.
class CorrespondenceSearch {
 public:
  CorrespondenceSearch(const FiniteMetricSpace& x, const FiniteMetricSpace& y, double tau)
      : x_(x), y_(y), tau_(tau) {}

  bool feasible() {
    chosen_.clear();
    return assign_x(0);
  }

 private:
  const FiniteMetricSpace& x_;
  const FiniteMetricSpace& y_;
  double tau_;
  std::vector<std::pair<std::size_t, std::size_t>> chosen_;

  bool compatible(std::size_t a, std::size_t b) const {
    for (const auto& [c, d] : chosen_)
      if (std::abs(x_(a, c) - y_(b, d)) > tau_) return false;
    return true;
  }
  bool covered_y(std::size_t b) const {
    for (const auto& pr : chosen_)
      if (pr.second == b) return true;
    return false;
  }
  bool assign_x(std::size_t a) {
    if (a == x_.size()) return assign_y(0);
    for (std::size_t b = 0; b < y_.size(); ++b) {
      if (!compatible(a, b)) continue;
      chosen_.emplace_back(a, b);
      if (assign_x(a + 1)) return true;
      chosen_.pop_back();
    }
    return false;
  }
  bool assign_y(std::size_t b) {
    if (b == y_.size()) return true;
    if (covered_y(b)) return assign_y(b + 1);
    for (std::size_t a = 0; a < x_.size(); ++a) {
      if (!compatible(a, b)) continue;
      chosen_.emplace_back(a, b);
      if (assign_y(b + 1)) return true;
      chosen_.pop_back();
    }
    return false;
  }
};

}  // namespace

double gh_bruteforce(const FiniteMetricSpace& x, const FiniteMetricSpace& y, std::size_t max_points) {
  if (x.size() > max_points || y.size() > max_points)
    fail(ErrorCode::budget_exceeded, "gh_bruteforce limited to " + std::to_string(max_points) + " points");
  require(x.size() > 0 && y.size() > 0, "metric spaces must be nonempty");
  std::vector<double> cand{0.0};
  for (std::size_t a = 0; a < x.size(); ++a)
    for (std::size_t c = 0; c < x.size(); ++c)
      for (std::size_t b = 0; b < y.size(); ++b)
        for (std::size_t d = 0; d < y.size(); ++d) cand.push_back(std::abs(x(a, c) - y(b, d)));
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  std::size_t lo = 0, hi = cand.size() - 1;  // the largest candidate is always feasible
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (CorrespondenceSearch(x, y, cand[mid]).feasible()) hi = mid;
    else lo = mid + 1;
  }
  return 0.5 * cand[lo];
}

ConvergenceReport uniform_convergence_report(std::span<const FiniteMetricSpace> family,
                                             const FiniteMetricSpace& reference,
                                             std::span<const std::uint8_t> excluded) {
  require(excluded.empty() || excluded.size() == reference.size(), "excluded flags size mismatch");
  ConvergenceReport r;
  for (const auto& d : family) {
    if (d.ids() != reference.ids()) fail(ErrorCode::invalid_argument, "family member does not share sources");
    double loc = 0.0, glob = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i)
      for (std::size_t j = i + 1; j < d.size(); ++j) {
        const double g = std::abs(d(i, j) - reference(i, j));
        glob = std::max(glob, g);
        if (excluded.empty() || (!excluded[i] && !excluded[j])) loc = std::max(loc, g);
      }
    r.local_gaps.push_back(loc);
    r.global_gaps.push_back(glob);
  }
  return r;
}

ConvergenceReport uniform_convergence_report(std::span<const DistanceRows> family, const DistanceRows& reference,
                                             std::span<const std::uint8_t> excluded_vertices) {
  ConvergenceReport r;
  const auto& src = reference.sources;
  for (const auto& d : family) {
    if (d.sources != src) fail(ErrorCode::invalid_argument, "family member does not share sources");
    double loc = 0.0, glob = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i)
      for (std::size_t j = 0; j < src.size(); ++j) {
        if (i == j) continue;
        const double g = std::abs(d.rows[i][src[j]] - reference.rows[i][src[j]]);
        glob = std::max(glob, g);
        const bool ex = !excluded_vertices.empty() && (excluded_vertices[src[i]] || excluded_vertices[src[j]]);
        if (!ex) loc = std::max(loc, g);
      }
    r.local_gaps.push_back(loc);
    r.global_gaps.push_back(glob);
  }
  return r;
}

}  // namespace conflab
