// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "conflab/bubbles.hpp"
#include "conflab/scenario.hpp"

using namespace conflab;

namespace {
constexpr double kPi = std::numbers::pi;

template <class F>
ErrorCode error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<ErrorCode>(0);
}

VertexId origin_of(const GridManifold& b) {
  for (VertexId v = 0; v < static_cast<VertexId>(b.vertex_count()); ++v)
    if (b.coords(v) == Point{}) return v;
  return kNoVertex;
}

// Smallest radius whose closed ball about x holds `level`, by a full sort.
double radius_oracle(const ConformalField& u, VertexId x, double level) {
  const auto& m = u.mesh();
  const auto dens = curvature_energy_density(u);
  std::vector<std::pair<double, VertexId>> byd;
  for (VertexId v = 0; v < static_cast<VertexId>(m.vertex_count()); ++v)
    byd.emplace_back(m.base_distance(m.coords(x), m.coords(v)), v);
  std::sort(byd.begin(), byd.end());
  double run = 0.0;
  for (std::size_t i = 0; i < byd.size();) {
    const double d = byd[i].first;
    while (i < byd.size() && byd[i].first == d) run += dens[byd[i++].second];
    if (run >= level) return d <= admissible_radius(m, x) ? d : INFINITY;
  }
  return INFINITY;
}
}  // namespace

TEST_CASE("tail and classification windows") {
  CHECK(tail_length(1) == 1);
  CHECK(tail_length(6) == 1);
  CHECK(tail_length(8) == 2);
  CHECK(tail_length(13) == 3);
  CHECK(classification_window(4) == 2);
  CHECK(classification_window(9) == 3);
  CHECK(classification_window(12) == 3);
}

TEST_CASE("energy density integrates to the curvature energy") {
  const auto t = build_torus(4, 1.0, 8);
  const auto u = profile_field(t, "bubble", 0.2, {0.5, 0.5, 0.5, 0.5});
  const auto d = curvature_energy_density(u);
  CHECK(std::accumulate(d.begin(), d.end(), 0.0) == doctest::Approx(heat_invariants(u).r2_integral).epsilon(1e-12));
  for (double x : d) CHECK(x >= 0.0);
}

TEST_CASE("concentration scan finds the bubble centre") {
  const auto t = build_torus(4, 1.0, 10);
  const Point c{0.5, 0.5, 0.5, 0.5};
  std::vector<ConformalField> fam;
  for (double lam : {0.3, 0.2, 0.15}) fam.push_back(profile_field(t, "bubble", lam, c));
  const VertexId centre = t->vertex_at({5, 5, 5, 5});
  const VertexId near = t->vertex_at({6, 5, 5, 5});
  const std::vector<VertexId> centers{0, centre, near};
  const std::vector<double> radii{0.15, 0.3};
  const auto dens = curvature_energy_density(fam[1]);
  double e = 0.0;
  for (VertexId v : ball_vertices(*t, centre, 0.3)) e += dens[v];
  const auto p = concentration_scan(fam, centers, radii, 100.0);
  CHECK(p.families == 3);
  CHECK(p.tail_begin == 2);
  CHECK(p.at(1, 1, 1) == doctest::Approx(e).epsilon(1e-12));
  CHECK(p.at(2, 1, 0) > 10 * p.at(2, 0, 0));
  const std::set<VertexId> passing(p.passing.begin(), p.passing.end());
  CHECK(passing.count(centre));
  CHECK_FALSE(passing.count(0));
  // The neighbouring centre merges into the stronger one.
  CHECK(p.bubble_points == std::vector<VertexId>{centre});
}

TEST_CASE("first concentration scale against a sorted-ball oracle") {
  const auto t = build_torus(3, 1.0, 10);
  const auto u = profile_field(t, "bubble", 0.08, {0.45, 0.5, 0.5, 0});
  const auto dens = curvature_energy_density(u);
  const double total = std::accumulate(dens.begin(), dens.end(), 0.0);
  std::vector<VertexId> cand;
  for (VertexId v = 0; v < static_cast<VertexId>(t->vertex_count()); v += 37) cand.push_back(v);
  cand.push_back(t->vertex_at({4, 5, 5, 0}));
  for (double frac : {0.2, 0.5}) {
    const auto s = first_concentration_scale(u, frac * total, cand);
    double best = INFINITY;
    VertexId arg = kNoVertex;
    for (VertexId x : cand) {
      const double r = radius_oracle(u, x, frac * total);
      if (r < best || (r == best && x < arg)) best = r, arg = x;
    }
    REQUIRE(s.found);
    CHECK(s.radius == best);
    CHECK(s.center == arg);
    CHECK(s.energy >= frac * total);
  }
  CHECK_FALSE(first_concentration_scale(u, 2 * total).found);
  CHECK(error_code([&] { first_concentration_scale(u, 0.0); }) == ErrorCode::invalid_argument);
}

TEST_CASE("half the sphere energy sits in the ball of radius lambda") {
  // Cap of polar angle theta holds Vol(S^3) (2/3 - cos + cos^3/3); theta = pi/2 at |x| = lambda.
  const double lam = 0.5;
  const auto b = build_stereo_ball(4, 2.0, 32);
  const auto u = profile_field(b, "bubble", lam);
  const double half = 144.0 * 2 * kPi * kPi * (2.0 / 3.0);
  const auto s = first_concentration_scale(u, 0.5 * half, {}, 32);
  REQUIRE(s.found);
  const Point pc = b->coords(s.center);
  CHECK(std::sqrt(pc[0] * pc[0] + pc[1] * pc[1] + pc[2] * pc[2] + pc[3] * pc[3]) <= 0.125 * 1.01);
  CHECK(std::abs(s.radius - lam) <= 0.125);
  // Scale covariance: the same level is reached at a proportional radius.
  const auto u2 = profile_field(b, "bubble", lam / 2);
  const auto s2 = first_concentration_scale(u2, 0.5 * half, {}, 32);
  REQUIRE(s2.found);
  CHECK(std::abs(s2.radius - lam / 2) <= 0.125);
}

TEST_CASE("blowup rescaling maps a bubble to the standard one") {
  const double lam = 0.5;
  const auto src = build_stereo_ball(4, 2.0, 32);
  const auto u = profile_field(src, "bubble", lam);
  const auto target = build_stereo_ball(4, 2.0, 8);
  const auto v = blowup_rescale(u, Point{}, lam, target);
  for (VertexId i = 0; i < static_cast<VertexId>(target->vertex_count()); ++i) {
    const Point y = target->coords(i);
    const double y2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3];
    CHECK(v[i] == doctest::Approx(2.0 / (1.0 + y2)).epsilon(0.03));
  }
  const auto tor = build_torus(4, 1.0, 8);
  CHECK(error_code([&] { blowup_rescale(profile_field(tor, "constant", 1.0), Point{}, 0.3, target); }) ==
        ErrorCode::chart_overflow);
}

TEST_CASE("pair classification fixtures") {
  const int K = 8;
  const PairThresholds th;
  std::vector<Point> x0(K, Point{}), x1(K, Point{1, 0, 0, 0});
  std::vector<double> shrink(K), one(K, 1.0), tenth(K, 0.1);
  for (int k = 0; k < K; ++k) shrink[k] = std::pow(0.5, k);
  CHECK(classify_pair(x0, shrink, x0, shrink, 3, th) == PairClass::essentially_same);
  CHECK(classify_pair(x0, shrink, x1, shrink, 3, th) == PairClass::separated);
  CHECK(classify_pair(x0, one, x0, shrink, 3, th) == PairClass::nested);
  CHECK(classify_pair(x0, one, x0, tenth, 3, th) == PairClass::indeterminate);
  CHECK(std::string(pair_class_name(PairClass::nested)) == "nested");

  const auto t = build_torus(3, 1.0, 8);
  BlowupSequence a{std::vector<VertexId>(K, 0), shrink};
  CHECK(classify_pair(*t, a, a, th) == PairClass::essentially_same);
  BlowupSequence bad{std::vector<VertexId>(K - 1, 0), std::vector<double>(K - 1, 1.0)};
  CHECK(error_code([&] { classify_pair(*t, a, bad, th); }) == ErrorCode::invalid_argument);
}

TEST_CASE("real bubble test") {
  const auto src = build_stereo_ball(4, 2.0, 32);
  const auto target = build_stereo_ball(4, 1.0, 8);
  std::vector<ConformalField> bubbles, flat;
  BlowupSequence seq;
  for (double lam : {0.5, 0.4}) {
    bubbles.push_back(profile_field(src, "bubble", lam));
    flat.push_back(profile_field(src, "constant", 1.0));
    seq.centers.push_back(origin_of(*src));
    seq.scales.push_back(lam);
  }
  const auto yes = real_bubble_test(bubbles, seq, target, 0.05, 0.01);
  CHECK(yes.real);
  for (double m : yes.min_on_unit_ball) CHECK(m == doctest::Approx(1.0).epsilon(0.03));
  // A flat factor rescales to r^{(n-2)/2}, which shrinks but stays positive.
  const auto no = real_bubble_test(flat, seq, target, 0.6, 0.01);
  CHECK_FALSE(no.real);
}

TEST_CASE("neck statistics follow the scaling law") {
  const auto t = build_torus(3, 1.0, 12);
  const auto u = profile_field(t, "smooth", 0.3);
  const VertexId x = t->vertex_at({6, 6, 6, 0});
  const auto a = neck_stats(u, x, 0.1, 0.3, 8);
  CHECK(a.vertices > 0);
  CHECK(a.diameter > 0.0);
  const double c = 1.6;
  const auto b = neck_stats(u.scaled(c), x, 0.1, 0.3, 8);
  CHECK(b.vertices == a.vertices);
  CHECK(b.volume == doctest::Approx(std::pow(c, 6.0) * a.volume).epsilon(1e-12));
  CHECK(b.diameter == doctest::Approx(c * c * a.diameter).epsilon(1e-12));
}

TEST_CASE("cylinder bands partition the mesh") {
  const auto c = build_cylinder(CylinderSpec{1.0, 4, 12, 6, 0.0});
  for (double len : {1.0, 0.5}) {
    const auto bands = cylinder_bands(*c, len);
    CHECK(bands.size() == static_cast<std::size_t>(std::lround(4 / len)));
    std::set<VertexId> seen;
    std::size_t total = 0;
    for (const auto& b : bands) {
      CHECK(b.size() == bands[0].size());
      total += b.size();
      seen.insert(b.begin(), b.end());
    }
    CHECK(total == c->vertex_count());
    CHECK(seen.size() == c->vertex_count());
  }
}

TEST_CASE("three circles on exact modes") {
  const auto c = build_cylinder(CylinderSpec{1.0, 3, 24, 8, 0.0});
  const auto dec = three_circles_check(profile_field(c, "decaying", 1.0), 1.0, 1.0);
  CHECK(dec.e2 == doctest::Approx(std::exp(-2.0) * dec.e1).epsilon(1e-12));
  CHECK(dec.e3 == doctest::Approx(std::exp(-2.0) * dec.e2).epsilon(1e-12));
  CHECK(dec.metric_certified);
  CHECK(dec.clause2_premise);
  CHECK(dec.implications_hold());
  CHECK(dec.trichotomy_holds());
  CHECK(dec.clause3_symmetric);

  const auto gro = three_circles_check(profile_field(c, "growing", 1.0), 1.0, 1.0);
  CHECK(gro.clause1_premise);
  CHECK(gro.implications_hold());
  CHECK(gro.trichotomy_holds());

  const auto flat = three_circles_check(profile_field(c, "constant", 1.0), 1.0, 1.0);
  CHECK(flat.e1 == doctest::Approx(flat.e2));
  CHECK_FALSE(flat.trichotomy_holds());
  CHECK_FALSE(flat.clause3_symmetric);
  // Round cylinder: R = 6 everywhere.
  CHECK(flat.curvature_energy == doctest::Approx(36.0 * 2 * kPi * kPi * 3).epsilon(1e-9));
  CHECK_FALSE(flat.hypothesis_met);
  CHECK(dec.curvature_energy < 1e-2 * flat.curvature_energy);
}

TEST_CASE("decay profile on exact modes") {
  const auto c = build_cylinder(CylinderSpec{1.0, 5, 24, 8, 0.0});
  const auto d = singularity_decay_profile(profile_field(c, "decaying", 1.0), 1.0);
  CHECK(d.energies.size() == 5);
  CHECK(d.rate == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  CHECK(d.decaying);
  CHECK(d.summable);
  double partial = 0.0;
  for (double e : d.energies) partial += std::pow(e, 0.375);
  CHECK(d.series_partial == doctest::Approx(partial));
  const double q = std::exp(-0.75);
  CHECK(d.series_tail_bound == doctest::Approx(std::pow(d.energies.back(), 0.375) * q / (1 - q)));

  const auto g = singularity_decay_profile(profile_field(c, "growing", 1.0), 1.0);
  CHECK(g.rate == doctest::Approx(std::exp(2.0)).epsilon(1e-12));
  CHECK(g.growth_detected);
  CHECK_FALSE(g.summable);
  CHECK(std::isinf(g.series_tail_bound));

  const auto short_cyl = build_cylinder(CylinderSpec{1.0, 3, 12, 6, 0.0});
  CHECK(error_code([&] { singularity_decay_profile(profile_field(short_cyl, "decaying", 1.0), 1.0); }) ==
        ErrorCode::invalid_argument);
}
