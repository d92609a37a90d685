// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "conflab/grid_manifold.hpp"

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

double euclid(const Point& a, const Point& b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}
}  // namespace

TEST_CASE("torus shape, volume and wrap-around") {
  for (int n : {3, 4}) {
    const int N = 6;
    const auto m = build_torus(n, 2.0, N);
    CHECK(m->dim() == n);
    CHECK(m->vertex_count() == static_cast<std::size_t>(std::pow(N, n)));
    CHECK(m->total_volume() == doctest::Approx(std::pow(2.0, n)).epsilon(1e-12));
    for (int a = 0; a < n; ++a) {
      CHECK(m->axes()[a].kind == AxisKind::periodic);
      const VertexId left = m->neighbor(0, a, -1);
      CHECK(m->lattice_coords(left)[a] == N - 1);
      CHECK(m->neighbor(left, a, +1) == 0);
    }
    for (VertexId v = 0; v < static_cast<VertexId>(m->vertex_count()); ++v) CHECK_FALSE(m->is_boundary(v));
  }
}

TEST_CASE("lattice layout has axis 0 fastest") {
  const auto m = build_torus(3, 1.0, 5);
  CHECK(m->lattice_coords(1) == std::array<int, 4>{1, 0, 0, 0});
  CHECK(m->lattice_coords(5) == std::array<int, 4>{0, 1, 0, 0});
  CHECK(m->vertex_at({2, 3, 4, 0}) == 2 + 5 * 3 + 25 * 4);
}

TEST_CASE("content hash is deterministic and recipe sensitive") {
  CHECK(build_torus(3, 1.0, 8)->content_hash() == build_torus(3, 1.0, 8)->content_hash());
  CHECK(build_torus(3, 1.0, 8)->content_hash() != build_torus(3, 1.0, 9)->content_hash());
  CHECK(build_torus(3, 1.0, 8)->content_hash() != build_torus(3, 1.5, 8)->content_hash());
}

TEST_CASE("torus Laplacian on a Fourier mode matches the discrete symbol") {
  const int N = 12;
  const auto m = build_torus(3, 1.0, N);
  const double h = 1.0 / N;
  std::vector<double> f(m->vertex_count());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Point p = m->coords(static_cast<VertexId>(i));
    f[i] = std::cos(2 * kPi * p[0]) * std::cos(4 * kPi * p[2]);
  }
  const auto lf = laplacian_apply(*m, f);
  const double symbol = -(4 / (h * h)) * (std::pow(std::sin(kPi * h), 2) + std::pow(std::sin(2 * kPi * h), 2));
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(lf[i] == doctest::Approx(symbol * f[i]).epsilon(1e-9).scale(1.0));
}

TEST_CASE("stereo ball masks the lattice to the chart") {
  for (int n : {3, 4}) {
    const double cutoff = 2.0;
    const int N = 10;
    const auto m = build_stereo_ball(n, cutoff, N);
    // Brute-force lattice count.
    std::size_t count = 0;
    const int side = N + 1;
    const std::size_t total = static_cast<std::size_t>(std::pow(side, n));
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t r = idx;
      double s = 0.0;
      for (int a = 0; a < n; ++a) {
        const double x = -cutoff + 2.0 * cutoff * static_cast<double>(r % side) / N;
        r /= side;
        s += x * x;
      }
      if (std::sqrt(s) <= cutoff * (1 + 1e-12)) ++count;
    }
    CHECK(m->vertex_count() == count);
    bool any_boundary = false;
    for (VertexId v = 0; v < static_cast<VertexId>(m->vertex_count()); ++v) any_boundary |= m->is_boundary(v);
    CHECK(any_boundary);
  }
}

TEST_CASE("stereo ball honours the vertex budget") {
  CHECK(error_code([] { build_stereo_ball(4, 4.0, 32, 1000); }) == ErrorCode::budget_exceeded);
}

TEST_CASE("cylinder weights integrate the unit S3 exactly") {
  const CylinderSpec spec{0.5, 4, 6, 6, 1.0};
  const auto m = build_cylinder(spec);
  CHECK(m->dim() == 4);
  CHECK(m->r0() == doctest::Approx(6.0));
  CHECK(m->total_volume() == doctest::Approx(2 * kPi * kPi * 0.5 * 4).epsilon(1e-12));
  const auto* b = m->bands();
  REQUIRE(b != nullptr);
  CHECK(b->bands.size() == 4);
  CHECK(b->t_begin(0) == doctest::Approx(1.0));
  std::set<VertexId> seen;
  for (const auto& band : b->bands) seen.insert(band.begin(), band.end());
  CHECK(seen.size() == m->vertex_count());
}

TEST_CASE("graded axes refine around the focus") {
  TorusSpec s;
  s.dim = 3;
  s.divisions = 24;
  s.grading.assign(3, AxisGrading{{0.5}, 8.0});
  const auto m = build_torus(s);
  const Axis& ax = m->axes()[0];
  double hmin = 1e9, hmax = 0.0;
  for (int i = 0; i < ax.count(); ++i) {
    CHECK(ax.step(i) > 0.0);
    hmin = std::min(hmin, ax.step(i));
    hmax = std::max(hmax, ax.step(i));
  }
  CHECK(hmax / hmin > 4.0);
  CHECK(hmax / hmin < 16.0);
  CHECK(m->total_volume() == doctest::Approx(1.0).epsilon(1e-12));
  // Finest cells sit at the focus.
  int finest = 0;
  for (int i = 0; i < ax.count(); ++i)
    if (ax.step(i) < ax.step(finest)) finest = i;
  CHECK(std::abs(ax.nodes[finest] - 0.5) < 2 * hmin);
}

TEST_CASE("ball_vertices agrees with brute force") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto t = build_torus(3, 1.0, 9);
  const auto b = build_stereo_ball(3, 1.5, 12);
  for (int trial = 0; trial < 10; ++trial) {
    const Point c{u(gen), u(gen), u(gen), 0};
    const double r = 0.1 + 0.3 * u(gen);
    std::vector<VertexId> expect;
    for (VertexId v = 0; v < static_cast<VertexId>(t->vertex_count()); ++v) {
      const Point p = t->coords(v);
      double s = 0.0;
      for (int a = 0; a < 3; ++a) {
        double d = std::abs(p[a] - c[a]);
        d = std::min(d, 1.0 - d);
        s += d * d;
      }
      if (std::sqrt(s) <= r) expect.push_back(v);
    }
    CHECK(ball_vertices(*t, c, r) == expect);

    const Point cb{u(gen) - 0.5, u(gen) - 0.5, u(gen) - 0.5, 0};
    expect.clear();
    for (VertexId v = 0; v < static_cast<VertexId>(b->vertex_count()); ++v)
      if (euclid(b->coords(v), cb, 3) <= r) expect.push_back(v);
    CHECK(ball_vertices(*b, cb, r) == expect);
  }
  // Maximal periodic distance on the unit 3-torus is sqrt(3)/2.
  CHECK(ball_vertices(*t, VertexId{0}, 0.87).size() == t->vertex_count());
}

TEST_CASE("interpolation is exact for affine functions") {
  const auto b = build_stereo_ball(3, 1.0, 8);
  std::vector<double> f(b->vertex_count());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Point p = b->coords(static_cast<VertexId>(i));
    f[i] = 1.0 + 2.0 * p[0] - 0.5 * p[1] + 0.25 * p[2];
  }
  for (const Point& q : {Point{0.1, 0.2, -0.3, 0}, Point{-0.33, 0.05, 0.2, 0}})
    CHECK(interpolate(*b, f, q) == doctest::Approx(1.0 + 2.0 * q[0] - 0.5 * q[1] + 0.25 * q[2]).epsilon(1e-12));
  CHECK(error_code([&] { interpolate(*b, f, Point{2.0, 0, 0, 0}); }) == ErrorCode::chart_overflow);
}

TEST_CASE("admissible radius") {
  const auto t = build_torus(4, 3.0, 4);
  CHECK(admissible_radius(*t, 5) == doctest::Approx(1.5));
  const auto c = build_cylinder(CylinderSpec{1.0, 3, 4, 4, 0.0});
  for (VertexId v : {VertexId{0}, static_cast<VertexId>(c->vertex_count() - 1)}) {
    const double t0 = c->coords(v)[0];
    CHECK(admissible_radius(*c, v) == doctest::Approx(std::min(t0, 3.0 - t0)));
  }
}

TEST_CASE("invalid mesh recipes are rejected") {
  CHECK(error_code([] { build_torus(2, 1.0, 8); }) == ErrorCode::invalid_argument);
  CHECK(error_code([] { build_torus(3, -1.0, 8); }) == ErrorCode::invalid_argument);
  CHECK(error_code([] { build_torus(3, 1.0, 2); }) == ErrorCode::invalid_argument);
  CHECK(error_code([] { build_cylinder(1.0, 0, 4, 4); }) == ErrorCode::invalid_argument);
  CHECK(error_code([] { build_stereo_ball(5, 1.0, 8); }) == ErrorCode::invalid_argument);
}
