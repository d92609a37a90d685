// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
//
// Acceptance suite: one PASS/FAIL line per criterion; exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "conflab/bubbles.hpp"
#include "conflab/conformal.hpp"
#include "conflab/grid_manifold.hpp"
#include "conflab/metric_spaces.hpp"
#include "conflab/scenario.hpp"
#include "conflab/spectral.hpp"

#ifndef CONFLAB_SOURCE_DIR
#define CONFLAB_SOURCE_DIR "."
#endif

namespace fs = std::filesystem;
using namespace conflab;

namespace {

constexpr double kPi = std::numbers::pi;

// Pinned tolerances.
constexpr double kCurvatureTol = 0.02;
constexpr double kInteriorRadius = 1.0;
constexpr double kVolumeTol = 0.03;
constexpr double kR2Tol = 0.04;
constexpr double kRatioTol = 0.04;
constexpr double kYamabeTol = 1e-3;
constexpr double kScaleInvTol = 1e-8;
constexpr double kBlowupTol = 0.03;
constexpr double kBandEnergyTol = 0.01;
constexpr double kTorusEigTol = 1e-6;
constexpr double kEigScalingTol = 1e-8;
constexpr double kLambdaDrop = 0.1;
constexpr double kAxiomTol = 1e-9;
constexpr double kDecayRateTol = 0.05;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [fail: " << what << "]";
    }
  }
};

double rel(double x, double ref) { return std::abs(x - ref) / std::abs(ref); }

fs::path work_dir() {
  const fs::path p = fs::current_path() / "acceptance_out";
  fs::create_directories(p);
  return p;
}

ScenarioConfig config(const std::string& name) {
  return load_config(fs::path(CONFLAB_SOURCE_DIR) / "configs" / name);
}

const Check* find_check(const RunReport& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return &c;
  return nullptr;
}

void expect_check(Verdict& v, const RunReport& r, const std::string& name) {
  const Check* c = find_check(r, name);
  if (!c) {
    v.expect(false, "missing check " + name);
    return;
  }
  v.detail << ' ' << name << '=' << c->value;
  v.expect(c->pass, name);
}

// Scenario reports are shared between the end-to-end and determinism criteria.
struct Runs {
  RunReport case1, case2, dumbbell, cylinder;
};
Runs& runs() {
  static Runs r;
  return r;
}

RunReport run_into(ScenarioConfig c, const fs::path& dir) {
  c.output_dir = dir.string();
  fs::remove_all(dir);
  return run_scenario(c, true);
}

// ------------------------------------------------------------------ 1

double sphere_curvature_error(int n, int divisions) {
  const auto m = build_stereo_ball(n, 2.0, divisions, 6'000'000);
  const auto u = profile_field(m, "bubble", 1.0);
  const auto r = scalar_curvature(u);
  const double target = n * (n - 1);
  double worst = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const Point p = m->coords(static_cast<VertexId>(i));
    double rho2 = 0.0;
    for (int a = 0; a < n; ++a) rho2 += p[a] * p[a];
    if (std::sqrt(rho2) <= kInteriorRadius) worst = std::max(worst, rel(r[i], target));
  }
  return worst;
}

void criterion1(Verdict& v) {
  for (int n : {3, 4}) {
    const double coarse = sphere_curvature_error(n, 32);
    const double fine = sphere_curvature_error(n, 64);
    v.detail << " n=" << n << " err=" << coarse << " refined=" << fine;
    v.expect(coarse <= kCurvatureTol, "coarse error n=" + std::to_string(n));
    v.expect(fine < coarse, "refinement n=" + std::to_string(n));
  }
}

// ------------------------------------------------------------------ 2

void criterion2(Verdict& v) {
  const auto m = build_stereo_ball(StereoBallSpec{4, 4.0, 32, 2'000'000});
  const auto u = profile_field(m, "bubble", 1.0);
  const auto h = heat_invariants(u);
  const double vol = 8.0 * kPi * kPi / 3.0;
  const double r2 = 384.0 * kPi * kPi;
  const double y4 = 12.0 * std::sqrt(vol);
  v.detail << " vol=" << h.a0 << " R2=" << h.r2_integral << " ratio=" << h.ratio()
           << " Y4=" << yamabe_constant(4);
  v.expect(rel(h.a0, vol) <= kVolumeTol, "volume");
  v.expect(rel(h.r2_integral, r2) <= kR2Tol, "R^2 integral");
  v.expect(rel(h.ratio(), y4 / 6.0) <= kRatioTol, "a1/sqrt(a0)");
  v.expect(std::abs(yamabe_constant(4) - 61.5625) <= kYamabeTol, "Y(S^4)");
}

// ------------------------------------------------------------------ 3

void criterion3(Verdict& v) {
  // Constant rescaling on a non-round field.
  const auto torus = build_torus(4, 1.0, 10);
  const auto s = profile_field(torus, "smooth", 0.3);
  const double base = heat_invariants(s).r2_integral;
  double worst = 0.0;
  for (double c : {0.5, 3.0, 17.0}) worst = std::max(worst, rel(heat_invariants(s.scaled(c)).r2_integral, base));
  v.detail << " scale_dev=" << worst;
  v.expect(worst <= kScaleInvTol, "constant rescaling");

  // Blowup of a bubble of scale 1/2 onto a chart of radius 4: r = 1/2 puts
  // every target node on a source node, r = 0.45 interpolates. The source
  // energy is taken over the ball the target chart covers.
  const auto src = build_stereo_ball(4, 2.0, 32);
  const auto tgt = build_stereo_ball(4, 4.0, 32);
  const auto u = profile_field(src, "bubble", 0.5);
  const auto r_src = scalar_curvature(u);
  for (double r : {0.5, 0.45}) {
    std::vector<VertexId> covered;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const Point p = src->coords(static_cast<VertexId>(i));
      if (std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + p[3] * p[3]) <= 4.0 * r + 1e-12)
        covered.push_back(static_cast<VertexId>(i));
    }
    const double e_src = region_measures(u, covered, r_src).r2_integral;
    const double e = heat_invariants(blowup_rescale(u, Point{}, r, tgt)).r2_integral;
    v.detail << " blowup(r=" << r << ")_dev=" << rel(e, e_src);
    v.expect(rel(e, e_src) <= kBlowupTol, "blowup r=" + std::to_string(r));
  }
}

// ------------------------------------------------------------------ 4

double band_energy_exact(double sign, double t0, double t1) {
  // 2 pi^2 * int e^{2 sign t} dt
  return 2.0 * kPi * kPi * (std::exp(2.0 * sign * t1) - std::exp(2.0 * sign * t0)) / (2.0 * sign);
}

void criterion4(Verdict& v) {
  const CylinderSpec spec{1.0, 3, 24, 8, 0.0};
  const auto cyl = build_cylinder(spec);
  const double eps = ThresholdConfig{}.eps_cylinder;
  for (const char* mode : {"decaying", "growing"}) {
    const double sign = std::string(mode) == "decaying" ? -1.0 : 1.0;
    const auto f = profile_field(cyl, mode, 1.0);
    const auto tc = three_circles_check(f, spec.band_length, eps);
    const double e[3] = {tc.e1, tc.e2, tc.e3};
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) worst = std::max(worst, rel(e[i], band_energy_exact(sign, i, i + 1.0)));
    v.detail << ' ' << mode << " band_dev=" << worst;
    v.expect(tc.hypothesis_met, std::string(mode) + " hypothesis");
    v.expect(tc.clause1 && tc.clause2 && tc.clause3, std::string(mode) + " clauses");
    v.expect(worst <= kBandEnergyTol, std::string(mode) + " band energies");
  }
  const auto c = three_circles_check(profile_field(cyl, "constant", 1.0), spec.band_length, eps);
  v.detail << " constant: hypothesis=" << c.hypothesis_met << " trichotomy=" << c.trichotomy_holds();
  v.expect(!c.hypothesis_met && !c.trichotomy_holds(), "constant field");

  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> vals(cyl->vertex_count());
    for (std::size_t i = 0; i < vals.size(); ++i)
      vals[i] = std::exp(-cyl->coords(static_cast<VertexId>(i))[0]) * (1.0 + 0.01 * noise(gen));
    const auto p = three_circles_check(ConformalField(cyl, vals), spec.band_length, eps);
    v.expect(p.trichotomy_holds(), "perturbed trial " + std::to_string(trial));
  }
}

// ------------------------------------------------------------------ 5

void criterion5(Verdict& v) {
  SpectrumOptions o;
  o.count = 8;
  {
    const int N = 16;
    const auto t = build_torus(3, 1.0, N);
    const auto s = laplace_spectrum(profile_field(t, "constant", 1.0), o);
    const double h = 1.0 / N;
    const double exact = 4.0 / (h * h) * std::pow(std::sin(kPi * h), 2);
    double worst = 0.0;
    for (int i = 1; i <= 6; ++i) worst = std::max(worst, rel(s.eigenvalues[i], exact));
    v.detail << " torus_dev=" << worst;
    v.expect(worst <= kTorusEigTol, "torus closed form");
  }
  {
    const auto t = build_torus(4, 1.0, 8);
    const auto u = profile_field(t, "smooth", 0.3);
    o.count = 4;
    const auto a = laplace_spectrum(u, o);
    double worst = 0.0;
    for (double c : {0.5, 3.0}) {
      const auto b = laplace_spectrum(u.scaled(c), o);
      for (int i = 1; i < o.count; ++i) worst = std::max(worst, rel(b.eigenvalues[i] * c * c, a.eigenvalues[i]));
    }
    v.detail << " scaling_dev=" << worst;
    v.expect(worst <= kEigScalingTol, "scaling law");

    // Pinch quotients bound lambda_1 from above for any centre, scale and split.
    o.count = 3;
    double min_excess = INFINITY;
    const auto t3 = build_torus(3, 1.0, 12);
    for (const auto& f : {profile_field(t3, "smooth", 0.5), profile_field(t3, "bubble", 0.2, {0.5, 0.5, 0.5, 0})}) {
      const double l1 = laplace_spectrum(f, o).lambda1;
      for (VertexId c : {0, 77, 900})
        for (double tt : {0.1, 0.2, 0.25})
          for (double v1 : {0.3, 0.5, 0.8}) {
            const double q = pinch_test(f, c, tt, v1, 1.0 - v1).quotient;
            min_excess = std::min(min_excess, q / l1);
          }
    }
    v.detail << " min_pinch_over_lambda1=" << min_excess;
    v.expect(min_excess >= 1.0, "pinch >= lambda1");
  }

  const auto& r = runs().dumbbell;
  v.expect(r.complete, "dumbbell run complete");
  bool l_dec = true, p_dec = true;
  for (std::size_t k = 1; k < r.per_k.size(); ++k) {
    l_dec = l_dec && r.per_k[k].lambda1 < r.per_k[k - 1].lambda1;
    p_dec = p_dec && r.per_k[k].pinch_quotient < r.per_k[k - 1].pinch_quotient;
  }
  const double drop = r.per_k.back().lambda1 / r.per_k.front().lambda1;
  v.detail << " dumbbell_drop=" << drop;
  v.expect(l_dec && p_dec, "dumbbell monotone");
  v.expect(drop <= kLambdaDrop, "dumbbell final lambda1");
}

// ------------------------------------------------------------------ 6

FiniteMetricSpace space(std::vector<double> d) {
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d.size()))));
  std::vector<std::int64_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<std::int64_t>(i);
  return FiniteMetricSpace(ids, std::move(d));
}

// Hand enumeration: every relation R in X x Y that covers both sides.
double gh_enumerate(const FiniteMetricSpace& x, const FiniteMetricSpace& y) {
  const std::size_t nx = x.size(), ny = y.size(), cells = nx * ny;
  double best = INFINITY;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << cells); ++mask) {
    std::vector<bool> cx(nx), cy(ny);
    for (std::size_t c = 0; c < cells; ++c)
      if (mask >> c & 1) cx[c / ny] = cy[c % ny] = true;
    if (std::find(cx.begin(), cx.end(), false) != cx.end() || std::find(cy.begin(), cy.end(), false) != cy.end())
      continue;
    double dis = 0.0;
    for (std::size_t c = 0; c < cells; ++c)
      for (std::size_t e = 0; e < cells; ++e)
        if ((mask >> c & 1) && (mask >> e & 1))
          dis = std::max(dis, std::abs(x(c / ny, e / ny) - y(c % ny, e % ny)));
    best = std::min(best, dis);
  }
  return 0.5 * best;
}

FiniteMetricSpace random_space(std::size_t n, std::mt19937_64& gen) {
  // Euclidean points in the plane give a genuine metric.
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<std::array<double, 2>> p(n);
  for (auto& q : p) q = {d(gen), d(gen)};
  std::vector<double> m(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m[i * n + j] = std::hypot(p[i][0] - p[j][0], p[i][1] - p[j][1]);
  return space(m);
}

void criterion6(Verdict& v) {
  std::vector<FiniteMetricSpace> fixtures{
      space({0}),
      space({0, 1, 1, 0}),
      space({0, 3, 3, 0}),
      space({0, 1, 1, 1, 0, 1, 1, 1, 0}),
      space({0, 1, 2, 1, 0, 1, 2, 1, 0}),
      space({0, 2, 5, 2, 0, 4, 5, 4, 0}),
  };
  int mismatches = 0;
  for (const auto& a : fixtures)
    for (const auto& b : fixtures)
      if (gh_bruteforce(a, b) != gh_enumerate(a, b)) ++mismatches;
  v.detail << " fixture_mismatches=" << mismatches;
  v.expect(mismatches == 0, "fixtures");

  std::mt19937_64 gen(2024);
  int violations = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 5;
    const auto a = random_space(n, gen);
    const auto b = random_space(n, gen);
    if (gh_upper_shared(a, b) < gh_bruteforce(a, b)) ++violations;
  }
  v.detail << " upper_bound_violations=" << violations;
  v.expect(violations == 0, "upper bound");

  // Spaces produced by the pipeline on each chart type.
  std::vector<FiniteMetricSpace> produced;
  const auto t = build_torus(3, 1.0, 12);
  produced.push_back(farthest_point_landmarks(profile_field(t, "smooth", 0.4), 48).space);
  produced.push_back(farthest_point_landmarks(profile_field(t, "bubble", 0.1, {0.5, 0.5, 0.5, 0}), 48).space);
  const auto b = build_stereo_ball(4, 2.0, 12);
  produced.push_back(farthest_point_landmarks(profile_field(b, "bubble", 1.0), 48, Stencil::full).space);
  const auto c = build_cylinder(CylinderSpec{1.0, 3, 8, 6, 0.0});
  produced.push_back(farthest_point_landmarks(profile_field(c, "decaying", 1.0), 48, Stencil::axis).space);
  int failed = 0;
  for (const auto& s : produced) {
    std::string why;
    if (!s.check_axioms(kAxiomTol, 10000, 7, &why)) {
      ++failed;
      v.detail << " (" << why << ")";
    }
  }
  v.detail << " produced_spaces=" << produced.size() << " axiom_failures=" << failed;
  v.expect(failed == 0, "metric axioms");
}

// ------------------------------------------------------------------ 7, 8

void criterion7(Verdict& v) {
  const auto& r = runs().case1;
  v.expect(r.complete, "run complete");
  bool dec = true;
  for (std::size_t k = 1; k < r.per_k.size(); ++k) dec = dec && r.per_k[k].local_gap < r.per_k[k - 1].local_gap;
  v.expect(dec, "gaps decreasing");
  expect_check(v, r, "final_gap_over_construction_gap");
  expect_check(v, r, "final_gh_upper");
  v.detail << " case=" << r.case_label;
}

void criterion8(Verdict& v) {
  const auto& r = runs().case2;
  v.expect(r.complete, "run complete");
  for (const char* name : {"bubble_count", "pairs_not_essentially_same", "neck_volume_drop_k2_to_K",
                           "neck_diameter_drop_k2_to_K", "tail_ratio_rel_dev_from_Y_over_6"})
    expect_check(v, r, name);
  v.detail << " vs_Y=" << r.threshold.rel_dev_yamabe << " vs_Y/6=" << r.threshold.rel_dev_yamabe_sixth;
}

// ------------------------------------------------------------------ 9

void criterion9(Verdict& v) {
  const CylinderSpec target{1.0, 5, 24, 8, 3.0};
  const double expected = std::exp(-2.0 * target.band_length);
  const auto ball = build_stereo_ball(4, 2.0, 32);
  std::vector<double> tilted(ball->vertex_count());
  for (std::size_t i = 0; i < tilted.size(); ++i) {
    const Point p = ball->coords(static_cast<VertexId>(i));
    tilted[i] = 1.0 + 0.3 * p[0] + 0.2 * p[1] * p[2];
  }
  VertexId origin = 0;
  for (std::size_t i = 0; i < ball->vertex_count(); ++i) {
    const Point p = ball->coords(static_cast<VertexId>(i));
    if (p[0] == 0.0 && p[1] == 0.0 && p[2] == 0.0 && p[3] == 0.0) origin = static_cast<VertexId>(i);
  }
  struct Source {
    const char* name;
    ConformalField field;
  };
  const std::vector<Source> sources{{"sphere", profile_field(ball, "bubble", 1.0)},
                                    {"tilted", ConformalField(ball, tilted)}};
  for (const auto& s : sources) {
    const auto ct = cylindrical_transform(s.field, origin, target);
    const auto d = singularity_decay_profile(ct.field, target.band_length, 1.5);
    v.detail << ' ' << s.name << " rate=" << d.rate << " summable=" << d.summable;
    v.expect(rel(d.rate, expected) <= kDecayRateTol, std::string(s.name) + " rate");
    v.expect(d.summable && std::isfinite(d.series_partial + d.series_tail_bound), std::string(s.name) + " summable");
  }
  v.detail << " expected=" << expected;
}

// ------------------------------------------------------------------ 10

std::vector<std::pair<std::string, std::string>> output_bytes(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (ext != ".csv" && ext != ".dat") continue;
    std::ifstream in(e.path(), std::ios::binary);
    out.emplace_back(e.path().filename().string(),
                     std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

void criterion10(Verdict& v) {
  // Second pass with a different worker count; outputs must not change.
  const char* prev = std::getenv("CONFLAB_THREADS");
  const std::string saved = prev ? prev : "";
  setenv("CONFLAB_THREADS", "2", 1);
  const fs::path w = work_dir();
  int differing = 0, files = 0;
  for (const char* name : {"case1", "case2", "dumbbell", "cylinder"}) {
    const std::string cfg = std::string(name) == "case1"      ? "case1_smooth.json"
                            : std::string(name) == "case2"    ? "case2_single_bubble.json"
                            : std::string(name) == "dumbbell" ? "dumbbell.json"
                                                              : "cylinder_decay.json";
    run_into(config(cfg), w / "second" / name);
    const auto a = output_bytes(w / "first" / name);
    const auto b = output_bytes(w / "second" / name);
    files += static_cast<int>(a.size());
    if (a != b || a.empty()) {
      ++differing;
      v.detail << " differs:" << name;
    }
  }
  if (prev) setenv("CONFLAB_THREADS", saved.c_str(), 1);
  else unsetenv("CONFLAB_THREADS");
  v.detail << " files=" << files;
  v.expect(differing == 0, "bit-identical outputs");
}

}  // namespace

int main() {
  const fs::path w = work_dir();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    runs().case1 = run_into(config("case1_smooth.json"), w / "first" / "case1");
    runs().case2 = run_into(config("case2_single_bubble.json"), w / "first" / "case2");
    runs().dumbbell = run_into(config("dumbbell.json"), w / "first" / "dumbbell");
    runs().cylinder = run_into(config("cylinder_decay.json"), w / "first" / "cylinder");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "scenario setup failed: %s\n", e.what());
  }

  const std::vector<std::pair<const char*, std::function<void(Verdict&)>>> criteria{
      {"round-sphere curvature", criterion1},
      {"sphere invariants", criterion2},
      {"conformal invariance", criterion3},
      {"three circles", criterion4},
      {"spectrum", criterion5},
      {"GH machinery", criterion6},
      {"smooth convergence end-to-end", criterion7},
      {"single bubble end-to-end", criterion8},
      {"decay and removability", criterion9},
      {"determinism", criterion10},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    if (!v.pass) ++failed;
    std::printf("criterion %2zu %s  %s:%s\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first,
                v.detail.str().c_str());
    std::fflush(stdout);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%d of %zu criteria failed (%.1f s)\n", failed, criteria.size(), secs);
  return failed == 0 ? 0 : 1;
}
