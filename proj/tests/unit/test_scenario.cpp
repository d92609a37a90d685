// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <stdexcept>

#include "conflab/scenario.hpp"

using namespace conflab;
namespace fs = std::filesystem;

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

ScenarioConfig tiny_smooth() {
  ScenarioConfig c;
  c.kind = ScenarioKind::smooth_convergent;
  c.mesh = TorusSpec{3, 1.0, 6, {}};
  c.k_count = 4;
  c.analysis.landmarks = 8;
  c.analysis.spectrum_count = 3;
  return c;
}

ScenarioConfig tiny_cylinder() {
  ScenarioConfig c;
  c.kind = ScenarioKind::cylinder_exact;
  c.mesh = CylinderSpec{1.0, 4, 8, 4, 1.0};
  c.k_count = 4;
  c.normalize = false;
  return c;
}
}  // namespace

TEST_CASE("Yamabe constants of the round spheres") {
  // n(n-1) Vol(S^n)^{2/n}; Vol(S^3) = 2 pi^2, Vol(S^4) = 8 pi^2 / 3.
  CHECK(yamabe_constant(3) == doctest::Approx(6 * std::cbrt(4 * std::pow(kPi, 4))).epsilon(1e-14));
  CHECK(yamabe_constant(4) == doctest::Approx(12 * std::sqrt(8 * kPi * kPi / 3)).epsilon(1e-14));
  CHECK(yamabe_constant(4) / 6 == doctest::Approx(10.2604).epsilon(1e-5));
  CHECK(error_code([] { yamabe_constant(5); }) == ErrorCode::invalid_argument);
}

TEST_CASE("scenario kinds round-trip") {
  for (auto k : {ScenarioKind::smooth_convergent, ScenarioKind::single_bubble, ScenarioKind::two_bubble,
                 ScenarioKind::dumbbell, ScenarioKind::cylinder_exact})
    CHECK(parse_scenario_kind(scenario_kind_name(k)) == k);
  CHECK(error_code([] { parse_scenario_kind("three_bubble"); }) == ErrorCode::invalid_argument);
}

TEST_CASE("config text is canonical") {
  auto c = tiny_smooth();
  c.analysis.blowup_candidates = 5;
  c.seed = 17;
  const auto text = config_to_text(c);
  const auto back = config_from_text(text);
  CHECK(config_to_text(back) == text);
  CHECK(back.analysis.blowup_candidates == 5);
  CHECK(back.seed == 17);
  CHECK(error_code([] { config_from_text("[1, 2"); }) == ErrorCode::format_error);
  CHECK(error_code([] { load_config("/nonexistent/config.json"); }) == ErrorCode::io_error);
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(tiny_smooth().validate());
  CHECK_NOTHROW(tiny_cylinder().validate());
  auto c = tiny_smooth();
  c.k_count = 3;
  CHECK(error_code([&] { c.validate(); }) == ErrorCode::invalid_argument);
  c = tiny_smooth();
  c.smooth.amplitude = 1.0;
  CHECK(error_code([&] { c.validate(); }) == ErrorCode::invalid_argument);
  c = tiny_smooth();
  c.analysis.blowup_candidates = -1;
  CHECK(error_code([&] { c.validate(); }) == ErrorCode::invalid_argument);
  c = tiny_smooth();
  c.kind = ScenarioKind::single_bubble;
  c.bubble.centers = {Point{0.5, 0.5, 0.5, 0}};
  c.bubble.lambdas = {0.2, 0.1, 0.1, 0.05};
  CHECK(error_code([&] { c.validate(); }) == ErrorCode::invalid_argument);
  c.bubble.lambdas = {0.2, 0.1, 0.07, 0.05};
  CHECK_NOTHROW(c.validate());
  c.kind = ScenarioKind::two_bubble;
  CHECK(error_code([&] { c.validate(); }) == ErrorCode::invalid_argument);
  c = tiny_smooth();
  c.kind = ScenarioKind::cylinder_exact;
  CHECK(error_code([&] { c.validate(); }) == ErrorCode::invalid_argument);
}

TEST_CASE("family generation") {
  auto c = tiny_smooth();
  const auto f = gen_family(c);
  CHECK(f.fields.size() == 4);
  REQUIRE(f.limit.has_value());
  for (const auto& u : f.fields) CHECK(heat_invariants(u).a0 == doctest::Approx(1.0).epsilon(1e-12));
  // Perturbations halve along the family, starting from 1/2.
  for (int k = 0; k < 4; ++k) CHECK(f.parameters[k] == doctest::Approx(std::pow(0.5, k + 1)));

  auto cy = tiny_cylinder();
  cy.cylinder.mode = "constant";
  const auto g = gen_family(cy);
  for (const auto& u : g.fields)
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(u[static_cast<VertexId>(i)] == doctest::Approx(1.0));
}

TEST_CASE("unknown profiles are rejected") {
  const auto t = build_torus(3, 1.0, 4);
  CHECK(error_code([&] { profile_field(t, "spiky", 1.0); }) == ErrorCode::invalid_argument);
  CHECK(error_code([&] { profile_field(t, "decaying", 1.0); }) == ErrorCode::invalid_argument);
  CHECK(error_code([&] { profile_field(t, "constant", -1.0); }) == ErrorCode::invalid_argument);
}

TEST_CASE("threshold check on the round sphere factor") {
  const auto b = build_stereo_ball(4, 4.0, 24);
  std::vector<ConformalField> fam(4, profile_field(b, "bubble", 1.0));
  const auto t = threshold_check(fam, 4);
  CHECK(t.tail_begin == 3);
  CHECK(t.yamabe == yamabe_constant(4));
  CHECK(t.yamabe_sixth == doctest::Approx(t.yamabe / 6));
  CHECK(t.tail_ratio == doctest::Approx(t.yamabe_sixth).epsilon(0.04));
  CHECK(t.below_yamabe_sixth == (t.tail_ratio < t.yamabe_sixth));
}

TEST_CASE("small runs are deterministic") {
  const auto a = run_scenario(tiny_smooth(), false);
  const auto b = run_scenario(tiny_smooth(), false);
  INFO(a.error);
  CHECK(a.complete);
  CHECK(a.per_k.size() == 4);
  CHECK(report_to_text(a) == report_to_text(b));
}

TEST_CASE("report text round-trips") {
  const auto r = run_scenario(tiny_cylinder(), false);
  INFO(r.error);
  REQUIRE(r.complete);
  CHECK(r.case_label == "not_applicable");
  CHECK(r.all_checks_pass());
  const auto text = report_to_text(r);
  const auto back = report_from_text(text);
  CHECK(report_to_text(back) == text);
  CHECK(back.checks.size() == r.checks.size());
  CHECK_FALSE(render_summary(r).empty());
  CHECK(error_code([] { report_from_text("{}"); }) == ErrorCode::format_error);
}

TEST_CASE("runs write their outputs") {
  auto c = tiny_cylinder();
  const fs::path dir = fs::temp_directory_path() / ("conflab_run_" + std::to_string(::getpid()));
  c.output_dir = dir.string();
  run_scenario(c, true);
  for (const char* f : {"report.json", "summary.txt", "config.json", "per_k.csv", "checks.csv", "cylinder.csv"})
    CHECK(fs::exists(dir / f));
  CHECK(load_config(dir / "config.json").output_dir == c.output_dir);
  fs::remove_all(dir);
}

TEST_CASE("stage failures are captured in the report") {
  auto c = tiny_smooth();
  c.kind = ScenarioKind::single_bubble;
  c.mesh = TorusSpec{4, 1.0, 6, {}};
  c.bubble.centers = {Point{0.5, 0.5, 0.5, 0.5}};
  c.bubble.lambdas = {0.4, 0.35, 0.3, 0.25};
  c.analysis.blowup_target.cutoff = 4.0;
  const auto r = run_scenario(c, false);
  CHECK_FALSE(r.complete);
  CHECK_FALSE(r.failed_stage.empty());
  CHECK_FALSE(r.error.empty());
  CHECK_FALSE(r.all_checks_pass());
}

TEST_CASE("parallel_for covers every index and rethrows the lowest failure") {
  ::setenv("CONFLAB_THREADS", "3", 1);
  CHECK(thread_count() == 3);
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), [&](std::size_t i) { hit[i] += 1; });
  for (int h : hit) CHECK(h == 1);
  try {
    parallel_for(50, [](std::size_t i) {
      if (i == 7 || i == 31) throw std::runtime_error("fail " + std::to_string(i));
    });
    CHECK(false);
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "fail 7");
  }
  ::unsetenv("CONFLAB_THREADS");
  CHECK(thread_count() == 1);
}
