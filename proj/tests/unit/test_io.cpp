// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "conflab/io.hpp"
#include "conflab/scenario.hpp"

using namespace conflab;
namespace fs = std::filesystem;

namespace {
template <class F>
ErrorCode error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<ErrorCode>(0);
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("conflab_io_" + std::to_string(::getpid())) / name;
  fs::create_directories(d.parent_path());
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
}  // namespace

TEST_CASE("doubles round-trip through text") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(gen) * std::pow(10.0, i % 40 - 20);
    CHECK(parse_double(format_double(x)) == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::isnan(parse_double(format_double(std::nan("")))));
  CHECK(parse_double(format_double(-INFINITY)) == -INFINITY);
  CHECK(parse_double(format_double(std::numeric_limits<double>::denorm_min())) ==
        std::numeric_limits<double>::denorm_min());
  CHECK(error_code([] { parse_double("1.5x"); }) == ErrorCode::format_error);
  CHECK(error_code([] { parse_double(""); }) == ErrorCode::format_error);
}

TEST_CASE("hash hex is fixed width") {
  CHECK(hash_hex(0) == "0000000000000000");
  CHECK(hash_hex(0xdeadbeefULL) == "00000000deadbeef");
  CHECK(hash_hex(~0ULL) == "ffffffffffffffff");
}

TEST_CASE("mesh descriptors rebuild every topology") {
  TorusSpec graded;
  graded.dim = 4;
  graded.divisions = 8;
  graded.grading.assign(4, AxisGrading{{0.25, 0.75}, 4.0});
  const std::vector<MeshSpec> specs{TorusSpec{3, 2.0, 6, {}}, graded, CylinderSpec{0.5, 4, 6, 4, 1.0},
                                    StereoBallSpec{3, 2.0, 10, 100000}};
  for (const auto& s : specs) {
    const auto m = build_mesh(s);
    const auto back = mesh_from_descriptor(mesh_descriptor_text(*m));
    CHECK(back->content_hash() == m->content_hash());
    CHECK(back->vertex_count() == m->vertex_count());
    CHECK(back->topology() == m->topology());
    const auto p = scratch("mesh.json");
    save_mesh(*m, p);
    CHECK(load_mesh(p)->content_hash() == m->content_hash());
  }
}

TEST_CASE("tampered or malformed descriptors are refused") {
  const auto m = build_torus(3, 1.0, 6);
  std::string text = mesh_descriptor_text(*m);
  const auto at = text.find("\"divisions\": 6");
  REQUIRE(at != std::string::npos);
  std::string bumped = text;
  bumped.replace(at, 14, "\"divisions\": 7");
  CHECK(error_code([&] { mesh_from_descriptor(bumped); }) == ErrorCode::format_error);
  CHECK(error_code([] { mesh_from_descriptor("{not json"); }) == ErrorCode::format_error);
  CHECK(error_code([] { mesh_from_descriptor("{\"format\": \"other\"}"); }) == ErrorCode::format_error);
  CHECK(error_code([] { load_mesh("/nonexistent/mesh.json"); }) == ErrorCode::io_error);
}

TEST_CASE("field files round-trip bit for bit") {
  const auto m = build_torus(3, 1.0, 6);
  const auto u = profile_field(m, "smooth", 0.37);
  const auto p = scratch("field.bin");
  save_field(u, p);
  const auto back = load_field(m, p);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(back[static_cast<VertexId>(i)] == u[static_cast<VertexId>(i)]);
  // Binary payload follows the blank header line.
  const auto raw = slurp(p);
  const auto split = raw.find("\n\n");
  REQUIRE(split != std::string::npos);
  CHECK(raw.size() - split - 2 == 8 * u.size());
}

TEST_CASE("field files check mesh and length") {
  const auto m = build_torus(3, 1.0, 6);
  const auto p = scratch("field2.bin");
  save_field(profile_field(m, "constant", 2.0), p);
  CHECK(error_code([&] { load_field(build_torus(3, 1.0, 7), p); }) == ErrorCode::format_error);
  const auto raw = slurp(p);
  std::ofstream(p, std::ios::binary) << raw.substr(0, raw.size() - 3);
  CHECK(error_code([&] { load_field(m, p); }) == ErrorCode::format_error);
  std::ofstream(p, std::ios::binary) << "something else\n";
  CHECK(error_code([&] { load_field(m, p); }) == ErrorCode::format_error);
}

TEST_CASE("csv and dat writers") {
  const auto p = scratch("t.csv");
  {
    CsvWriter csv(p, {"a", "b", "c"});
    csv.cell(1).cell(0.25).cell(std::string("x"));
    csv.end_row();
    csv.cell(std::numeric_limits<double>::infinity()).cell(-2).cell(std::string(""));
    csv.end_row();
  }
  CHECK(slurp(p) == "a,b,c\n1,0.25,x\ninf,-2,\n");
  const auto d = scratch("t.dat");
  const double x[2] = {0, 1}, y[2] = {0.5, 2};
  write_dat(d, "k value", x, y);
  CHECK(slurp(d) == "# k value\n0 0.5\n1 2\n");
  CHECK(error_code([] { CsvWriter("/nonexistent/dir/x.csv", {"a"}); }) == ErrorCode::io_error);
}

TEST_CASE("vertex csv has one row per vertex") {
  const auto m = build_torus(3, 1.0, 4);
  const auto u = profile_field(m, "smooth", 0.2);
  const auto p = scratch("v.csv");
  write_vertex_csv(u, scalar_curvature(u), p);
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  CHECK(line == "vertex,x0,x1,x2,u,R,dV,boundary");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == m->vertex_count());
}
