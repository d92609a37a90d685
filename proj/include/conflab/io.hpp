// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "conflab/conformal.hpp"

namespace conflab {

// Shortest decimal text that parses back to the same double.
std::string format_double(double x);
double parse_double(const std::string& s);
std::string hash_hex(std::uint64_t h);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string> header);
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  CsvWriter& cell(double x);
  CsvWriter& cell(std::int64_t x);
  CsvWriter& cell(int x) { return cell(static_cast<std::int64_t>(x)); }
  CsvWriter& cell(const std::string& s);
  void end_row();

 private:
  std::ofstream out_;
  bool first_ = true;
};

// Two-column plot data with a comment header.
void write_dat(const std::filesystem::path& path, const std::string& comment, std::span<const double> x,
               std::span<const double> y);

// Mesh descriptor: structured text holding the build recipe plus the content
// hash; loading rebuilds the grid and checks the hash.
std::string mesh_descriptor_text(const GridManifold& m);
void save_mesh(const GridManifold& m, const std::filesystem::path& path);
MeshPtr load_mesh(const std::filesystem::path& path);
MeshPtr mesh_from_descriptor(const std::string& text);

// Field file: text header terminated by a blank line, then raw little-endian doubles.
void save_field(const ConformalField& u, const std::filesystem::path& path);
std::vector<double> load_field_values(const std::filesystem::path& path, std::uint64_t expected_hash);
ConformalField load_field(const MeshPtr& mesh, const std::filesystem::path& path);

// Per-vertex diagnostics: coordinates, u, R, dV_g, boundary flag.
void write_vertex_csv(const ConformalField& u, std::span<const double> curvature, const std::filesystem::path& path);

}  // namespace conflab
