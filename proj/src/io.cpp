// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
#include "conflab/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <sstream>

#include "json_convert.hpp"

namespace conflab {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double x = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    fail(ErrorCode::format_error, "not a number: '" + s + "'");
  return x;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string> header)
    : CsvWriter(path, std::vector<std::string>(header)) {}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
  if (!out_) fail(ErrorCode::io_error, "cannot open " + path.string());
  for (const auto& h : header) cell(h);
  end_row();
}

CsvWriter& CsvWriter::cell(double x) { return cell(format_double(x)); }
CsvWriter& CsvWriter::cell(std::int64_t x) { return cell(std::to_string(x)); }
CsvWriter& CsvWriter::cell(const std::string& s) {
  if (!first_) out_ << ',';
  out_ << s;
  first_ = false;
  return *this;
}
void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
}

void write_dat(const std::filesystem::path& path, const std::string& comment, std::span<const double> x,
               std::span<const double> y) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot open " + path.string());
  out << "# " << comment << '\n';
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) out << format_double(x[i]) << ' ' << format_double(y[i]) << '\n';
}

std::string mesh_descriptor_text(const GridManifold& m) {
  auto j = detail::mesh_spec_to_json(m.spec());
  j["format"] = "conflab-mesh";
  j["version"] = 1;
  j["vertex_count"] = m.vertex_count();
  j["content_hash"] = hash_hex(m.content_hash());
  return j.dump(2) + "\n";
}

void save_mesh(const GridManifold& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot open " + path.string());
  out << mesh_descriptor_text(m);
}

MeshPtr mesh_from_descriptor(const std::string& text) {
  detail::json j;
  try {
    j = detail::json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorCode::format_error, std::string("mesh descriptor is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != "conflab-mesh" || j.value("version", 0) != 1)
    fail(ErrorCode::format_error, "not a version-1 mesh descriptor");
  MeshPtr m;
  try {
    m = build_mesh(detail::mesh_spec_from_json(j));
  } catch (const detail::json::exception& e) {
    fail(ErrorCode::format_error, std::string("bad mesh descriptor: ") + e.what());
  }
  if (j.contains("content_hash") && j["content_hash"].get<std::string>() != hash_hex(m->content_hash()))
    fail(ErrorCode::format_error, "mesh content hash mismatch");
  return m;
}

MeshPtr load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return mesh_from_descriptor(ss.str());
}

void save_field(const ConformalField& u, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io_error, "cannot open " + path.string());
  out << "conflab-field 1\n"
      << "manifold_hash " << hash_hex(u.mesh().content_hash()) << '\n'
      << "count " << u.size() << '\n'
      << "endianness little\n"
      << "dtype float64\n\n";
  for (double x : u.values()) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!out) fail(ErrorCode::io_error, "write failed for " + path.string());
}

std::vector<double> load_field_values(const std::filesystem::path& path, std::uint64_t expected_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "conflab-field 1") fail(ErrorCode::format_error, "not a version-1 field file");
  std::string hash, endian = "little";
  std::size_t count = 0;
  bool have_count = false;
  while (std::getline(in, line) && !line.empty()) {
    std::istringstream ls(line);
    std::string key, val;
    ls >> key >> val;
    if (key == "manifold_hash") hash = val;
    else if (key == "count") {
      count = std::stoull(val);
      have_count = true;
    } else if (key == "endianness") endian = val;
    else if (key == "dtype" && val != "float64") fail(ErrorCode::format_error, "unsupported dtype " + val);
  }
  if (!have_count) fail(ErrorCode::format_error, "field header lacks count");
  if (endian != "little" && endian != "big") fail(ErrorCode::format_error, "bad endianness tag");
  if (hash != hash_hex(expected_hash)) fail(ErrorCode::format_error, "field belongs to a different mesh");
  std::vector<double> v(count);
  for (auto& x : v) {
    std::uint64_t bits = 0;
    if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) fail(ErrorCode::format_error, "truncated field data");
    const bool file_big = endian == "big";
    if (file_big != (std::endian::native == std::endian::big)) bits = __builtin_bswap64(bits);
    x = std::bit_cast<double>(bits);
  }
  return v;
}

ConformalField load_field(const MeshPtr& mesh, const std::filesystem::path& path) {
  return ConformalField(mesh, load_field_values(path, mesh->content_hash()));
}

void write_vertex_csv(const ConformalField& u, std::span<const double> curvature, const std::filesystem::path& path) {
  const auto& m = u.mesh();
  std::vector<std::string> header{"vertex"};
  for (int a = 0; a < m.dim(); ++a) header.push_back("x" + std::to_string(a));
  for (const char* h : {"u", "R", "dV", "boundary"}) header.push_back(h);
  CsvWriter csv(path, header);
  const auto dv = conformal_volumes(u);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto v = static_cast<VertexId>(i);
    csv.cell(static_cast<std::int64_t>(i));
    const Point p = m.coords(v);
    for (int a = 0; a < m.dim(); ++a) csv.cell(p[a]);
    csv.cell(u[v]).cell(curvature[i]).cell(dv[i]).cell(m.is_boundary(v) ? 1 : 0);
    csv.end_row();
  }
}

}  // namespace conflab
