// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
// Command-line front end. Talks to the library only through conflab.h.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "conflab/conflab.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssert = 1;
constexpr int kExitUsage = 2;

struct Failure {
  conflab_status status;
  std::string message;
};

void ok(conflab_status s, const std::string& what) {
  if (s != CONFLAB_OK) throw Failure{s, what + ": " + conflab_last_error()};
}

int exit_code_for(conflab_status s) {
  switch (s) {
    case CONFLAB_E_INVALID_ARGUMENT:
    case CONFLAB_E_FORMAT:
    case CONFLAB_E_IO: return kExitUsage;
    default: return kExitAssert;
  }
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using MeshH = std::unique_ptr<conflab_mesh, Deleter<conflab_mesh, conflab_mesh_free>>;
using FieldH = std::unique_ptr<conflab_field, Deleter<conflab_field, conflab_field_free>>;
using SpecH = std::unique_ptr<conflab_spectrum, Deleter<conflab_spectrum, conflab_spectrum_free>>;
using ReportH = std::unique_ptr<conflab_report, Deleter<conflab_report, conflab_report_free>>;

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Failure{CONFLAB_E_IO, "cannot open " + path};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Failure{CONFLAB_E_IO, "cannot write " + path};
  return out;
}

MeshH load_mesh(const std::string& path) {
  conflab_mesh* m = nullptr;
  ok(conflab_mesh_load(path.c_str(), &m), "loading mesh");
  return MeshH(m);
}

FieldH load_field(const conflab_mesh* m, const std::string& path) {
  conflab_field* f = nullptr;
  ok(conflab_field_load(m, path.c_str(), &f), "loading field " + path);
  return FieldH(f);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conflab: conformal-factor experiments on structured grids"};
  app.require_subcommand(1);

  // mesh gen
  auto* mesh = app.add_subcommand("mesh", "mesh utilities");
  mesh->require_subcommand(1);
  auto* mesh_gen = mesh->add_subcommand("gen", "build a mesh and write its descriptor");
  std::string topo = "torus", mesh_out;
  int dim = 3, divisions = 16, bands = 3, t_div = 24, s3 = 8;
  double side = 1.0, cutoff = 4.0, band_length = 1.0, t_offset = 0.0;
  std::size_t budget = 2'000'000;
  mesh_gen->add_option("--topology", topo, "torus | cylinder | stereo_ball")
      ->check(CLI::IsMember({"torus", "cylinder", "stereo_ball"}));
  mesh_gen->add_option("--dim", dim, "dimension (3 or 4)");
  mesh_gen->add_option("--divisions", divisions, "grid divisions per axis");
  mesh_gen->add_option("--side", side, "torus side length");
  mesh_gen->add_option("--cutoff", cutoff, "stereo_ball chart radius");
  mesh_gen->add_option("--budget", budget, "stereo_ball vertex budget");
  mesh_gen->add_option("--bands", bands, "cylinder band count");
  mesh_gen->add_option("--band-length", band_length, "cylinder band length");
  mesh_gen->add_option("--t-divisions", t_div, "cylinder t cells per band");
  mesh_gen->add_option("--s3-resolution", s3, "cylinder angular resolution");
  mesh_gen->add_option("--t-offset", t_offset, "cylinder t origin");
  mesh_gen->add_option("-o,--out", mesh_out, "descriptor path")->required();

  // field gen
  auto* field = app.add_subcommand("field", "field utilities");
  field->require_subcommand(1);
  auto* field_gen = field->add_subcommand("gen", "write a conformal factor");
  std::string fg_mesh, fg_profile = "constant", fg_config, fg_out, fg_mesh_out;
  double fg_param = 1.0;
  std::vector<double> fg_center;
  int fg_k = 1;
  bool fg_normalize = false;
  field_gen->add_option("--mesh", fg_mesh, "mesh descriptor (profile mode)");
  field_gen->add_option("--profile", fg_profile, "constant | bubble | smooth | decaying | growing");
  field_gen->add_option("--param", fg_param, "profile parameter (value, scale or amplitude)");
  field_gen->add_option("--center", fg_center, "bubble center coordinates")->expected(1, 4);
  field_gen->add_option("--config", fg_config, "scenario config (family mode)");
  field_gen->add_option("--k", fg_k, "family member, 1-based");
  field_gen->add_option("--mesh-out", fg_mesh_out, "write the family mesh descriptor here");
  field_gen->add_flag("--normalize", fg_normalize, "rescale to unit volume");
  field_gen->add_option("-o,--out", fg_out, "field path")->required();

  // curvature
  auto* curv = app.add_subcommand("curvature", "scalar curvature and heat invariants");
  std::string cv_mesh, cv_field, cv_out;
  curv->add_option("--mesh", cv_mesh)->required();
  curv->add_option("--field", cv_field)->required();
  curv->add_option("-o,--out", cv_out, "per-vertex CSV");

  // spectrum
  auto* spec = app.add_subcommand("spectrum", "low Laplace eigenvalues");
  std::string sp_mesh, sp_field, sp_out;
  int sp_count = 6;
  std::uint64_t sp_seed = 1;
  double sp_tol = 1e-8;
  std::vector<double> sp_times;
  spec->add_option("--mesh", sp_mesh)->required();
  spec->add_option("--field", sp_field)->required();
  spec->add_option("--count", sp_count, "eigenvalues including the constant mode");
  spec->add_option("--seed", sp_seed);
  spec->add_option("--tol", sp_tol);
  spec->add_option("--heat-times", sp_times, "print heat traces at these times");
  spec->add_option("-o,--out", sp_out, "CSV of eigenvalues");

  // distance
  auto* dist = app.add_subcommand("distance", "conformal distances");
  std::string ds_mesh, ds_field, ds_out, ds_stencil = "face_diagonal";
  std::vector<int> ds_sources;
  int ds_landmarks = 0;
  double ds_confine = 0.0;
  int ds_target = -1;
  dist->add_option("--mesh", ds_mesh)->required();
  dist->add_option("--field", ds_field)->required();
  dist->add_option("--stencil", ds_stencil)->check(CLI::IsMember({"axis", "face_diagonal", "full"}));
  auto* src_opt = dist->add_option("--sources", ds_sources, "source vertices (rows over all vertices)");
  auto* lm_opt = dist->add_option("--landmarks", ds_landmarks, "farthest-point landmark count (matrix output)");
  src_opt->excludes(lm_opt);
  auto* conf_opt = dist->add_option("--confine-radius", ds_confine, "confine paths to this base ball around the source");
  dist->add_option("--target", ds_target, "target vertex (confined mode)")->needs(conf_opt);
  conf_opt->excludes(lm_opt);
  dist->add_option("-o,--out", ds_out, "CSV path")->required();

  // bubbles
  auto* bub = app.add_subcommand("bubbles", "concentration scan over a family");
  std::string bb_mesh, bb_out;
  std::vector<std::string> bb_fields;
  std::vector<double> bb_radii{0.05, 0.1, 0.2};
  double bb_eps = 189.496;
  int bb_per_axis = 4, bb_peaks = 8;
  bub->add_option("--mesh", bb_mesh)->required();
  bub->add_option("--fields", bb_fields, "family members in order")->required();
  bub->add_option("--radii", bb_radii, "ascending radii");
  bub->add_option("--eps", bb_eps, "detection threshold");
  bub->add_option("--scan-points", bb_per_axis, "coarse centers per axis");
  bub->add_option("--peaks", bb_peaks, "density maxima added as centers");
  bub->add_option("-o,--out", bb_out, "CSV (k, center, radius, energy)");

  // scenario run
  auto* scen = app.add_subcommand("scenario", "end-to-end scenarios");
  scen->require_subcommand(1);
  auto* scen_run = scen->add_subcommand("run", "run a scenario config");
  std::string sc_config, sc_out;
  bool sc_quiet = false;
  scen_run->add_option("--config", sc_config)->required();
  scen_run->add_option("-o,--out", sc_out, "output directory (overrides config)");
  scen_run->add_flag("-q,--quiet", sc_quiet, "do not print the summary");

  // report render
  auto* rep = app.add_subcommand("report", "reports");
  rep->require_subcommand(1);
  auto* rep_render = rep->add_subcommand("render", "render a report as plain text");
  std::string rp_in, rp_out;
  rep_render->add_option("--report", rp_in, "report.json")->required();
  rep_render->add_option("-o,--out", rp_out, "write here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*mesh_gen) {
      conflab_mesh* m = nullptr;
      if (topo == "torus") ok(conflab_mesh_torus(dim, side, divisions, &m), "building torus");
      else if (topo == "cylinder") ok(conflab_mesh_cylinder(band_length, bands, t_div, s3, t_offset, &m), "building cylinder");
      else ok(conflab_mesh_stereo_ball(dim, cutoff, divisions, budget, &m), "building stereo_ball");
      MeshH h(m);
      ok(conflab_mesh_save(m, mesh_out.c_str()), "saving mesh");
      std::printf("vertices %zu hash %016llx\n", conflab_mesh_vertex_count(m),
                  static_cast<unsigned long long>(conflab_mesh_hash(m)));
    } else if (*field_gen) {
      conflab_field* f = nullptr;
      MeshH m;
      if (!fg_config.empty()) {
        conflab_mesh* mm = nullptr;
        ok(conflab_field_from_config(slurp(fg_config).c_str(), fg_k, &mm, &f), "generating family member");
        m.reset(mm);
        if (!fg_mesh_out.empty()) ok(conflab_mesh_save(mm, fg_mesh_out.c_str()), "saving mesh");
      } else {
        if (fg_mesh.empty()) throw Failure{CONFLAB_E_INVALID_ARGUMENT, "field gen needs --mesh or --config"};
        m = load_mesh(fg_mesh);
        double c[4] = {0, 0, 0, 0};
        for (std::size_t i = 0; i < fg_center.size(); ++i) c[i] = fg_center[i];
        ok(conflab_field_profile(m.get(), fg_profile.c_str(), fg_param, c, &f), "generating profile");
      }
      FieldH fh(f);
      if (fg_normalize) {
        conflab_field* g = nullptr;
        double factor = 0.0;
        ok(conflab_field_normalize(f, &g, &factor), "normalizing");
        fh.reset(g);
        std::printf("normalization factor %s\n", g17(factor).c_str());
      }
      ok(conflab_field_save(fh.get(), fg_out.c_str()), "saving field");
    } else if (*curv) {
      auto m = load_mesh(cv_mesh);
      auto f = load_field(m.get(), cv_field);
      double a0 = 0, a1 = 0, r2 = 0;
      ok(conflab_field_invariants(f.get(), &a0, &a1, &r2), "computing invariants");
      std::printf("a0 %s\na1 %s\na1/sqrt(a0) %s\nint_R2 %s\n", g17(a0).c_str(), g17(a1).c_str(),
                  g17(a1 / std::sqrt(a0)).c_str(), g17(r2).c_str());
      if (!cv_out.empty()) ok(conflab_field_write_vertex_csv(f.get(), cv_out.c_str()), "writing vertex CSV");
    } else if (*spec) {
      auto m = load_mesh(sp_mesh);
      auto f = load_field(m.get(), sp_field);
      conflab_spectrum* s = nullptr;
      ok(conflab_spectrum_compute(f.get(), sp_count, sp_seed, sp_tol, &s), "computing spectrum");
      SpecH sh(s);
      const std::size_t n = conflab_spectrum_count(s);
      std::vector<double> ev(n), res(n);
      ok(conflab_spectrum_eigenvalues(s, ev.data(), n), "reading eigenvalues");
      ok(conflab_spectrum_residuals(s, res.data(), n), "reading residuals");
      for (std::size_t i = 0; i < n; ++i) std::printf("lambda_%zu %s (residual %s)\n", i, g17(ev[i]).c_str(), g17(res[i]).c_str());
      for (double t : sp_times) {
        double tr = 0, tw = 0;
        ok(conflab_heat_trace(s, t, 0, &tr), "heat trace");
        ok(conflab_heat_trace(s, t, 1, &tw), "heat trace");
        std::printf("heat_trace t=%s truncated %s weyl_tail %s\n", g17(t).c_str(), g17(tr).c_str(), g17(tw).c_str());
      }
      if (!sp_out.empty()) {
        auto out = open_out(sp_out);
        out << "index,eigenvalue,residual\n";
        for (std::size_t i = 0; i < n; ++i) out << i << ',' << g17(ev[i]) << ',' << g17(res[i]) << '\n';
      }
    } else if (*dist) {
      auto m = load_mesh(ds_mesh);
      auto f = load_field(m.get(), ds_field);
      auto out = open_out(ds_out);
      if (ds_confine > 0.0) {
        if (ds_sources.size() != 1 || ds_target < 0)
          throw Failure{CONFLAB_E_INVALID_ARGUMENT, "confined mode needs one --sources vertex and --target"};
        double conf = 0, unconf = 0, r2 = 0;
        int connected = 0;
        ok(conflab_confined_distance(f.get(), ds_sources[0], ds_target, ds_confine, ds_stencil.c_str(), &conf,
                                     &unconf, &r2, &connected),
           "confined distance");
        out << "source,target,radius,confined,unconfined,ratio,ball_r2,connected\n";
        out << ds_sources[0] << ',' << ds_target << ',' << g17(ds_confine) << ',' << g17(conf) << ',' << g17(unconf)
            << ',' << g17(conf / unconf) << ',' << g17(r2) << ',' << connected << '\n';
        std::printf("confined %s unconfined %s ratio %s ball_R2 %s\n", g17(conf).c_str(), g17(unconf).c_str(),
                    g17(conf / unconf).c_str(), g17(r2).c_str());
      } else if (ds_landmarks > 0) {
        const std::size_t k = static_cast<std::size_t>(ds_landmarks);
        std::vector<int32_t> ids(k);
        std::vector<double> d(k * k);
        double cover = 0.0;
        ok(conflab_landmarks(f.get(), ds_landmarks, ds_stencil.c_str(), ids.data(), d.data(), &cover), "landmarks");
        out << "i,j,vertex_i,vertex_j,distance\n";
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t j = 0; j < k; ++j)
            out << i << ',' << j << ',' << ids[i] << ',' << ids[j] << ',' << g17(d[i * k + j]) << '\n';
        std::printf("landmarks %zu covering_radius %s\n", k, g17(cover).c_str());
      } else {
        if (ds_sources.empty()) throw Failure{CONFLAB_E_INVALID_ARGUMENT, "distance needs --sources or --landmarks"};
        const std::size_t nv = conflab_mesh_vertex_count(m.get());
        std::vector<int32_t> src(ds_sources.begin(), ds_sources.end());
        std::vector<double> rows(src.size() * nv);
        ok(conflab_distance_rows(f.get(), src.data(), src.size(), ds_stencil.c_str(), rows.data()), "distances");
        out << "source,vertex,distance\n";
        for (std::size_t i = 0; i < src.size(); ++i)
          for (std::size_t v = 0; v < nv; ++v) out << src[i] << ',' << v << ',' << g17(rows[i * nv + v]) << '\n';
      }
    } else if (*bub) {
      auto m = load_mesh(bb_mesh);
      std::vector<FieldH> fam;
      std::vector<const conflab_field*> raw;
      for (const auto& p : bb_fields) {
        fam.push_back(load_field(m.get(), p));
        raw.push_back(fam.back().get());
      }
      std::size_t nc = 0;
      ok(conflab_scan_centers(raw.back(), bb_per_axis, bb_peaks, nullptr, 0, &nc), "scan centers");
      std::vector<int32_t> centers(nc);
      ok(conflab_scan_centers(raw.back(), bb_per_axis, bb_peaks, centers.data(), nc, &nc), "scan centers");
      std::vector<double> energies(raw.size() * nc * bb_radii.size());
      std::vector<int32_t> bubbles(nc);
      std::size_t nb = 0;
      ok(conflab_concentration_scan(raw.data(), raw.size(), centers.data(), nc, bb_radii.data(), bb_radii.size(),
                                    bb_eps, energies.data(), bubbles.data(), bubbles.size(), &nb),
         "concentration scan");
      std::printf("bubble points %zu\n", nb);
      for (std::size_t i = 0; i < nb; ++i) {
        double p[4];
        ok(conflab_mesh_coords(m.get(), bubbles[i], p), "coords");
        std::printf("  vertex %d at (%s, %s, %s, %s)\n", bubbles[i], g17(p[0]).c_str(), g17(p[1]).c_str(),
                    g17(p[2]).c_str(), g17(p[3]).c_str());
      }
      if (!bb_out.empty()) {
        auto out = open_out(bb_out);
        out << "k,center,radius,energy\n";
        const std::size_t nr = bb_radii.size();
        for (std::size_t k = 0; k < raw.size(); ++k)
          for (std::size_t c = 0; c < nc; ++c)
            for (std::size_t r = 0; r < nr; ++r)
              out << k + 1 << ',' << centers[c] << ',' << g17(bb_radii[r]) << ',' << g17(energies[(k * nc + c) * nr + r])
                  << '\n';
      }
    } else if (*scen_run) {
      const std::string text = slurp(sc_config);
      conflab_report* r = nullptr;
      ok(conflab_scenario_run(text.c_str(), sc_out.empty() ? nullptr : sc_out.c_str(), 1, &r), "scenario");
      ReportH rh(r);
      if (!sc_quiet) std::fputs(conflab_report_summary(r), stdout);
      if (!conflab_report_complete(r)) {
        std::fprintf(stderr, "scenario incomplete\n");
        return kExitAssert;
      }
      return conflab_report_all_checks_pass(r) ? kExitOk : kExitAssert;
    } else if (*rep_render) {
      conflab_report* r = nullptr;
      ok(conflab_report_load(rp_in.c_str(), &r), "loading report");
      ReportH rh(r);
      if (rp_out.empty()) std::fputs(conflab_report_summary(r), stdout);
      else open_out(rp_out) << conflab_report_summary(r);
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "conflab: %s\n", f.message.c_str());
    return exit_code_for(f.status);
  }
  return kExitOk;
}
