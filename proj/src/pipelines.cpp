#include "wgfem/pipelines.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace wgfem {

namespace {

double cladding_index(const RunConfig& cfg) {
  auto it = cfg.materials.find("cladding");
  if (it == cfg.materials.end()) throw ConfigError("missing material 'cladding'");
  return it->second.real();
}

void ensure_outdir(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.output_dir);
}

std::ofstream open_out(const RunConfig& cfg, const std::string& name) {
  ensure_outdir(cfg);
  const std::string path = cfg.output_dir + "/" + name;
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  return os;
}

} // namespace

DomainPml slab_domain_pml(const RunConfig& cfg, PortLayout layout) {
  const SlabGeometry& g = cfg.geometry;
  const double hh = g.half_height();
  const double n_adj = cladding_index(cfg);

  DomainPml pml;
  PmlSpec x_hi{Axis::x, hh - g.pml_width_x, g.pml_width_x, cfg.pml.m, cfg.pml.R,
               cfg.pml.alpha_max_x, +1};
  x_hi.resolve(cfg.wavelength, n_adj);
  PmlSpec x_lo = x_hi;
  x_lo.interface = -(hh - g.pml_width_x);
  x_lo.sign = -1;
  pml.x_lo = x_lo;
  pml.x_hi = x_hi;

  if (layout == PortLayout::pml_backed) {
    const double off = g.resolved_eval_offset();
    PmlSpec z_hi{Axis::z, g.domain_length + off, g.pml_width_z, cfg.pml.m, cfg.pml.R,
                 cfg.pml.alpha_max_z, +1};
    z_hi.resolve(cfg.wavelength, n_adj);
    PmlSpec z_lo = z_hi;
    z_lo.interface = -off;
    z_lo.sign = -1;
    pml.z_lo = z_lo;
    pml.z_hi = z_hi;
  }
  return pml;
}

ModeSet port_mode_set(const Mesh2D& mesh, const RunConfig& cfg, const std::string& line,
                      int n_modes, bool normalize) {
  auto trace = std::make_shared<Mesh1D>(extract_trace(mesh, line));
  // the cross-section problem carries only the transverse stretching
  DomainPml pml = slab_domain_pml(cfg, PortLayout::wpbc);
  ModalSystem sys = assemble_modal(trace, cfg.materials, cfg.k0(), cfg.order, pml);
  const int n = std::min(n_modes, sys.size());
  // oversolve so that slowly-decaying modes cannot be crowded out of the
  // nearest-target selection by the complex discretized-radiation cloud,
  // then truncate in decay order
  const int n_solve = std::min(sys.size(), std::max(n + 20, 2 * n));
  ModeSet ms = solve_modes(sys, n_solve, cfg.modal.target, cfg.modal.solver);
  ms = orthogonalize_degenerate(ms);
  compute_kappa(ms);
  if (normalize) ms = normalize_modes(ms);
  return ms.truncated(n);
}

Port make_port(const H1Space2D& space, const std::string& line, int orientation,
               ModeSet modes, CVector incident) {
  Port port;
  port.line = line;
  port.orientation = orientation;
  port.restriction = build_restriction(space.line_trace(line, *modes.space), modes);
  port.modes = std::move(modes);
  port.incident = std::move(incident);
  if (port.incident.size() == 0) port.incident = CVector::Zero(port.modes.size());
  if (port.incident.size() != port.modes.size())
    throw ConfigError("port '" + line + "': incident vector length mismatch");
  return port;
}

ModalReport run_modal(const RunConfig& cfg, bool write_outputs) {
  const Mesh2D mesh = build_slab_mesh(cfg.geometry, PortLayout::wpbc);
  ModalReport rep;
  rep.modes = port_mode_set(mesh, cfg, kLinePortIn, cfg.modal.nmodes, false);

  const CMatrix nonconj = biorthogonality_matrix(rep.modes, false);
  const CMatrix conj = biorthogonality_matrix(rep.modes, true);
  for (int i = 0; i < rep.modes.size(); ++i) {
    for (int j = 0; j < rep.modes.size(); ++j) {
      if (i == j) continue;
      rep.max_offdiag_nonconj = std::max(rep.max_offdiag_nonconj, std::abs(nonconj(i, j)));
      rep.max_offdiag_conj = std::max(rep.max_offdiag_conj, std::abs(conj(i, j)));
    }
  }

  if (write_outputs) {
    auto csv = open_out(cfg, "modes.csv");
    write_mode_csv(rep.modes, csv);
    auto rep_os = open_out(cfg, "biorthogonality.csv");
    char buf[128];
    rep_os << "variant,max_offdiagonal\n";
    std::snprintf(buf, sizeof buf, "nonconjugated,%.17g\n", rep.max_offdiag_nonconj);
    rep_os << buf;
    std::snprintf(buf, sizeof buf, "conjugated,%.17g\n", rep.max_offdiag_conj);
    rep_os << buf;
  }
  return rep;
}

namespace {

struct WpbcRun {
  ScatterSolution sol;
  int ndof = 0;
};

// WPBC scattering run on a straight or discontinuous slab.
WpbcRun solve_wpbc(const RunConfig& cfg, const Mesh2D& mesh2d, int n_in, int n_out,
                   const ModeSet& ms_in_full, const ModeSet& ms_out_full,
                   PatchMode patch_mode) {
  auto mesh = std::make_shared<Mesh2D>(mesh2d);
  DomainPml pml = slab_domain_pml(cfg, PortLayout::wpbc);
  ScatterOptions opts;
  opts.threads = cfg.threads;
  ScatterSystem sys = assemble_scatter(mesh, cfg.materials, cfg.k0(), cfg.order, pml, opts);

  const ModeSet ms_in = ms_in_full.truncated(n_in);
  const ModeSet ms_out = ms_out_full.truncated(n_out);
  std::vector<Port> ports;
  ports.push_back(make_port(*sys.space, kLinePortIn, -1, ms_in,
                            cfg.incident_vector(cfg.port_in, n_in)));
  ports.push_back(make_port(*sys.space, kLinePortOut, +1, ms_out,
                            cfg.incident_vector(cfg.port_out, n_out)));
  apply_wpbc(sys, std::move(ports), patch_mode);

  WpbcRun run;
  run.ndof = sys.n_sys;
  run.sol = solve(sys);
  return run;
}

} // namespace

ValidationReport run_validate(const RunConfig& cfg, bool write_outputs) {
  if (cfg.geometry.core_width2)
    throw ConfigError("validate: straight-guide geometry required (no core_width2)");
  if (cfg.port_in.incident.empty())
    throw ConfigError("validate: relative errors undefined for zero incident field");
  const double d = cfg.geometry.resolved_eval_offset();

  ValidationReport rep;

  // waveguide-port pipeline
  const Mesh2D mesh_w = build_slab_mesh(cfg.geometry, PortLayout::wpbc);
  const ModeSet ms_in = port_mode_set(mesh_w, cfg, kLinePortIn, cfg.port_in.nmodes, true);
  const ModeSet ms_out = port_mode_set(mesh_w, cfg, kLinePortOut, cfg.port_out.nmodes, true);
  const WpbcRun wrun =
      solve_wpbc(cfg, mesh_w, ms_in.size(), ms_out.size(), ms_in, ms_out, PatchMode::per_port);
  const LineField u_wpbc = trace_field(wrun.sol, kLineEvalIn);
  const CVector alpha = cfg.incident_vector(cfg.port_in, ms_in.size());
  const LineField ref_w = reference_field(ms_in, alpha, d);
  rep.err_wpbc = line_relative_error(u_wpbc, ref_w);
  rep.ndof_wpbc = wrun.ndof;

  // PML-backed current-plane pipeline on the same physical region
  auto mesh_p = std::make_shared<Mesh2D>(build_slab_mesh(cfg.geometry, PortLayout::pml_backed));
  const ModeSet ms_p = port_mode_set(*mesh_p, cfg, kLinePortIn, cfg.port_in.nmodes, true);
  DomainPml pml_p = slab_domain_pml(cfg, PortLayout::pml_backed);
  ScatterOptions opts;
  opts.threads = cfg.threads;
  ScatterSystem sys_p =
      assemble_scatter(mesh_p, cfg.materials, cfg.k0(), cfg.order, pml_p, opts);
  const CVector alpha_p = cfg.incident_vector(cfg.port_in, ms_p.size());
  current_plane_source(ms_p, alpha_p, sys_p.space->line_trace(kLinePortIn, *ms_p.space),
                       sys_p.base_rhs);
  ScatterSolution sol_p = solve(sys_p);
  rep.ndof_pml = sys_p.n_sys;
  const LineField u_pml = trace_field(sol_p, kLineEvalIn);
  const LineField ref_p = reference_field(ms_p, alpha_p, d);
  rep.err_pml = line_relative_error(u_pml, ref_p);

  rep.wpbc_not_worse = rep.err_wpbc < rep.err_pml;

  if (write_outputs) {
    auto os = open_out(cfg, "validation.csv");
    char buf[160];
    os << "method,relative_error,ndof\n";
    std::snprintf(buf, sizeof buf, "wpbc,%.17g,%d\n", rep.err_wpbc, rep.ndof_wpbc);
    os << buf;
    std::snprintf(buf, sizeof buf, "pml_backed,%.17g,%d\n", rep.err_pml, rep.ndof_pml);
    os << buf;
    export_line_csv(u_wpbc, cfg.output_dir + "/trace_wpbc.csv");
    export_line_csv(u_pml, cfg.output_dir + "/trace_pml.csv");
    export_line_csv(ref_w, cfg.output_dir + "/trace_reference.csv");
  }
  return rep;
}

NmodesReport run_nmodes(const RunConfig& cfg, bool write_outputs) {
  if (!cfg.geometry.core_width2)
    throw ConfigError("nmodes: discontinuity geometry required (set core_width2)");

  const Mesh2D mesh = build_slab_mesh(cfg.geometry, PortLayout::wpbc);
  auto mesh_ptr = std::make_shared<Mesh2D>(mesh);
  DomainPml pml = slab_domain_pml(cfg, PortLayout::wpbc);
  ScatterOptions opts;
  opts.threads = cfg.threads;
  ScatterSystem sys =
      assemble_scatter(mesh_ptr, cfg.materials, cfg.k0(), cfg.order, pml, opts);

  const int n_full =
      H1Space1D(std::make_shared<Mesh1D>(extract_trace(mesh, kLinePortIn)), cfg.order)
          .n_free();
  const ModeSet ms_in_full = port_mode_set(mesh, cfg, kLinePortIn, n_full, true);
  const ModeSet ms_out_full = port_mode_set(mesh, cfg, kLinePortOut, n_full, true);

  std::vector<std::pair<int, int>> cells;
  if (cfg.nmodes_single) {
    cells.push_back(*cfg.nmodes_single);
  } else {
    for (int n : cfg.nmodes_grid) cells.emplace_back(n, n);
  }

  NmodesReport rep;
  for (const auto& [cin, cout] : cells) {
    const int n_in = cin < 0 ? ms_in_full.size() : std::min(cin, ms_in_full.size());
    const int n_out = cout < 0 ? ms_out_full.size() : std::min(cout, ms_out_full.size());

    const ModeSet ms_in = ms_in_full.truncated(n_in);
    const ModeSet ms_out = ms_out_full.truncated(n_out);
    std::vector<Port> ports;
    ports.push_back(make_port(*sys.space, kLinePortIn, -1, ms_in,
                              cfg.incident_vector(cfg.port_in, n_in)));
    ports.push_back(make_port(*sys.space, kLinePortOut, +1, ms_out,
                              cfg.incident_vector(cfg.port_out, n_out)));
    apply_wpbc(sys, std::move(ports), PatchMode::per_port);
    ScatterSolution sol = solve(sys);

    NmodesReport::Row row;
    row.n_in = n_in;
    row.n_out = n_out;
    row.r_in = mode_projection_residual(trace_field(sol, kLineEvalIn), ms_in_full, n_in);
    row.r_out = mode_projection_residual(trace_field(sol, kLineEvalOut), ms_out_full, n_out);
    rep.rows.push_back(row);
  }

  // companion straight-guide run on the input cross-section fixes the
  // attainable tolerance of this mesh family
  RunConfig companion = cfg;
  companion.geometry.core_width2.reset();
  companion.geometry.z_disc = 0;
  companion.port_in.incident = {{1, Complex(1.0, 0.0)}};
  companion.port_out.incident.clear();
  rep.floor_err = run_validate(companion, false).err_wpbc;

  if (write_outputs) {
    auto os = open_out(cfg, "nmodes_sweep.csv");
    char buf[200];
    os << "n_in,n_out,r_in,r_out\n";
    for (const auto& row : rep.rows) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", row.n_in, row.n_out, row.r_in,
                    row.r_out);
      os << buf;
    }
    auto fs = open_out(cfg, "validation_floor.csv");
    fs << "floor_relative_error\n";
    std::snprintf(buf, sizeof buf, "%.17g\n", rep.floor_err);
    fs << buf;
  }
  return rep;
}

ScatterReport run_scatter(const RunConfig& cfg, bool write_outputs) {
  const Mesh2D mesh = build_slab_mesh(cfg.geometry, PortLayout::wpbc);
  const ModeSet ms_in = port_mode_set(mesh, cfg, kLinePortIn, cfg.port_in.nmodes, true);
  const ModeSet ms_out = port_mode_set(mesh, cfg, kLinePortOut, cfg.port_out.nmodes, true);
  const WpbcRun run =
      solve_wpbc(cfg, mesh, ms_in.size(), ms_out.size(), ms_in, ms_out, PatchMode::per_port);

  ScatterReport rep;
  rep.residual = run.sol.residual;
  for (int p = 0; p < (int)run.sol.ports.size(); ++p)
    rep.amplitudes.push_back(extract_port_amplitudes(run.sol, p));

  if (write_outputs) {
    ensure_outdir(cfg);
    export_field_vtk(run.sol, cfg.output_dir + "/field.vtk");
    auto os = open_out(cfg, "amplitudes.csv");
    os << "port,mode,re,im,abs\n";
    char buf[200];
    for (int p = 0; p < (int)run.sol.ports.size(); ++p) {
      for (int j = 0; j < rep.amplitudes[p].size(); ++j) {
        const Complex a = rep.amplitudes[p](j);
        std::snprintf(buf, sizeof buf, "%s,%d,%.17g,%.17g,%.17g\n",
                      run.sol.ports[p].line.c_str(), j + 1, a.real(), a.imag(), std::abs(a));
        os << buf;
      }
    }
    for (const auto& tag : {kLinePortIn, kLinePortOut, kLineEvalIn, kLineEvalOut})
      export_line_csv(trace_field(run.sol, tag),
                      cfg.output_dir + "/trace_" + tag + ".csv");
  }
  return rep;
}

} // namespace wgfem
