#ifndef WGFEM_PIPELINES_HPP
#define WGFEM_PIPELINES_HPP

#include "wgfem/config.hpp"
#include "wgfem/postproc.hpp"

namespace wgfem {

//! Stretch profiles for a slab run; the pml_backed layout adds the two
//! z strips behind the ports.
DomainPml slab_domain_pml(const RunConfig& cfg, PortLayout layout);

//! Modal pipeline for one port line: trace extraction, assembly, solve,
//! degenerate orthogonalization and kappa.
ModeSet port_mode_set(const Mesh2D& mesh, const RunConfig& cfg, const std::string& line,
                      int n_modes, bool normalize);

//! Port with its restriction map built against the scattering space.
Port make_port(const H1Space2D& space, const std::string& line, int orientation,
               ModeSet modes, CVector incident);

struct ModalReport {
  ModeSet modes;
  double max_offdiag_nonconj = 0;
  double max_offdiag_conj = 0;
};
ModalReport run_modal(const RunConfig& cfg, bool write_outputs = true);

struct ValidationReport {
  double err_wpbc = 0;
  double err_pml = 0;
  int ndof_wpbc = 0;
  int ndof_pml = 0;
  bool wpbc_not_worse = false;
};
ValidationReport run_validate(const RunConfig& cfg, bool write_outputs = true);

struct NmodesReport {
  struct Row {
    int n_in, n_out;
    double r_in, r_out;
  };
  std::vector<Row> rows;
  double floor_err = 0; // companion straight-guide validation error
};
NmodesReport run_nmodes(const RunConfig& cfg, bool write_outputs = true);

struct ScatterReport {
  std::vector<CVector> amplitudes; // per port (reflected / transmitted)
  double residual = 0;
};
ScatterReport run_scatter(const RunConfig& cfg, bool write_outputs = true);

} // namespace wgfem

#endif
