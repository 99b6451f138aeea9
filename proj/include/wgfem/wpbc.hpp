#ifndef WGFEM_WPBC_HPP
#define WGFEM_WPBC_HPP

#include "wgfem/modal1d.hpp"

namespace wgfem {

/** @brief Dependency map constraining the trace dofs of a port line to one
    master dof per retained waveguide mode.

    Column j of D is mode j's coefficient vector carried through the
    trace-dof identification; element matrices transform as D^dagger K D. */
struct RestrictionMap {
  std::vector<TraceLink> trace; // constrained 2D dofs, 1D row order
  CMatrix D;                    // n_trace x n_modes
  std::map<int, int> row_of_dof; // 2D dof -> row of D

  int n_trace() const { return (int)D.rows(); }
  int n_modes() const { return (int)D.cols(); }
};

//! Build the port dependency matrix; throws on rank deficiency, naming an
//! offending column pair.
RestrictionMap build_restriction(const std::vector<TraceLink>& trace_links,
                                 const ModeSet& ms);

//! Congruence transform D^dagger K D of an element (or patch) matrix.
CMatrix restrict_element(const CMatrix& K, const CMatrix& D);
//! Load counterpart D^dagger f.
CVector restrict_load(const CVector& f, const CMatrix& D);

/** @brief One waveguide port: a mesh line, its outward orientation, the
    modal basis retained there and the incident amplitudes.

    The phase reference sits at the port plane (z = 0 locally), so the
    e^{+-j beta z} factors of the boundary expressions drop out at assembly
    time. */
struct Port {
  std::string line;
  int orientation = -1; // -1: outward normal -z (input side), +1: +z
  ModeSet modes;        // normalized, biorthogonalized
  RestrictionMap restriction;
  CVector incident; // size n_modes; zero on output ports

  int n_modes() const { return modes.size(); }
};

//! Boundary bilinear block at the port master dofs:
//! M_ij = j beta_j <e_i^*, B e_j>.
CMatrix port_boundary_matrix(const Port& port);

//! Source vector b_i = 2 sum_k alpha_k j beta_k <e_i^*, B e_k>.
CVector port_source_vector(const Port& port);

//! RHS contributions of a modal current sheet on an interior line
//! (PML-backed layout): rhs[dof] += sign * [B sum_k 2 j beta_k alpha_k e_k].
void current_plane_source(const ModeSet& ms, const CVector& alpha,
                          const std::vector<TraceLink>& line_links, CVector& rhs_base);

enum class PatchMode { per_element, per_port };

//! Port-adjacent elements grouped for restricted assembly: one group per
//! element or a single patch per port.
std::vector<std::vector<int>> group_port_patches(const H1Space2D& space,
                                                 const std::string& line_tag,
                                                 PatchMode mode);

} // namespace wgfem

#endif
