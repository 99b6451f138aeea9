#ifndef WGFEM_POSTPROC_HPP
#define WGFEM_POSTPROC_HPP

#include "wgfem/scatter2d.hpp"

namespace wgfem {

//! Complex coefficient vector in a 1D trace space (free dofs).
struct LineField {
  std::shared_ptr<const Mesh1D> mesh;
  std::shared_ptr<const H1Space1D> space;
  CVector coeff;
};

//! Modal amplitudes at a port: master-dof values, with the incident
//! coefficients subtracted on injection ports so the result reads as the
//! reflected (resp. transmitted) spectrum.
CVector extract_port_amplitudes(const ScatterSolution& sol, int port_index);

//! Expected propagated field sum_k alpha_k e^{-j beta_k d} E_k on the
//! port's trace space.
LineField reference_field(const ModeSet& ms, const CVector& alpha, double distance);

//! L2(Gamma) relative error ||u - v|| / ||v|| through the 1D mass matrix.
double line_relative_error(const LineField& u, const LineField& v);

//! Trace of the scattering solution on a named line.
LineField trace_field(const ScatterSolution& sol, const std::string& line_tag);

//! Mode-representation residual r = ||u_p - u|| / ||u|| where u_p is the
//! conjugated-L2 projection of u onto the first n_modes transferred modes.
double mode_projection_residual(const LineField& u, const ModeSet& ms, int n_modes);

//! Point value of the FEM field inside one triangle (reference coords).
Complex evaluate_element_field(const H1Space2D& space, const CVector& base, int t,
                               const double* ref_point);

//! Legacy-VTK ASCII export of the solution on a p-refined sub-triangulation
//! with re/im point scalars.
void export_field_vtk(const ScatterSolution& sol, const std::string& path);

//! CSV dump "x,re,im" of a 1D trace field sampled per segment.
void export_line_csv(const LineField& field, const std::string& path);

//! Plain (unstretched) 1D mass matrix over free dofs.
ComplexSparse line_mass_matrix(const H1Space1D& space);

} // namespace wgfem

#endif
