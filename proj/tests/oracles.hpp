// Independent oracles used by the test suites. Everything here is computed
// without going through the solver paths it is used to check.
#ifndef WGFEM_TEST_ORACLES_HPP
#define WGFEM_TEST_ORACLES_HPP

#include <vector>

#include "wgfem/postproc.hpp"

namespace wgfem::oracles {

//! Guided TE propagation constants of a symmetric slab from bisection on
//! the transcendental dispersion relations, sorted descending.
std::vector<double> slab_guided_beta(double k0, double n_core, double n_clad, double width);

//! Exact integral over [-1,1] of P_n(x) x^q (Legendre moments).
double legendre_moment(int n, int q);

//! Exact integral over [-1,1] of the integrated-Legendre kernel L_n times x^q.
double integrated_legendre_moment(int n, int q);

//! Exact integral of x^a y^b over the reference triangle.
double triangle_monomial_integral(int a, int b);

//! Uniform 1D mesh helper for strip problems.
Mesh1D uniform_strip(double x0, double x1, int n_elems, const std::string& material = "core");

/** 1D Helmholtz inflow problems for the absorption check.

    A unit-amplitude wave enters at x = 0 through an exact inflow Robin
    condition. The PML variant terminates with a stretched strip and a
    Dirichlet end; the reference variant extends the domain and closes with
    the exact outflow Robin condition (exact in 1D), so it contains no
    artificial reflection. Returns dof values of the space on [0, x1]. */
CVector helmholtz_strip_pml(double k, double x1, double pml_width, double alpha, double m,
                            int n_elems_per_unit, int order);
CVector helmholtz_strip_reference(double k, double x1, double x_far, int n_elems_per_unit,
                                  int order);

/** Unrestricted mixed-boundary reference for the scattering problem.

    Builds the same volume system as the restricted path but keeps all
    trace dofs, imposing the port boundary operator through the full modal
    basis (requires n_modes = full trace dimension). Returns the base-dof
    coefficient vector. */
CVector unrestricted_reference(ScatterSystem& sys,
                               const std::vector<std::pair<std::string, ModeSet>>& ports,
                               const std::vector<CVector>& incident);

} // namespace wgfem::oracles

#endif
