#ifndef WGFEM_SCATTER2D_HPP
#define WGFEM_SCATTER2D_HPP

#include <functional>

#include "wgfem/wpbc.hpp"

namespace wgfem {

struct ScatterOptions {
  bool static_condensation = false;
  std::function<Complex(double, double)> volume_source; // f(x, z)
  int quadrature_degree = 0; // 0: 2p+2
  int threads = 1;
};

/** @brief Assembled 2D scalar scattering system.

    Element matrices are kept (in global dof convention, orientation signs
    applied) so that waveguide-port restrictions and patch grouping can be
    applied after volume assembly. Dirichlet dofs stay in the final system
    as identity rows/columns. */
struct ScatterSystem {
  std::shared_ptr<const Mesh2D> mesh;
  std::shared_ptr<const H1Space2D> space;
  double k0 = 0;
  int order = 1;
  bool condensed = false;

  std::vector<CMatrix> elem_K;
  std::vector<CVector> elem_f;
  std::vector<std::vector<int>> elem_dofs;
  // static-condensation recovery: u_int = rec_f - rec_K u_bnd
  std::vector<CMatrix> rec_K;
  std::vector<CVector> rec_f;
  std::vector<std::vector<int>> elem_int_dofs;

  CVector base_rhs; // line sources over base dofs

  std::vector<Port> ports;
  PatchMode patch_mode = PatchMode::per_port;

  ComplexSparse K;
  CVector rhs;
  std::vector<int> sys_index;        // base dof -> system row, -1 if port-constrained
  std::vector<int> constrained_port; // base dof -> port index, -1 otherwise
  std::vector<int> mode_offset;      // per port
  int n_sys = 0;
  bool finalized = false;

  int n_base() const { return space ? space->n_dofs : 0; }
};

ScatterSystem assemble_scatter(std::shared_ptr<const Mesh2D> mesh,
                               const MaterialMap& materials, double k0, int p,
                               const DomainPml& pml, ScatterOptions opts = {});

//! Eliminate port trace dofs in favor of mode master dofs and add the
//! boundary matrices and source vectors. Rebuilds the final system.
void apply_wpbc(ScatterSystem& sys, std::vector<Port> ports,
                PatchMode mode = PatchMode::per_port);

//! Assemble the final matrix/rhs (no-op when already finalized).
void finalize_system(ScatterSystem& sys);

struct SolveOptions {
  enum class Method { direct, gmres };
  Method method = Method::direct;
  double tol = 1e-10;
  int max_iter = 5000;
  bool jacobi = true; // gmres only
};

struct ScatterSolution {
  CVector base; // prolonged coefficients over all base dofs
  std::vector<CVector> port_values;
  std::vector<Port> ports;
  double residual = 0;
  double k0 = 0;
  int order = 1;
  std::shared_ptr<const Mesh2D> mesh;
  std::shared_ptr<const H1Space2D> space;
};

ScatterSolution solve(ScatterSystem& sys, SolveOptions opts = {});

//! Direct or GMRES solve of one assembled sparse system (used by solve()).
CVector solve_linear(const ComplexSparse& A, const CVector& b, SolveOptions opts,
                     double* residual_out = nullptr,
                     const std::function<std::string(int)>& describe_row = {});

} // namespace wgfem

#endif
