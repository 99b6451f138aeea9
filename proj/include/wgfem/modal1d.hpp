#ifndef WGFEM_MODAL1D_HPP
#define WGFEM_MODAL1D_HPP

#include <iosfwd>
#include <memory>
#include <optional>

#include "wgfem/pml.hpp"
#include "wgfem/space.hpp"

namespace wgfem {

/** @brief Assembled 1D modal eigensystem A e = -beta^2 B e on a cross section.

    A_ij = int (1/s_x) phi_i' phi_j' - k0^2 n^2 s_x phi_i phi_j dx,
    B_ij = int s_x phi_i phi_j dx, over free dofs only (PEC ends eliminated).
    Both matrices are complex symmetric; non-Hermitian once s_x is complex. */
struct ModalSystem {
  ComplexSparse A, B;
  double k0 = 0;
  int order = 1;
  double n_max = 1.0; // largest Re(n) over the cross-section materials
  std::shared_ptr<const Mesh1D> mesh;
  std::shared_ptr<const H1Space1D> space;

  int size() const { return (int)A.rows(); }
};

ModalSystem assemble_modal(std::shared_ptr<const Mesh1D> mesh, const MaterialMap& materials,
                           double k0, int p, const DomainPml& pml);

struct Mode {
  Complex beta;   // branch: Re >= 0; on the imaginary axis, Im <= 0
  CVector coeff;  // free-dof coefficients
  double residual; // ||A e + beta^2 B e|| / (||B e|| ||A||_1)
  bool usable = true;
};

enum class EigenSolverKind { automatic, dense, shift_invert };

/** @brief Ordered eigenpairs of one port cross-section.

    Sorted by descending Re(beta), ties by ascending |Im(beta)|, so "the
    first k modes" are the guided ones followed by the slowest-decaying
    remainder. kappa holds kappa~_m = beta_m e_m^T B e_m (the non-conjugated
    modal self cross-power in the fixed unit convention). */
struct ModeSet {
  std::vector<Mode> modes;
  CVector kappa; // empty until compute_kappa
  double k0 = 0;
  ComplexSparse B; // inner-product weight
  int n_system = 0;
  bool normalized = false;
  std::shared_ptr<const Mesh1D> mesh;
  std::shared_ptr<const H1Space1D> space;

  int size() const { return (int)modes.size(); }
  //! First n modes under the sort order (kappa subset carried along).
  ModeSet truncated(int n) const;
};

//! n_modes eigenpairs nearest `target` in the -beta^2 plane; the default
//! target -(k0 n_max)^2 captures guided modes first.
ModeSet solve_modes(const ModalSystem& sys, int n_modes,
                    std::optional<Complex> target = {},
                    EigenSolverKind kind = EigenSolverKind::automatic);

//! Gram-Schmidt under the non-conjugated B-bilinear form within groups of
//! degenerate beta^2. Non-degenerate modes pass through untouched.
ModeSet orthogonalize_degenerate(ModeSet ms, double tol_degen = 1e-8);

//! Fill kappa~_m = beta_m e_m^T B e_m; modes with |kappa| below
//! 1e-13 max|kappa| are flagged unusable.
void compute_kappa(ModeSet& ms);

//! Normalized modal cross-powers: beta_n <e_m, B e_n> / sqrt(kappa_m kappa_n),
//! with e_m conjugated in the conjugated variant.
CMatrix biorthogonality_matrix(const ModeSet& ms, bool conjugated);

//! Scale every mode so that kappa~_m = 1; port dofs then read directly as
//! modal amplitudes.
ModeSet normalize_modes(ModeSet ms);

//! CSV mode table: index, re_beta, im_beta, re_kappa, im_kappa, residual.
void write_mode_csv(const ModeSet& ms, std::ostream& os);

} // namespace wgfem

#endif
