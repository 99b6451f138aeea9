#ifndef WGFEM_PML_HPP
#define WGFEM_PML_HPP

#include <optional>

#include "wgfem/types.hpp"

namespace wgfem {

enum class Axis { x, z };

/** @brief One complex-stretched absorbing strip along a coordinate axis.

    The stretching profile is s(rho) = 1 - j alpha_max (rho/d)^m with rho
    the distance from the strip interface; outside the strip s = 1, so the
    coefficient is continuous across the interface. */
struct PmlSpec {
  Axis direction = Axis::x;
  double interface = 0.0; //!< coordinate where the strip begins
  double width = 1.0;     //!< d
  double exponent = 2.0;  //!< m
  double reflection = 1e-70; //!< target reflection coefficient R
  std::optional<double> alpha_max_override;
  int sign = +1; //!< +1: strip occupies [interface, interface + width]

  double alpha = 0.0; //!< resolved attenuation; see resolve()

  //! Fill `alpha` from the override or from alpha_max(m, lambda, n, d, R).
  void resolve(double lambda, double n_adjacent);
};

//! Peak attenuation for a polynomial-profile strip:
//! alpha_max = -(m+1) lambda ln(R) / (4 pi n d).
double alpha_max(double m, double lambda, double n, double d, double R);

//! Stretching coefficient at a coordinate; 1 outside the strip.
Complex stretch_coeff(const PmlSpec& spec, double coord);

struct ScalarCoeffs {
  Complex cxx, czz, cmass;
};

//! Scalar-form material transform: diffusion coefficients s_z/s_x and
//! s_x/s_z plus mass weight s_x s_z.
ScalarCoeffs scalar_coeffs(Complex sx, Complex sz);

//! Resolved strips bounding a rectangular computational domain.
struct DomainPml {
  std::optional<PmlSpec> x_lo, x_hi, z_lo, z_hi;

  Complex sx(double x) const;
  Complex sz(double z) const;
  ScalarCoeffs coeffs_at(double x, double z) const {
    return scalar_coeffs(sx(x), sz(z));
  }
};

} // namespace wgfem

#endif
