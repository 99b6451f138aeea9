#include "wgfem/pml.hpp"

#include <cmath>

namespace wgfem {

double alpha_max(double m, double lambda, double n, double d, double R) {
  if (m < 1 || lambda <= 0 || n <= 0 || d <= 0)
    throw ConfigError("alpha_max: m >= 1 and lambda, n, d > 0 required");
  if (R <= 0 || R >= 1) throw ConfigError("alpha_max: R must lie in (0, 1)");
  return -(m + 1.0) * lambda * std::log(R) / (4.0 * M_PI * n * d);
}

void PmlSpec::resolve(double lambda, double n_adjacent) {
  alpha = alpha_max_override ? *alpha_max_override
                             : alpha_max(exponent, lambda, n_adjacent, width, reflection);
}

Complex stretch_coeff(const PmlSpec& spec, double coord) {
  const double rho = (coord - spec.interface) * spec.sign;
  if (rho <= 0 || rho > spec.width) return Complex(1.0, 0.0);
  const double q = rho / spec.width;
  return Complex(1.0, -spec.alpha * std::pow(q, spec.exponent));
}

ScalarCoeffs scalar_coeffs(Complex sx, Complex sz) {
  if (sx == Complex(0.0) || sz == Complex(0.0))
    throw NumericalError("scalar_coeffs: zero stretching coefficient");
  return {sz / sx, sx / sz, sx * sz};
}

Complex DomainPml::sx(double x) const {
  Complex s(1.0, 0.0);
  if (x_lo) s *= stretch_coeff(*x_lo, x);
  if (x_hi) s *= stretch_coeff(*x_hi, x);
  return s;
}

Complex DomainPml::sz(double z) const {
  Complex s(1.0, 0.0);
  if (z_lo) s *= stretch_coeff(*z_lo, z);
  if (z_hi) s *= stretch_coeff(*z_hi, z);
  return s;
}

} // namespace wgfem
