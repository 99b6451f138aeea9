#include "oracles.hpp"

#include <cmath>
#include <functional>

#include <Eigen/SparseLU>

namespace wgfem::oracles {

namespace {

double bisect(const std::function<double(double)>& f, double a, double b) {
  double fa = f(a), fb = f(b);
  if (fa * fb > 0) throw std::runtime_error("bisect: no sign change");
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if (fm == 0) return m;
    if (fa * fm < 0) {
      b = m;
      fb = fm;
    } else {
      a = m;
      fa = fm;
    }
  }
  return 0.5 * (a + b);
}

} // namespace

std::vector<double> slab_guided_beta(double k0, double n_core, double n_clad, double width) {
  // u = kappa a, v = gamma a, u^2 + v^2 = V^2;
  // even modes: v = u tan(u); odd modes: v = -u cot(u)
  const double a = 0.5 * width;
  const double V = k0 * a * std::sqrt(n_core * n_core - n_clad * n_clad);
  std::vector<double> betas;
  const double eps = 1e-13;

  auto beta_of_u = [&](double u) {
    const double kappa = u / a;
    return std::sqrt(k0 * k0 * n_core * n_core - kappa * kappa);
  };

  // even branches start at u = i pi
  for (int i = 0;; ++i) {
    const double lo = i * M_PI;
    if (lo >= V) break;
    const double hi = std::min(V, lo + 0.5 * M_PI);
    auto f = [&](double u) { return u * std::tan(u) - std::sqrt(V * V - u * u); };
    // f(lo+) < 0, f -> +inf toward the branch end
    double ulo = lo + eps, uhi = hi - eps;
    if (f(ulo) * f(uhi) > 0) continue; // branch not populated
    betas.push_back(beta_of_u(bisect(f, ulo, uhi)));
  }
  // odd branches start at u = (i + 1/2) pi
  for (int i = 0;; ++i) {
    const double lo = (i + 0.5) * M_PI;
    if (lo >= V) break;
    const double hi = std::min(V, lo + 0.5 * M_PI);
    auto f = [&](double u) { return -u / std::tan(u) - std::sqrt(V * V - u * u); };
    double ulo = lo + eps, uhi = hi - eps;
    if (f(ulo) * f(uhi) > 0) continue;
    betas.push_back(beta_of_u(bisect(f, ulo, uhi)));
  }
  std::sort(betas.rbegin(), betas.rend());
  return betas;
}

double legendre_moment(int n, int q) {
  // int_{-1}^{1} P_n x^q: zero for q < n or mismatched parity; otherwise
  // 2^{n+1} q! ((q+n)/2)! / ((q-n)/2)! / (q+n+1)!  (classical formula)
  if (q < n || (q - n) % 2 != 0) return 0.0;
  auto fact = [](int m) {
    double f = 1;
    for (int i = 2; i <= m; ++i) f *= i;
    return f;
  };
  const int s = (q - n) / 2;
  const int t = (q + n) / 2;
  return std::pow(2.0, n + 1) * fact(q) * fact(t) / (fact(s) * fact(q + n + 1));
}

double integrated_legendre_moment(int n, int q) {
  // L_n = (P_n - P_{n-2}) / (2n - 1)
  return (legendre_moment(n, q) - legendre_moment(n - 2, q)) / (2.0 * n - 1);
}

double triangle_monomial_integral(int a, int b) {
  // int_T x^a y^b = a! b! / (a + b + 2)!
  double num = 1, den = 1;
  for (int i = 2; i <= a; ++i) num *= i;
  for (int i = 2; i <= b; ++i) num *= i;
  for (int i = 2; i <= a + b + 2; ++i) den *= i;
  return num / den;
}

Mesh1D uniform_strip(double x0, double x1, int n_elems, const std::string& material) {
  Mesh1D mesh;
  mesh.nodes.resize(n_elems + 1);
  for (int i = 0; i <= n_elems; ++i) mesh.nodes[i] = x0 + (x1 - x0) * i / n_elems;
  mesh.segments.resize(n_elems);
  for (int i = 0; i < n_elems; ++i) mesh.segments[i] = {{i, i + 1}, 1};
  mesh.region_table[1] = Region{material, PmlAxes::none};
  return mesh;
}

namespace {

// Hand-rolled 1D Helmholtz assembly, independent of the library assembler:
// int c(x) u' v' - k^2 s(x) u v dx with optional Robin closures.
struct Helmholtz1D {
  int n_elems, order, n_dofs;
  double x0, h;
  BasisTable tab;

  Helmholtz1D(double x0_, double x1, int n_elems_, int order_)
      : n_elems(n_elems_), order(order_), x0(x0_), h((x1 - x0_) / n_elems_),
        tab(tabulate(ShapeBasis{ElemKind::segment, order_}, quad_segment(2 * order_ + 4))) {
    n_dofs = n_elems + 1 + n_elems * (order - 1);
  }

  int dof(int e, int local) const {
    if (local == 0) return e;
    if (local == 1) return e + 1;
    return n_elems + 1 + e * (order - 1) + (local - 2);
  }

  ComplexSparseCol assemble(const std::function<Complex(double)>& stretch, double k) {
    std::vector<Eigen::Triplet<Complex>> trip;
    const int nf = order + 1;
    for (int e = 0; e < n_elems; ++e) {
      const double xa = x0 + e * h;
      for (int i = 0; i < nf; ++i) {
        for (int j = 0; j < nf; ++j) {
          Complex acc = 0;
          for (int q = 0; q < tab.rule.size(); ++q) {
            const double x = xa + h * tab.rule.points[q][0];
            const Complex s = stretch(x);
            acc += tab.rule.weights[q] * h *
                   ((1.0 / s) * (tab.grad_x(q, i) / h) * (tab.grad_x(q, j) / h) -
                    k * k * s * tab.values(q, i) * tab.values(q, j));
          }
          trip.emplace_back(dof(e, i), dof(e, j), acc);
        }
      }
    }
    ComplexSparseCol A(n_dofs, n_dofs);
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
  }
};

} // namespace

CVector helmholtz_strip_pml(double k, double x1, double pml_width, double alpha, double m,
                            int n_elems_per_unit, int order) {
  const double x_end = x1 + pml_width;
  const int n_elems = (int)std::lround(x_end * n_elems_per_unit);
  Helmholtz1D fem(0.0, x_end, n_elems, order);
  PmlSpec spec{Axis::x, x1, pml_width, m, 1e-70, alpha, +1};
  spec.alpha = alpha;
  auto stretch = [&](double x) { return stretch_coeff(spec, x); };
  ComplexSparseCol A = fem.assemble(stretch, k);

  CVector rhs = CVector::Zero(fem.n_dofs);
  // inflow at x = 0: u'(0) = -jk (2 - u(0)); weak form picks up
  // +u'(0) phi(0) = (-2jk + jk u(0)) phi(0)
  A.coeffRef(0, 0) += kImag * k;
  rhs(0) += 2.0 * kImag * k;
  // Dirichlet at the far end of the strip
  const int last = fem.n_elems; // node dof index of x_end
  for (int kcol = 0; kcol < A.outerSize(); ++kcol)
    for (ComplexSparseCol::InnerIterator it(A, kcol); it; ++it)
      if (it.row() == last || it.col() == last) it.valueRef() = it.row() == it.col() ? 1.0 : 0.0;
  rhs(last) = 0;

  Eigen::SparseLU<ComplexSparseCol> lu(A);
  if (lu.info() != Eigen::Success) throw std::runtime_error("oracle: LU failed");
  const CVector u = lu.solve(rhs);
  // report dofs on [0, x1] only
  const int n_keep_elems = (int)std::lround(x1 * n_elems_per_unit);
  CVector out(n_keep_elems + 1 + n_keep_elems * (order - 1));
  int idx = 0;
  for (int e = 0; e <= n_keep_elems; ++e) out(idx++) = u(e);
  for (int e = 0; e < n_keep_elems; ++e)
    for (int j = 0; j < order - 1; ++j) out(idx++) = u(fem.n_elems + 1 + e * (order - 1) + j);
  return out;
}

CVector helmholtz_strip_reference(double k, double x1, double x_far, int n_elems_per_unit,
                                  int order) {
  const int n_elems = (int)std::lround(x_far * n_elems_per_unit);
  Helmholtz1D fem(0.0, x_far, n_elems, order);
  auto stretch = [](double) { return Complex(1.0, 0.0); };
  ComplexSparseCol A = fem.assemble(stretch, k);
  CVector rhs = CVector::Zero(fem.n_dofs);
  A.coeffRef(0, 0) += kImag * k;
  rhs(0) += 2.0 * kImag * k;
  // exact outflow at x_far: u'(x_far) = -jk u; weak form adds +jk u phi
  const int last = fem.n_elems;
  A.coeffRef(last, last) += kImag * k;

  Eigen::SparseLU<ComplexSparseCol> lu(A);
  if (lu.info() != Eigen::Success) throw std::runtime_error("oracle: LU failed");
  const CVector u = lu.solve(rhs);
  const int n_keep_elems = (int)std::lround(x1 * n_elems_per_unit);
  CVector out(n_keep_elems + 1 + n_keep_elems * (order - 1));
  int idx = 0;
  for (int e = 0; e <= n_keep_elems; ++e) out(idx++) = u(e);
  for (int e = 0; e < n_keep_elems; ++e)
    for (int j = 0; j < order - 1; ++j) out(idx++) = u(fem.n_elems + 1 + e * (order - 1) + j);
  return out;
}

CVector unrestricted_reference(ScatterSystem& sys,
                               const std::vector<std::pair<std::string, ModeSet>>& ports,
                               const std::vector<CVector>& incident) {
  // assemble the plain system (no port restriction), Dirichlet as identity
  ScatterSystem plain = sys;
  plain.ports.clear();
  plain.finalized = false;
  finalize_system(plain);
  ComplexSparseCol A = plain.K;
  CVector rhs = plain.rhs;

  for (size_t p = 0; p < ports.size(); ++p) {
    const ModeSet& ms = ports[p].second;
    const auto links = sys.space->line_trace(ports[p].first, *ms.space);
    const int n = ms.n_system;
    if (ms.size() != n)
      throw std::runtime_error("unrestricted_reference: full modal basis required");
    CMatrix V(n, n);
    for (int j = 0; j < n; ++j) V.col(j) = ms.modes[j].coeff;
    CVector beta(n);
    for (int j = 0; j < n; ++j) beta(j) = kImag * ms.modes[j].beta;
    const CMatrix Bd = CMatrix(ms.B);
    // trace operator S = B V diag(j beta) V^{-1}; source 2 B V diag(j beta) alpha
    const CMatrix S = Bd * V * beta.asDiagonal() * V.inverse();
    const CVector src = 2.0 * (Bd * (V * (beta.asDiagonal() * incident[p])));
    for (const TraceLink& li : links) {
      const int ri = plain.sys_index[li.dof2d];
      rhs(ri) += li.sign * src(li.free1d);
      for (const TraceLink& lj : links)
        A.coeffRef(ri, plain.sys_index[lj.dof2d]) +=
            li.sign * lj.sign * S(li.free1d, lj.free1d);
    }
  }

  Eigen::SparseLU<ComplexSparseCol> lu(A);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("unrestricted_reference: LU failed");
  const CVector x = lu.solve(rhs);
  CVector base = CVector::Zero(plain.n_base());
  for (int d = 0; d < plain.n_base(); ++d) {
    if (plain.space->dirichlet[d]) continue;
    base(d) = x(plain.sys_index[d]);
  }
  return base;
}

} // namespace wgfem::oracles
