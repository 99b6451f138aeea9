#include "wgfem/postproc.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <Eigen/Cholesky>

namespace wgfem {

CVector extract_port_amplitudes(const ScatterSolution& sol, int port_index) {
  if (port_index < 0 || port_index >= (int)sol.ports.size())
    throw ConfigError("extract_port_amplitudes: no such port");
  const Port& port = sol.ports[port_index];
  if (port.restriction.n_modes() == 0)
    throw ConfigError("extract_port_amplitudes: port is not restricted");
  CVector amp = sol.port_values[port_index];
  if (port.incident.size() == amp.size()) amp -= port.incident;
  return amp;
}

LineField reference_field(const ModeSet& ms, const CVector& alpha, double distance) {
  if (alpha.size() != ms.size())
    throw ConfigError("reference_field: alpha length mismatch");
  if (distance < 0) throw ConfigError("reference_field: distance must be >= 0");
  LineField f;
  f.mesh = ms.mesh;
  f.space = ms.space;
  f.coeff = CVector::Zero(ms.n_system);
  for (int k = 0; k < ms.size(); ++k) {
    const Complex phase = std::exp(-kImag * ms.modes[k].beta * distance);
    f.coeff += alpha(k) * phase * ms.modes[k].coeff;
  }
  return f;
}

ComplexSparse line_mass_matrix(const H1Space1D& space) {
  const Mesh1D& mesh = *space.mesh;
  const int p = space.order;
  const ShapeBasis basis{ElemKind::segment, p};
  const BasisTable tab = tabulate(basis, quad_segment(2 * p + 2));
  const int nf = basis.count();
  std::vector<Eigen::Triplet<Complex>> trip;
  std::vector<int> dofs;
  for (int s = 0; s < (int)mesh.segments.size(); ++s) {
    const double len = mesh.nodes[mesh.segments[s].v[1]] - mesh.nodes[mesh.segments[s].v[0]];
    space.element_dofs(s, dofs);
    for (int i = 0; i < nf; ++i) {
      const int fi = space.free_index[dofs[i]];
      if (fi < 0) continue;
      for (int j = 0; j < nf; ++j) {
        const int fj = space.free_index[dofs[j]];
        if (fj < 0) continue;
        double v = 0;
        for (int q = 0; q < tab.rule.size(); ++q)
          v += tab.rule.weights[q] * tab.values(q, i) * tab.values(q, j);
        trip.emplace_back(fi, fj, Complex(v * len, 0.0));
      }
    }
  }
  ComplexSparse m(space.n_free(), space.n_free());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

namespace {

void check_same_space(const LineField& u, const LineField& v) {
  if (u.coeff.size() != v.coeff.size() ||
      u.mesh->nodes.size() != v.mesh->nodes.size())
    throw ConfigError("line fields live on different 1D spaces");
  for (size_t i = 0; i < u.mesh->nodes.size(); ++i)
    if (std::abs(u.mesh->nodes[i] - v.mesh->nodes[i]) > 1e-12)
      throw ConfigError("line fields live on different 1D meshes");
}

double mass_norm(const ComplexSparse& m, const CVector& v) {
  return std::sqrt(std::abs(Complex(v.adjoint() * (m * v))));
}

} // namespace

double line_relative_error(const LineField& u, const LineField& v) {
  check_same_space(u, v);
  const ComplexSparse m = line_mass_matrix(*u.space);
  const double denom = mass_norm(m, v.coeff);
  if (denom <= 0) throw NumericalError("line_relative_error: zero reference norm");
  return mass_norm(m, CVector(u.coeff - v.coeff)) / denom;
}

LineField trace_field(const ScatterSolution& sol, const std::string& line_tag) {
  auto mesh1 = std::make_shared<Mesh1D>(extract_trace(*sol.mesh, line_tag));
  auto space1 = std::make_shared<H1Space1D>(mesh1, sol.order);
  const auto links = sol.space->line_trace(line_tag, *space1);
  LineField f;
  f.mesh = mesh1;
  f.space = space1;
  f.coeff = CVector::Zero(space1->n_free());
  for (const TraceLink& link : links)
    f.coeff(link.free1d) = link.sign * sol.base(link.dof2d);
  return f;
}

double mode_projection_residual(const LineField& u, const ModeSet& ms, int n_modes) {
  if (n_modes < 0 || n_modes > ms.size())
    throw ConfigError("mode_projection_residual: n_modes out of range");
  if (ms.n_system != u.coeff.size())
    throw ConfigError("mode_projection_residual: trace space mismatch");
  const ComplexSparse m = line_mass_matrix(*u.space);
  const double unorm = mass_norm(m, u.coeff);
  if (unorm <= 0) throw NumericalError("mode_projection_residual: zero field");
  if (n_modes == 0) return 1.0;

  CMatrix V(ms.n_system, n_modes);
  for (int j = 0; j < n_modes; ++j) V.col(j) = ms.modes[j].coeff;
  const CMatrix mv = m * V;
  const CMatrix gram = V.adjoint() * mv; // Hermitian positive definite
  Eigen::LDLT<CMatrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success)
    throw NumericalError("mode_projection_residual: rank-deficient Gram matrix");
  const CVector c = ldlt.solve(V.adjoint() * (m * u.coeff));
  const CVector up = V * c;
  return mass_norm(m, CVector(up - u.coeff)) / unorm;
}

Complex evaluate_element_field(const H1Space2D& space, const CVector& base, int t,
                               const double* ref_point) {
  const ShapeBasis basis{ElemKind::triangle, space.order};
  const int nf = basis.count();
  std::vector<double> v(nf), g(2 * nf);
  basis.eval(ref_point, v, g);
  std::vector<int> dofs;
  std::vector<double> signs;
  space.element_dofs(t, dofs, signs);
  Complex out = 0;
  for (int i = 0; i < nf; ++i) out += base(dofs[i]) * signs[i] * v[i];
  return out;
}

void export_field_vtk(const ScatterSolution& sol, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  const int p = sol.order;
  const Mesh2D& mesh = *sol.mesh;
  const int nt = (int)mesh.triangles.size();
  const int pts_per = (p + 1) * (p + 2) / 2;
  const int tris_per = p * p;

  // lattice of the reference triangle
  std::vector<std::array<double, 2>> lattice;
  std::vector<std::array<int, 3>> subtris;
  std::vector<std::vector<int>> idx(p + 1, std::vector<int>(p + 1, -1));
  for (int j = 0; j <= p; ++j)
    for (int i = 0; i + j <= p; ++i) {
      idx[i][j] = (int)lattice.size();
      lattice.push_back({(double)i / p, (double)j / p});
    }
  for (int j = 0; j < p; ++j)
    for (int i = 0; i + j < p; ++i) {
      subtris.push_back({idx[i][j], idx[i + 1][j], idx[i][j + 1]});
      if (i + j < p - 1)
        subtris.push_back({idx[i + 1][j], idx[i + 1][j + 1], idx[i][j + 1]});
    }

  char buf[160];
  os << "# vtk DataFile Version 3.0\n";
  os << "wgfem field\n";
  os << "ASCII\n";
  os << "DATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << (size_t)nt * pts_per << " double\n";
  std::vector<Complex> values;
  values.reserve((size_t)nt * pts_per);
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t].v;
    const auto& p0 = mesh.nodes[tri[0]];
    const auto& p1 = mesh.nodes[tri[1]];
    const auto& p2 = mesh.nodes[tri[2]];
    for (const auto& rp : lattice) {
      const double x = p0.x + (p1.x - p0.x) * rp[0] + (p2.x - p0.x) * rp[1];
      const double z = p0.z + (p1.z - p0.z) * rp[0] + (p2.z - p0.z) * rp[1];
      std::snprintf(buf, sizeof buf, "%.17g %.17g 0\n", x, z);
      os << buf;
      values.push_back(evaluate_element_field(*sol.space, sol.base, t, rp.data()));
    }
  }
  os << "CELLS " << (size_t)nt * tris_per << " " << (size_t)4 * nt * tris_per << "\n";
  for (int t = 0; t < nt; ++t)
    for (const auto& st : subtris)
      os << "3 " << t * pts_per + st[0] << " " << t * pts_per + st[1] << " "
         << t * pts_per + st[2] << "\n";
  os << "CELL_TYPES " << (size_t)nt * tris_per << "\n";
  for (size_t i = 0; i < (size_t)nt * tris_per; ++i) os << "5\n";
  os << "POINT_DATA " << values.size() << "\n";
  os << "SCALARS re_E double 1\nLOOKUP_TABLE default\n";
  for (const Complex& v : values) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v.real());
    os << buf;
  }
  os << "SCALARS im_E double 1\nLOOKUP_TABLE default\n";
  for (const Complex& v : values) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v.imag());
    os << buf;
  }
}

void export_line_csv(const LineField& field, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  os << "x,re,im\n";
  const Mesh1D& mesh = *field.mesh;
  const H1Space1D& space = *field.space;
  const int p = space.order;
  const ShapeBasis basis{ElemKind::segment, p};
  const int nf = basis.count();
  std::vector<double> v(nf), g(nf);
  std::vector<int> dofs;
  char buf[160];
  for (int s = 0; s < (int)mesh.segments.size(); ++s) {
    const double xa = mesh.nodes[mesh.segments[s].v[0]];
    const double xb = mesh.nodes[mesh.segments[s].v[1]];
    space.element_dofs(s, dofs);
    const int n_samp = p + 1;
    for (int q = (s == 0 ? 0 : 1); q <= n_samp; ++q) {
      const double t = (double)q / n_samp;
      basis.eval(&t, v, g);
      Complex val = 0;
      for (int i = 0; i < nf; ++i) {
        const int fi = space.free_index[dofs[i]];
        if (fi >= 0) val += field.coeff(fi) * v[i];
      }
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", xa + (xb - xa) * t, val.real(),
                    val.imag());
      os << buf;
    }
  }
}

} // namespace wgfem
