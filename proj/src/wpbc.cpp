#include "wgfem/wpbc.hpp"

#include <Eigen/QR>

namespace wgfem {

RestrictionMap build_restriction(const std::vector<TraceLink>& trace_links,
                                 const ModeSet& ms) {
  const int n_trace = (int)trace_links.size();
  const int n_modes = ms.size();
  if (n_modes == 0) throw ConfigError("build_restriction: empty mode set");
  if (n_modes > n_trace)
    throw ConfigError("build_restriction: more modes (" + std::to_string(n_modes) +
                      ") than trace dofs (" + std::to_string(n_trace) + ")");
  if (ms.n_system != n_trace)
    throw ConfigError("build_restriction: trace and modal spaces do not match");

  RestrictionMap map;
  map.trace = trace_links;
  map.D.resize(n_trace, n_modes);
  for (int r = 0; r < n_trace; ++r) {
    const TraceLink& link = trace_links[r];
    map.row_of_dof[link.dof2d] = r;
    for (int j = 0; j < n_modes; ++j)
      map.D(r, j) = link.sign * ms.modes[j].coeff(link.free1d);
  }

  Eigen::ColPivHouseholderQR<CMatrix> qr(map.D);
  qr.setThreshold(1e-10);
  if (qr.rank() < n_modes) {
    // name the most parallel column pair for the diagnostic
    int bi = 0, bj = 1;
    double best = 0;
    for (int i = 0; i < n_modes; ++i) {
      for (int j = i + 1; j < n_modes; ++j) {
        const double c = std::abs(map.D.col(i).dot(map.D.col(j))) /
                         (map.D.col(i).norm() * map.D.col(j).norm());
        if (c > best) {
          best = c;
          bi = i;
          bj = j;
        }
      }
    }
    throw NumericalError("build_restriction: dependency matrix is rank deficient (rank " +
                         std::to_string(qr.rank()) + " < " + std::to_string(n_modes) +
                         "); columns " + std::to_string(bi) + " and " + std::to_string(bj) +
                         " are numerically parallel");
  }
  return map;
}

CMatrix restrict_element(const CMatrix& K, const CMatrix& D) {
  if (K.rows() != K.cols() || K.rows() != D.rows())
    throw ConfigError("restrict_element: dimension mismatch");
  return D.adjoint() * K * D;
}

CVector restrict_load(const CVector& f, const CMatrix& D) {
  if (f.size() != D.rows()) throw ConfigError("restrict_load: dimension mismatch");
  return D.adjoint() * f;
}

CMatrix port_boundary_matrix(const Port& port) {
  const ModeSet& ms = port.modes;
  if (ms.kappa.size() != ms.size())
    throw NumericalError("port_boundary_matrix: kappa not computed");
  const int n = ms.size();
  CMatrix out(n, n);
  std::vector<CVector> be(n);
  for (int j = 0; j < n; ++j) be[j] = ms.B * ms.modes[j].coeff;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out(i, j) = kImag * ms.modes[j].beta *
                  Complex(ms.modes[i].coeff.conjugate().transpose() * be[j]);
  return out;
}

CVector port_source_vector(const Port& port) {
  const ModeSet& ms = port.modes;
  const int n = ms.size();
  if (port.incident.size() != n)
    throw ConfigError("port_source_vector: incident coefficient count mismatch");
  CVector weighted = CVector::Zero(ms.n_system);
  for (int k = 0; k < n; ++k)
    weighted += 2.0 * kImag * ms.modes[k].beta * port.incident(k) * ms.modes[k].coeff;
  const CVector bw = ms.B * weighted;
  CVector out(n);
  for (int i = 0; i < n; ++i)
    out(i) = Complex(ms.modes[i].coeff.conjugate().transpose() * bw);
  return out;
}

void current_plane_source(const ModeSet& ms, const CVector& alpha,
                          const std::vector<TraceLink>& line_links, CVector& rhs_base) {
  if (alpha.size() != ms.size())
    throw ConfigError("current_plane_source: alpha length mismatch");
  if ((int)line_links.size() != ms.n_system)
    throw ConfigError("current_plane_source: line not matched to the modal space");
  CVector weighted = CVector::Zero(ms.n_system);
  for (int k = 0; k < ms.size(); ++k)
    weighted += 2.0 * kImag * ms.modes[k].beta * alpha(k) * ms.modes[k].coeff;
  const CVector bw = ms.B * weighted;
  for (const TraceLink& link : line_links)
    rhs_base(link.dof2d) += link.sign * bw(link.free1d);
}

std::vector<std::vector<int>> group_port_patches(const H1Space2D& space,
                                                 const std::string& line_tag,
                                                 PatchMode mode) {
  const std::vector<int> adjacent = space.line_adjacent_triangles(line_tag);
  std::vector<std::vector<int>> patches;
  if (mode == PatchMode::per_element) {
    for (int t : adjacent) patches.push_back({t});
  } else {
    patches.push_back(adjacent);
  }
  return patches;
}

} // namespace wgfem
