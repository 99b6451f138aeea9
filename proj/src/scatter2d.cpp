#include "wgfem/scatter2d.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <Eigen/SparseLU>

namespace wgfem {

namespace {

Complex material_index(const MaterialMap& materials, const Region& region) {
  auto it = materials.find(region.material);
  if (it == materials.end())
    throw ConfigError("missing material '" + region.material + "'");
  return it->second;
}

struct ElemGeometry {
  double j00, j01, j10, j11; // dx/dref
  double det;
  double inv00, inv01, inv10, inv11; // J^{-1}
};

ElemGeometry element_geometry(const Mesh2D& mesh, int t) {
  const auto& tri = mesh.triangles[t].v;
  const auto& p0 = mesh.nodes[tri[0]];
  const auto& p1 = mesh.nodes[tri[1]];
  const auto& p2 = mesh.nodes[tri[2]];
  ElemGeometry g;
  g.j00 = p1.x - p0.x;
  g.j01 = p2.x - p0.x;
  g.j10 = p1.z - p0.z;
  g.j11 = p2.z - p0.z;
  g.det = g.j00 * g.j11 - g.j01 * g.j10;
  if (g.det <= 0) throw NumericalError("element with non-positive orientation");
  g.inv00 = g.j11 / g.det;
  g.inv01 = -g.j01 / g.det;
  g.inv10 = -g.j10 / g.det;
  g.inv11 = g.j00 / g.det;
  return g;
}

} // namespace

ScatterSystem assemble_scatter(std::shared_ptr<const Mesh2D> mesh,
                               const MaterialMap& materials, double k0, int p,
                               const DomainPml& pml, ScatterOptions opts) {
  if (!mesh || mesh->triangles.empty())
    throw ConfigError("assemble_scatter: empty mesh");
  if (k0 < 0) throw ConfigError("assemble_scatter: k0 must be >= 0");
  for (const auto& [id, region] : mesh->region_table)
    material_index(materials, region); // validate coverage up front

  ScatterSystem sys;
  sys.mesh = mesh;
  sys.space = std::make_shared<H1Space2D>(mesh, p);
  sys.k0 = k0;
  sys.order = p;
  sys.condensed = opts.static_condensation;

  const ShapeBasis basis{ElemKind::triangle, p};
  const int qdeg = opts.quadrature_degree > 0 ? opts.quadrature_degree : 2 * p + 2;
  const BasisTable tab = tabulate(basis, quad_triangle(qdeg));
  const int nf = basis.count();
  const int nq = tab.rule.size();
  const int nt = (int)mesh->triangles.size();

  sys.elem_K.resize(nt);
  sys.elem_f.resize(nt);
  sys.elem_dofs.resize(nt);
  if (sys.condensed) {
    sys.rec_K.resize(nt);
    sys.rec_f.resize(nt);
    sys.elem_int_dofs.resize(nt);
  }

  const int n_face = basis.face_function_count();
  const int n_bnd = nf - n_face;

  auto worker = [&](int t_begin, int t_end) {
    std::vector<int> dofs;
    std::vector<double> signs;
    CMatrix ke(nf, nf);
    CVector fe(nf);
    for (int t = t_begin; t < t_end; ++t) {
      const auto& tri = mesh->triangles[t];
      const ElemGeometry g = element_geometry(*mesh, t);
      const Complex n = material_index(materials, mesh->region_table.at(tri.region));
      const Complex n2 = n * n;
      const auto& p0 = mesh->nodes[tri.v[0]];

      ke.setZero();
      fe.setZero();
      for (int q = 0; q < nq; ++q) {
        const double rx = tab.rule.points[q][0];
        const double ry = tab.rule.points[q][1];
        const double x = p0.x + g.j00 * rx + g.j01 * ry;
        const double z = p0.z + g.j10 * rx + g.j11 * ry;
        const ScalarCoeffs c = pml.coeffs_at(x, z);
        const Complex cmass = -k0 * k0 * n2 * c.cmass;
        const double w = tab.rule.weights[q] * g.det;
        for (int i = 0; i < nf; ++i) {
          const double gxi = g.inv00 * tab.grad_x(q, i) + g.inv10 * tab.grad_y(q, i);
          const double gzi = g.inv01 * tab.grad_x(q, i) + g.inv11 * tab.grad_y(q, i);
          const double vi = tab.values(q, i);
          if (opts.volume_source) fe(i) += w * vi * opts.volume_source(x, z);
          for (int j = i; j < nf; ++j) {
            const double gxj = g.inv00 * tab.grad_x(q, j) + g.inv10 * tab.grad_y(q, j);
            const double gzj = g.inv01 * tab.grad_x(q, j) + g.inv11 * tab.grad_y(q, j);
            const double vj = tab.values(q, j);
            ke(i, j) += w * (c.cxx * gxi * gxj + c.czz * gzi * gzj + cmass * vi * vj);
          }
        }
      }
      for (int i = 0; i < nf; ++i)
        for (int j = 0; j < i; ++j) ke(i, j) = ke(j, i);

      sys.space->element_dofs(t, dofs, signs);
      for (int i = 0; i < nf; ++i) {
        fe(i) *= signs[i];
        for (int j = 0; j < nf; ++j) ke(i, j) *= signs[i] * signs[j];
      }

      if (!sys.condensed || n_face == 0) {
        sys.elem_K[t] = ke;
        sys.elem_f[t] = fe;
        sys.elem_dofs[t] = dofs;
      } else {
        // Schur complement on the vertex/edge block
        const auto Kbb = ke.topLeftCorner(n_bnd, n_bnd);
        const auto Kbi = ke.topRightCorner(n_bnd, n_face);
        const auto Kib = ke.bottomLeftCorner(n_face, n_bnd);
        const auto Kii = ke.bottomRightCorner(n_face, n_face);
        Eigen::PartialPivLU<CMatrix> lu(Kii);
        const CMatrix KiiKib = lu.solve(CMatrix(Kib));
        const CVector Kiifi = lu.solve(CVector(fe.tail(n_face)));
        sys.elem_K[t] = Kbb - Kbi * KiiKib;
        sys.elem_f[t] = fe.head(n_bnd) - Kbi * Kiifi;
        sys.elem_dofs[t].assign(dofs.begin(), dofs.begin() + n_bnd);
        sys.rec_K[t] = KiiKib;
        sys.rec_f[t] = Kiifi;
        sys.elem_int_dofs[t].assign(dofs.begin() + n_bnd, dofs.end());
      }
    }
  };

  const int n_threads = std::max(1, std::min(opts.threads, nt));
  if (n_threads == 1) {
    worker(0, nt);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (nt + n_threads - 1) / n_threads;
    for (int c = 0; c < n_threads; ++c)
      pool.emplace_back(worker, c * chunk, std::min(nt, (c + 1) * chunk));
    for (auto& th : pool) th.join();
  }

  sys.base_rhs = CVector::Zero(sys.space->n_dofs);
  return sys;
}

void apply_wpbc(ScatterSystem& sys, std::vector<Port> ports, PatchMode mode) {
  for (const Port& port : ports) {
    if (port.restriction.n_modes() != port.modes.size())
      throw ConfigError("apply_wpbc: port '" + port.line + "' restriction not built");
    if (!port.modes.normalized)
      throw ConfigError("apply_wpbc: port '" + port.line + "' modes not normalized");
  }
  sys.ports = std::move(ports);
  sys.patch_mode = mode;
  sys.finalized = false;
  finalize_system(sys);
}

void finalize_system(ScatterSystem& sys) {
  if (sys.finalized) return;
  const H1Space2D& space = *sys.space;
  const int n_base = space.n_dofs;
  const int n_ports = (int)sys.ports.size();

  sys.constrained_port.assign(n_base, -1);
  for (int p = 0; p < n_ports; ++p) {
    for (const TraceLink& link : sys.ports[p].restriction.trace) {
      if (space.dirichlet[link.dof2d])
        throw ConfigError("apply_wpbc: port trace touches a Dirichlet dof");
      if (sys.constrained_port[link.dof2d] != -1)
        throw NumericalError("apply_wpbc: ports '" + sys.ports[sys.constrained_port[link.dof2d]].line +
                             "' and '" + sys.ports[p].line + "' share dof " +
                             std::to_string(link.dof2d));
      sys.constrained_port[link.dof2d] = p;
    }
  }

  // statically condensed interior dofs stay out of the final system and
  // are recovered after the solve
  std::vector<char> condensed_dof(n_base, 0);
  if (sys.condensed)
    for (const auto& dofs : sys.elem_int_dofs)
      for (int d : dofs) condensed_dof[d] = 1;

  sys.sys_index.assign(n_base, -1);
  int count = 0;
  for (int d = 0; d < n_base; ++d)
    if (sys.constrained_port[d] < 0 && !condensed_dof[d]) sys.sys_index[d] = count++;
  sys.mode_offset.assign(n_ports, 0);
  for (int p = 0; p < n_ports; ++p) {
    sys.mode_offset[p] = count;
    count += sys.ports[p].n_modes();
  }
  sys.n_sys = count;

  // system column of a base dof / (port, mode) pair
  auto mode_col = [&](int p, int j) { return sys.mode_offset[p] + j; };

  std::vector<Eigen::Triplet<Complex>> trip;
  CVector rhs = CVector::Zero(sys.n_sys);

  // Dirichlet identity rows
  for (int d = 0; d < n_base; ++d)
    if (space.dirichlet[d]) trip.emplace_back(sys.sys_index[d], sys.sys_index[d], 1.0);

  auto scatter_plain = [&](const CMatrix& ke, const CVector& fe,
                           const std::vector<int>& dofs) {
    const int nf = (int)dofs.size();
    for (int i = 0; i < nf; ++i) {
      const int di = dofs[i];
      if (space.dirichlet[di]) continue;
      const int ri = sys.sys_index[di];
      rhs(ri) += fe(i);
      for (int j = 0; j < nf; ++j) {
        const int dj = dofs[j];
        if (space.dirichlet[dj]) continue;
        trip.emplace_back(ri, sys.sys_index[dj], ke(i, j));
      }
    }
  };

  // classify elements: port-adjacent triangles are assembled through patches
  std::vector<int> elem_patch_port((int)sys.mesh->triangles.size(), -1);
  std::vector<std::vector<std::vector<int>>> patches(n_ports);
  for (int p = 0; p < n_ports; ++p) {
    patches[p] = group_port_patches(space, sys.ports[p].line, sys.patch_mode);
    for (const auto& patch : patches[p]) {
      for (int t : patch) {
        // keep only elements that actually own a constrained dof
        bool touches = false;
        for (int d : sys.elem_dofs[t])
          if (sys.constrained_port[d] == p) touches = true;
        if (!touches) continue;
        for (int d : sys.elem_dofs[t])
          if (sys.constrained_port[d] >= 0 && sys.constrained_port[d] != p)
            throw NumericalError("apply_wpbc: element adjacent to two ports; "
                                 "domain too short in z");
        if (elem_patch_port[t] >= 0 && elem_patch_port[t] != p)
          throw NumericalError("apply_wpbc: element assigned to two port patches");
        elem_patch_port[t] = p;
      }
    }
  }

  for (int t = 0; t < (int)sys.mesh->triangles.size(); ++t)
    if (elem_patch_port[t] < 0) scatter_plain(sys.elem_K[t], sys.elem_f[t], sys.elem_dofs[t]);

  // restricted patches
  for (int p = 0; p < n_ports; ++p) {
    const Port& port = sys.ports[p];
    const int nm = port.n_modes();
    for (const auto& patch : patches[p]) {
      // deterministic union of patch dofs
      std::vector<int> pdofs;
      std::map<int, int> local_of;
      for (int t : patch) {
        if (elem_patch_port[t] != p) continue;
        for (int d : sys.elem_dofs[t])
          if (!local_of.count(d)) {
            local_of[d] = (int)pdofs.size();
            pdofs.push_back(d);
          }
      }
      if (pdofs.empty()) continue;
      const int nl = (int)pdofs.size();
      CMatrix kp = CMatrix::Zero(nl, nl);
      CVector fp = CVector::Zero(nl);
      for (int t : patch) {
        if (elem_patch_port[t] != p) continue;
        const auto& dofs = sys.elem_dofs[t];
        for (int i = 0; i < (int)dofs.size(); ++i) {
          const int li = local_of[dofs[i]];
          fp(li) += sys.elem_f[t](i);
          for (int j = 0; j < (int)dofs.size(); ++j)
            kp(li, local_of[dofs[j]]) += sys.elem_K[t](i, j);
        }
      }
      // dependency matrix: identity on unconstrained dofs, mode columns on
      // the trace dofs of this port
      std::vector<int> col_dof; // unconstrained local dofs in column order
      for (int l = 0; l < nl; ++l)
        if (sys.constrained_port[pdofs[l]] != p) col_dof.push_back(l);
      const int nu = (int)col_dof.size();
      CMatrix D = CMatrix::Zero(nl, nu + nm);
      for (int c = 0; c < nu; ++c) D(col_dof[c], c) = 1.0;
      for (int l = 0; l < nl; ++l) {
        if (sys.constrained_port[pdofs[l]] != p) continue;
        const int row = port.restriction.row_of_dof.at(pdofs[l]);
        for (int j = 0; j < nm; ++j) D(l, nu + j) = port.restriction.D(row, j);
      }
      const CMatrix kr = restrict_element(kp, D);
      const CVector fr = restrict_load(fp, D);

      auto col_index = [&](int c) {
        if (c < nu) {
          const int d = pdofs[col_dof[c]];
          return space.dirichlet[d] ? -1 : sys.sys_index[d];
        }
        return mode_col(p, c - nu);
      };
      for (int i = 0; i < nu + nm; ++i) {
        const int ri = col_index(i);
        if (ri < 0) continue;
        rhs(ri) += fr(i);
        for (int j = 0; j < nu + nm; ++j) {
          const int cj = col_index(j);
          if (cj < 0) continue;
          trip.emplace_back(ri, cj, kr(i, j));
        }
      }
    }

    // boundary matrix and incident source at the master dofs
    const CMatrix M = port_boundary_matrix(port);
    for (int i = 0; i < nm; ++i)
      for (int j = 0; j < nm; ++j) trip.emplace_back(mode_col(p, i), mode_col(p, j), M(i, j));
    if (port.incident.size() && port.incident.norm() > 0) {
      const CVector b = port_source_vector(port);
      for (int i = 0; i < nm; ++i) rhs(mode_col(p, i)) += b(i);
    }
  }

  // line sources assembled over base dofs
  for (int d = 0; d < n_base; ++d) {
    if (sys.base_rhs(d) == Complex(0.0)) continue;
    if (sys.constrained_port[d] >= 0)
      throw ConfigError("line source overlaps a restricted port line");
    if (condensed_dof[d])
      throw ConfigError("line source hits a statically condensed dof");
    if (!space.dirichlet[d]) rhs(sys.sys_index[d]) += sys.base_rhs(d);
  }

  sys.K.resize(sys.n_sys, sys.n_sys);
  sys.K.setFromTriplets(trip.begin(), trip.end());
  sys.rhs = std::move(rhs);
  sys.finalized = true;
}

namespace {

// Restarted GMRES with optional Jacobi preconditioning.
CVector gmres_solve(const ComplexSparseCol& A, const CVector& b, double tol, int max_iter,
                    bool jacobi, double* residual_out) {
  const int n = (int)A.rows();
  CVector diag = CVector::Ones(n);
  if (jacobi) {
    for (int k = 0; k < A.outerSize(); ++k)
      for (ComplexSparseCol::InnerIterator it(A, k); it; ++it)
        if (it.row() == it.col() && std::abs(it.value()) > 0) diag(it.row()) = it.value();
  }
  auto precond = [&](const CVector& v) { return CVector(v.array() / diag.array()); };

  const int m = std::min(n, 200);
  CVector x = CVector::Zero(n);
  const double bnorm = std::max(b.norm(), 1e-300);
  int iters = 0;
  while (iters < max_iter) {
    const CVector r = precond(b - A * x);
    const double beta = r.norm();
    if (beta / bnorm < tol) break;
    CMatrix V(n, m + 1);
    CMatrix H = CMatrix::Zero(m + 1, m);
    V.col(0) = r / beta;
    CVector g = CVector::Zero(m + 1);
    g(0) = beta;
    std::vector<Complex> cs(m), sn(m);
    int j = 0;
    for (; j < m && iters < max_iter; ++j, ++iters) {
      CVector w = precond(A * V.col(j));
      for (int i = 0; i <= j; ++i) {
        H(i, j) = V.col(i).dot(w);
        w -= H(i, j) * V.col(i);
      }
      H(j + 1, j) = w.norm();
      if (std::abs(H(j + 1, j)) > 1e-300) V.col(j + 1) = w / H(j + 1, j);
      // Givens updates
      for (int i = 0; i < j; ++i) {
        const Complex t = std::conj(cs[i]) * H(i, j) + std::conj(sn[i]) * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = t;
      }
      const double denom =
          std::sqrt(std::norm(H(j, j)) + std::norm(H(j + 1, j)));
      if (denom < 1e-300) break;
      cs[j] = H(j, j) / denom;
      sn[j] = H(j + 1, j) / denom;
      H(j, j) = std::conj(cs[j]) * H(j, j) + std::conj(sn[j]) * H(j + 1, j);
      H(j + 1, j) = 0;
      g(j + 1) = -sn[j] * g(j);
      g(j) = std::conj(cs[j]) * g(j);
      if (std::abs(g(j + 1)) / bnorm < tol) {
        ++j;
        break;
      }
    }
    // back substitution
    CVector y = CVector::Zero(j);
    for (int i = j - 1; i >= 0; --i) {
      Complex s = g(i);
      for (int k2 = i + 1; k2 < j; ++k2) s -= H(i, k2) * y(k2);
      y(i) = s / H(i, i);
    }
    x += V.leftCols(j) * y;
    if (j == 0) break;
  }
  if (residual_out) *residual_out = (b - A * x).norm() / bnorm;
  return x;
}

} // namespace

CVector solve_linear(const ComplexSparse& A, const CVector& b, SolveOptions opts,
                     double* residual_out,
                     const std::function<std::string(int)>& describe_row) {
  const ComplexSparseCol Ac = A;
  if (opts.method == SolveOptions::Method::gmres)
    return gmres_solve(Ac, b, opts.tol, opts.max_iter, opts.jacobi, residual_out);

  Eigen::SparseLU<ComplexSparseCol> lu;
  lu.compute(Ac);
  if (lu.info() != Eigen::Success) {
    // name a suspicious dof for the diagnostic
    std::string extra;
    RVector rowsum = RVector::Zero(A.rows());
    for (int k = 0; k < A.outerSize(); ++k)
      for (ComplexSparse::InnerIterator it(A, k); it; ++it)
        rowsum(it.row()) += std::abs(it.value());
    for (int r = 0; r < A.rows(); ++r) {
      if (rowsum(r) == 0) {
        extra = "; row " + std::to_string(r) + " is structurally empty" +
                (describe_row ? " (" + describe_row(r) + ")" : "");
        break;
      }
    }
    throw NumericalError("sparse LU factorization failed: " + lu.lastErrorMessage() + extra);
  }
  CVector x = lu.solve(b);
  if (residual_out) *residual_out = (b - Ac * x).norm() / std::max(b.norm(), 1e-300);
  return x;
}

ScatterSolution solve(ScatterSystem& sys, SolveOptions opts) {
  finalize_system(sys);

  auto describe = [&](int row) -> std::string {
    for (int d = 0; d < sys.n_base(); ++d)
      if (sys.sys_index[d] == row) {
        const int nn = (int)sys.mesh->nodes.size();
        const int ne = (int)sys.space->edges.size();
        const int per_edge = sys.order - 1;
        if (d < nn) return "node " + std::to_string(d);
        if (d < nn + ne * per_edge)
          return "edge " + std::to_string((d - nn) / std::max(per_edge, 1));
        return "face dof of triangle " +
               std::to_string((d - nn - ne * per_edge) / std::max(sys.space->n_face_functions(), 1));
      }
    for (int p = 0; p < (int)sys.ports.size(); ++p)
      if (row >= sys.mode_offset[p] && row < sys.mode_offset[p] + sys.ports[p].n_modes())
        return "port '" + sys.ports[p].line + "' mode " +
               std::to_string(row - sys.mode_offset[p] + 1);
    return "unknown";
  };

  ScatterSolution sol;
  double residual = 0;
  const CVector x = solve_linear(sys.K, sys.rhs, opts, &residual, describe);
  sol.residual = residual;

  sol.port_values.resize(sys.ports.size());
  for (int p = 0; p < (int)sys.ports.size(); ++p) {
    sol.port_values[p].resize(sys.ports[p].n_modes());
    for (int j = 0; j < sys.ports[p].n_modes(); ++j)
      sol.port_values[p](j) = x(sys.mode_offset[p] + j);
  }

  sol.base = CVector::Zero(sys.n_base());
  for (int d = 0; d < sys.n_base(); ++d) {
    if (sys.space->dirichlet[d]) continue; // exact zero
    const int p = sys.constrained_port[d];
    if (p < 0) {
      sol.base(d) = x(sys.sys_index[d]);
    } else {
      const auto& R = sys.ports[p].restriction;
      const int row = R.row_of_dof.at(d);
      sol.base(d) = (R.D.row(row) * sol.port_values[p])(0);
    }
  }

  if (sys.condensed) {
    for (int t = 0; t < (int)sys.mesh->triangles.size(); ++t) {
      if (sys.elem_int_dofs[t].empty()) continue;
      CVector ub((int)sys.elem_dofs[t].size());
      for (int i = 0; i < ub.size(); ++i) ub(i) = sol.base(sys.elem_dofs[t][i]);
      const CVector ui = sys.rec_f[t] - sys.rec_K[t] * ub;
      for (int i = 0; i < (int)sys.elem_int_dofs[t].size(); ++i)
        sol.base(sys.elem_int_dofs[t][i]) = ui(i);
    }
  }

  sol.ports = sys.ports;
  sol.k0 = sys.k0;
  sol.order = sys.order;
  sol.mesh = sys.mesh;
  sol.space = sys.space;
  return sol;
}

} // namespace wgfem
