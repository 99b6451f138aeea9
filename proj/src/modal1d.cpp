#include "wgfem/modal1d.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <ostream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

namespace wgfem {

namespace {

double norm1(const ComplexSparse& m) {
  RVector colsum = RVector::Zero(m.cols());
  for (int k = 0; k < m.outerSize(); ++k)
    for (ComplexSparse::InnerIterator it(m, k); it; ++it)
      colsum[it.col()] += std::abs(it.value());
  return colsum.size() ? colsum.maxCoeff() : 0.0;
}

Complex material_index(const MaterialMap& materials, const Region& region) {
  auto it = materials.find(region.material);
  if (it == materials.end())
    throw ConfigError("missing material '" + region.material + "'");
  return it->second;
}

} // namespace

ModalSystem assemble_modal(std::shared_ptr<const Mesh1D> mesh, const MaterialMap& materials,
                           double k0, int p, const DomainPml& pml) {
  if (!mesh || mesh->segments.empty()) throw ConfigError("assemble_modal: empty mesh");
  if (k0 <= 0) throw ConfigError("assemble_modal: k0 must be > 0");

  auto space = std::make_shared<H1Space1D>(mesh, p);
  const ShapeBasis basis{ElemKind::segment, p};
  const BasisTable tab = tabulate(basis, quad_segment(2 * p + 2));
  const int nf = basis.count();
  const int nq = tab.rule.size();

  std::vector<Eigen::Triplet<Complex>> ta, tb;
  std::vector<int> dofs;
  CMatrix ka(nf, nf), kb(nf, nf);
  for (int s = 0; s < (int)mesh->segments.size(); ++s) {
    const auto& seg = mesh->segments[s];
    const double xa = mesh->nodes[seg.v[0]];
    const double xb = mesh->nodes[seg.v[1]];
    const double len = xb - xa;
    const Complex n2 = [&] {
      const Complex n = material_index(materials, mesh->region_table.at(seg.region));
      return n * n;
    }();
    ka.setZero();
    kb.setZero();
    for (int q = 0; q < nq; ++q) {
      const double x = xa + len * tab.rule.points[q][0];
      const Complex sx = pml.sx(x);
      const Complex cstiff = Complex(1.0, 0.0) / sx;
      const Complex cmassA = -k0 * k0 * n2 * sx;
      const double w = tab.rule.weights[q] * len;
      for (int i = 0; i < nf; ++i) {
        const double vi = tab.values(q, i);
        const double gi = tab.grad_x(q, i) / len;
        for (int j = i; j < nf; ++j) {
          const double vj = tab.values(q, j);
          const double gj = tab.grad_x(q, j) / len;
          ka(i, j) += w * (cstiff * gi * gj + cmassA * vi * vj);
          kb(i, j) += w * (sx * vi * vj);
        }
      }
    }
    space->element_dofs(s, dofs);
    for (int i = 0; i < nf; ++i) {
      const int fi = space->free_index[dofs[i]];
      if (fi < 0) continue;
      for (int j = i; j < nf; ++j) {
        const int fj = space->free_index[dofs[j]];
        if (fj < 0) continue;
        ta.emplace_back(fi, fj, ka(i, j));
        tb.emplace_back(fi, fj, kb(i, j));
        if (fi != fj) {
          ta.emplace_back(fj, fi, ka(i, j));
          tb.emplace_back(fj, fi, kb(i, j));
        }
      }
    }
  }

  ModalSystem sys;
  const int n = space->n_free();
  sys.A.resize(n, n);
  sys.B.resize(n, n);
  sys.A.setFromTriplets(ta.begin(), ta.end());
  sys.B.setFromTriplets(tb.begin(), tb.end());
  sys.k0 = k0;
  sys.order = p;
  for (const auto& [id, region] : mesh->region_table)
    sys.n_max = std::max(sys.n_max, material_index(materials, region).real());
  sys.mesh = std::move(mesh);
  sys.space = std::move(space);
  return sys;
}

namespace {

// Branch rule: Re(beta) >= 0; a beta on the imaginary axis decays in +z,
// i.e. Im(beta) <= 0. Near-axis real parts are snapped to zero so the
// sorting below is deterministic.
Complex beta_from_lambda(Complex lambda) {
  Complex beta = std::sqrt(-lambda);
  if (beta.real() < 0) beta = -beta;
  if (std::abs(beta.real()) < 1e-12 * std::abs(beta))
    beta = Complex(0.0, beta.imag() <= 0 ? beta.imag() : -beta.imag());
  return beta;
}

struct SortKey {
  long long im_q;
  long long re_q;
  int idx;
};

// Truncation order for ports: slowest z-decay first (ascending |Im beta|),
// then descending Re(beta). For lossless spectra this coincides with plain
// descending-Re ordering; with stretched cross-sections it keeps complex
// discretized-radiation modes behind the guided ones even when their real
// parts overlap the guided window. Keys are quantized so near-identical
// values order deterministically.
void sort_modes(std::vector<Mode>& modes) {
  double scale = 0;
  for (const auto& m : modes) scale = std::max(scale, std::abs(m.beta));
  if (scale == 0) scale = 1;
  // Im is bucketed coarsely so that the residual decay of guided modes
  // (PML perturbation, ~1e-9 relative) cannot reorder them.
  std::vector<SortKey> keys(modes.size());
  for (int i = 0; i < (int)modes.size(); ++i)
    keys[i] = {(long long)std::llround(std::abs(modes[i].beta.imag()) / (1e-6 * scale)),
               (long long)std::llround(modes[i].beta.real() / (1e-10 * scale)), i};
  std::sort(keys.begin(), keys.end(), [](const SortKey& a, const SortKey& b) {
    if (a.im_q != b.im_q) return a.im_q < b.im_q;
    if (a.re_q != b.re_q) return a.re_q > b.re_q;
    return a.idx < b.idx;
  });
  std::vector<Mode> sorted;
  sorted.reserve(modes.size());
  for (const auto& k : keys) sorted.push_back(std::move(modes[k.idx]));
  modes = std::move(sorted);
}

double mode_residual(const ComplexSparse& A, const ComplexSparse& B, double a_norm,
                     Complex beta, const CVector& e) {
  const CVector r = A * e + beta * beta * (B * e);
  const double be = (B * e).norm();
  return r.norm() / (std::max(be, 1e-300) * std::max(a_norm, 1e-300));
}

// One shift-invert inverse-iteration step per eigenvalue cluster followed by
// a Rayleigh-Ritz solve on the refined subspace. The projected pencil has
// norm |lambda| instead of ||A||, which removes the residual amplification
// that would otherwise contaminate the non-conjugated cross-products.
void refine_pairs(const ModalSystem& sys, std::vector<std::pair<Complex, CVector>>& pairs,
                  double cluster_tol_rel = 1e-3) {
  const int n = (int)pairs.size();
  if (n == 0) return;

  // union-find clustering on relative eigenvalue gaps
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double scale = std::max(std::abs(pairs[i].first), std::abs(pairs[j].first));
      if (std::abs(pairs[i].first - pairs[j].first) <= cluster_tol_rel * scale)
        parent[find(i)] = find(j);
    }
  std::map<int, std::vector<int>> clusters;
  for (int i = 0; i < n; ++i) clusters[find(i)].push_back(i);

  const double a_norm = norm1(sys.A);
  for (auto& [root, members] : clusters) {
    const int g = (int)members.size();
    Complex sigma = 0;
    for (int i : members) sigma += pairs[i].first;
    sigma /= (double)g;
    sigma *= (1.0 + 1e-9); // keep the shifted matrix regular

    ComplexSparseCol shifted = sys.A - sigma * sys.B;
    Eigen::SparseLU<ComplexSparseCol> lu;
    lu.compute(shifted);
    if (lu.info() != Eigen::Success) {
      sigma *= (1.0 + 1e-6);
      shifted = sys.A - sigma * sys.B;
      lu.compute(shifted);
      if (lu.info() != Eigen::Success) continue; // keep the unrefined pairs
    }

    CMatrix W(sys.size(), g);
    for (int c = 0; c < g; ++c) {
      CVector w = lu.solve(sys.B * pairs[members[c]].second);
      W.col(c) = w / w.norm();
    }
    // orthonormal subspace basis, then the projected pencil
    const CMatrix Q = Eigen::HouseholderQR<CMatrix>(W).householderQ() *
                      CMatrix::Identity(sys.size(), g);
    const CMatrix Ga = Q.adjoint() * (sys.A * Q);
    const CMatrix Gb = Q.adjoint() * (sys.B * Q);
    Eigen::PartialPivLU<CMatrix> small_lu(Gb);
    Eigen::ComplexEigenSolver<CMatrix> ces(small_lu.solve(Ga), true);
    if (ces.info() != Eigen::Success) continue;

    // match Ritz pairs to the cluster members by eigenvalue proximity
    std::vector<bool> used(g, false);
    std::vector<std::pair<Complex, CVector>> refined(g);
    for (int c = 0; c < g; ++c) {
      int best = -1;
      double best_d = 0;
      for (int r = 0; r < g; ++r) {
        if (used[r]) continue;
        const double d = std::abs(ces.eigenvalues()(r) - pairs[members[c]].first);
        if (best < 0 || d < best_d) {
          best = r;
          best_d = d;
        }
      }
      used[best] = true;
      CVector v = Q * ces.eigenvectors().col(best);
      v /= v.norm();
      refined[c] = {ces.eigenvalues()(best), std::move(v)};
    }
    // non-conjugated Gram-Schmidt within the cluster: the Hermitian
    // projection above does not preserve the symmetric-pencil structure,
    // so the cluster-internal B-cross-products are cleaned up here; the
    // correction coefficients are residual-sized
    for (int c = 1; c < g; ++c) {
      CVector& w = refined[c].second;
      for (int l = 0; l < c; ++l) {
        const CVector& u = refined[l].second;
        const Complex ubu = u.transpose() * (sys.B * u);
        if (std::abs(ubu) < 1e-13 * norm1(sys.B)) continue;
        const Complex ubw = u.transpose() * (sys.B * w);
        w -= (ubw / ubu) * u;
      }
      w /= w.norm();
    }
    // accept only when the worst residual improves
    double worst_old = 0, worst_new = 0;
    for (int c = 0; c < g; ++c) {
      const auto& [lo, vo] = pairs[members[c]];
      const auto& [ln, vn] = refined[c];
      worst_old = std::max(worst_old,
                           (sys.A * vo - lo * (sys.B * vo)).norm() / std::max(a_norm, 1e-300));
      worst_new = std::max(worst_new,
                           (sys.A * vn - ln * (sys.B * vn)).norm() / std::max(a_norm, 1e-300));
    }
    // refined pairs may trade a residual at the roundoff floor for clean
    // cluster-internal cross-products; accept anything well inside the
    // residual invariant
    const double accept_level = std::max(worst_old, 1e-11);
    if (worst_new <= accept_level)
      for (int c = 0; c < g; ++c) pairs[members[c]] = std::move(refined[c]);
  }
}

std::vector<std::pair<Complex, CVector>> dense_eigensolve(const ModalSystem& sys) {
  const CMatrix a = CMatrix(sys.A);
  const CMatrix b = CMatrix(sys.B);
  Eigen::PartialPivLU<CMatrix> lu(b);
  const CMatrix c = lu.solve(a);
  Eigen::ComplexEigenSolver<CMatrix> ces(c, true);
  if (ces.info() != Eigen::Success)
    throw NumericalError("dense eigensolver failed to converge");
  std::vector<std::pair<Complex, CVector>> out(sys.size());
  for (int i = 0; i < sys.size(); ++i)
    out[i] = {ces.eigenvalues()(i), ces.eigenvectors().col(i)};
  return out;
}

// Shift-invert Arnoldi on (A - sigma B)^{-1} B with full reorthogonalization.
// Deterministic start vector; residuals are verified explicitly.
std::vector<std::pair<Complex, CVector>> arnoldi_eigensolve(const ModalSystem& sys,
                                                            int n_modes, Complex sigma) {
  const int n = sys.size();
  ComplexSparseCol shifted = (sys.A - sigma * sys.B);
  Eigen::SparseLU<ComplexSparseCol> lu;
  lu.compute(shifted);
  if (lu.info() != Eigen::Success)
    throw NumericalError("shift-invert factorization failed (target equals an eigenvalue?)");

  const ComplexSparseCol bcol = sys.B;
  auto op = [&](const CVector& x) { return CVector(lu.solve(bcol * x)); };

  // The subspace is grown to its cap before extraction: early exits on
  // locally-converged Ritz sets can miss nearest-target eigenvalues that the
  // Krylov space has not discovered yet.
  const int guard = std::max(5, n_modes / 2);
  const int m_cap = std::min({n, std::max(4 * n_modes + 40, 100), 500});
  const double a_norm = norm1(sys.A);

  CMatrix V(n, m_cap + 1);
  CMatrix H = CMatrix::Zero(m_cap + 1, m_cap);
  V.col(0) = CVector::Ones(n).normalized();

  int m = 0;
  for (int j = 0; j < m_cap; ++j) {
    CVector w = op(V.col(j));
    for (int rep = 0; rep < 2; ++rep) {
      for (int i = 0; i <= j; ++i) {
        const Complex h = V.col(i).dot(w);
        if (rep == 0)
          H(i, j) = h;
        else
          H(i, j) += h;
        w -= h * V.col(i);
      }
    }
    const double hn = w.norm();
    H(j + 1, j) = hn;
    m = j + 1;
    if (hn < 1e-14) break; // exact invariant subspace
    V.col(j + 1) = w / hn;
  }
  if (m < n_modes + guard && m < n)
    throw NumericalError("shift-invert Arnoldi: subspace exhausted too early");

  Eigen::ComplexEigenSolver<CMatrix> ces(H.topLeftCorner(m, m), true);
  if (ces.info() != Eigen::Success)
    throw NumericalError("shift-invert Arnoldi: projected eigensolve failed");
  // Ritz values nu of the shift-inverted operator; lambda = sigma + 1/nu,
  // and descending |nu| is exactly ascending |lambda - sigma|
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(ces.eigenvalues()(a)) > std::abs(ces.eigenvalues()(b));
  });
  std::vector<std::pair<Complex, CVector>> out;
  for (int k = 0; k < n_modes; ++k) {
    const Complex nu = ces.eigenvalues()(order[k]);
    if (std::abs(nu) < 1e-300)
      throw NumericalError("shift-invert Arnoldi: spurious zero Ritz value");
    const Complex lambda = sigma + 1.0 / nu;
    CVector z = V.leftCols(m) * ces.eigenvectors().col(order[k]);
    z.normalize();
    const CVector r = sys.A * z - lambda * (sys.B * z);
    if (r.norm() > 1e-10 * a_norm * std::max((sys.B * z).norm(), 1e-300))
      throw NumericalError("shift-invert Arnoldi did not converge within the step limit");
    out.emplace_back(lambda, std::move(z));
  }
  return out;
}

} // namespace

ModeSet solve_modes(const ModalSystem& sys, int n_modes, std::optional<Complex> target,
                    EigenSolverKind kind) {
  const int n = sys.size();
  if (n_modes < 1 || n_modes > n)
    throw ConfigError("solve_modes: n_modes must lie in [1, " + std::to_string(n) + "]");

  // Default target -(k0 n_max)^2 puts the guided modes nearest.
  const Complex sigma =
      target ? *target : Complex(-(sys.k0 * sys.n_max) * (sys.k0 * sys.n_max), 0.0);

  const bool dense = kind == EigenSolverKind::dense ||
                     (kind == EigenSolverKind::automatic && n <= 2000);

  std::vector<std::pair<Complex, CVector>> pairs;
  if (dense) {
    pairs = dense_eigensolve(sys);
    std::sort(pairs.begin(), pairs.end(), [&](const auto& a, const auto& b) {
      return std::abs(a.first - sigma) < std::abs(b.first - sigma);
    });
    pairs.resize(n_modes);
  } else {
    pairs = arnoldi_eigensolve(sys, n_modes, sigma);
  }
  refine_pairs(sys, pairs);

  const double a_norm = norm1(sys.A);
  ModeSet ms;
  ms.k0 = sys.k0;
  ms.B = sys.B;
  ms.n_system = n;
  ms.mesh = sys.mesh;
  ms.space = sys.space;
  ms.modes.reserve(n_modes);
  for (auto& [lambda, vec] : pairs) {
    Mode m;
    m.beta = beta_from_lambda(lambda);
    m.coeff = std::move(vec);
    m.coeff /= m.coeff.norm();
    ms.modes.push_back(std::move(m));
  }
  sort_modes(ms.modes);

  // Residual-guarded polish: remove eigenvector cross-contamination under
  // the non-conjugated form. A correction c e_i against e_j costs
  // |c| |lambda_i - lambda_j| of extra residual; it is applied only when
  // that cost is negligible, i.e. when the mixing is within the error bars
  // of the eigensolve. Genuine structure is never altered by this pass.
  {
    const double b_norm = norm1(sys.B);
    std::vector<CVector> be(ms.size());
    for (int i = 0; i < ms.size(); ++i) be[i] = sys.B * ms.modes[i].coeff;
    for (int j = 0; j < ms.size(); ++j) {
      const Complex lj = -ms.modes[j].beta * ms.modes[j].beta;
      for (int i = 0; i < j; ++i) {
        const Complex li = -ms.modes[i].beta * ms.modes[i].beta;
        const Complex sii = ms.modes[i].coeff.transpose() * be[i];
        if (std::abs(sii) < 1e-13 * b_norm) continue;
        const Complex c = Complex(ms.modes[i].coeff.transpose() * be[j]) / sii;
        if (std::abs(c) * std::abs(li - lj) > 1e-11 * a_norm) continue;
        ms.modes[j].coeff -= c * ms.modes[i].coeff;
        be[j] -= c * be[i];
      }
      const double nj = ms.modes[j].coeff.norm();
      ms.modes[j].coeff /= nj;
      be[j] /= nj;
    }
  }

  for (auto& m : ms.modes)
    m.residual = mode_residual(sys.A, sys.B, a_norm, m.beta, m.coeff);
  return ms;
}

ModeSet orthogonalize_degenerate(ModeSet ms, double tol_degen) {
  const int n = ms.size();
  if (n == 0) return ms;
  // beta^2-degenerate modes are adjacent in the sort order
  std::vector<Complex> lam(n);
  for (int i = 0; i < n; ++i) lam[i] = -ms.modes[i].beta * ms.modes[i].beta;

  int start = 0;
  while (start < n) {
    int end = start + 1;
    while (end < n &&
           std::abs(lam[end] - lam[end - 1]) <=
               tol_degen * std::max(std::abs(lam[end]), std::abs(lam[end - 1])))
      ++end;
    if (end - start > 1) {
      // unpivoted Gram-Schmidt on the non-conjugated bilinear form e^T B e
      std::vector<CVector> basis;
      for (int i = start; i < end; ++i) {
        CVector w = ms.modes[i].coeff;
        for (const CVector& u : basis) {
          const Complex ubu = u.transpose() * (ms.B * u);
          const Complex ubw = u.transpose() * (ms.B * w);
          w -= (ubw / ubu) * u;
        }
        const Complex wbw = w.transpose() * (ms.B * w);
        if (std::abs(wbw) < 1e-13 * w.squaredNorm() * norm1(ms.B))
          throw NumericalError(
              "orthogonalize_degenerate: self-orthogonal combination at mode index " +
              std::to_string(i) + " (e^T B e = 0); cannot biorthogonalize");
        basis.push_back(w);
      }
      for (int i = start; i < end; ++i) {
        ms.modes[i].coeff = basis[i - start];
        ms.modes[i].coeff /= ms.modes[i].coeff.norm();
      }
    }
    start = end;
  }
  return ms;
}

void compute_kappa(ModeSet& ms) {
  const int n = ms.size();
  ms.kappa.resize(n);
  for (int i = 0; i < n; ++i) {
    const CVector& e = ms.modes[i].coeff;
    ms.kappa(i) = ms.modes[i].beta * (e.transpose() * (ms.B * e))(0);
  }
  double kmax = 0;
  for (int i = 0; i < n; ++i) kmax = std::max(kmax, std::abs(ms.kappa(i)));
  for (int i = 0; i < n; ++i)
    ms.modes[i].usable = std::abs(ms.kappa(i)) >= 1e-13 * kmax;
}

CMatrix biorthogonality_matrix(const ModeSet& ms, bool conjugated) {
  if (ms.kappa.size() != ms.size())
    throw NumericalError("biorthogonality_matrix: kappa not computed");
  const int n = ms.size();
  CMatrix out(n, n);
  std::vector<CVector> be(n);
  for (int j = 0; j < n; ++j) be[j] = ms.B * ms.modes[j].coeff;
  for (int m = 0; m < n; ++m) {
    for (int j = 0; j < n; ++j) {
      const Complex num =
          conjugated ? Complex(ms.modes[m].coeff.conjugate().transpose() * be[j])
                     : Complex(ms.modes[m].coeff.transpose() * be[j]);
      const Complex denom = std::sqrt(ms.kappa(m)) * std::sqrt(ms.kappa(j));
      out(m, j) = ms.modes[j].beta * num / denom;
    }
  }
  return out;
}

ModeSet normalize_modes(ModeSet ms) {
  if (ms.kappa.size() != ms.size())
    throw NumericalError("normalize_modes: kappa not computed");
  for (int i = 0; i < ms.size(); ++i) {
    if (!ms.modes[i].usable)
      throw NumericalError("normalize_modes: mode " + std::to_string(i) +
                           " has vanishing kappa and cannot be normalized");
    ms.modes[i].coeff /= std::sqrt(ms.kappa(i));
  }
  compute_kappa(ms);
  ms.normalized = true;
  return ms;
}

ModeSet ModeSet::truncated(int n) const {
  if (n < 0 || n > size())
    throw ConfigError("ModeSet::truncated: n out of range");
  ModeSet out;
  out.modes.assign(modes.begin(), modes.begin() + n);
  if (kappa.size() == size()) out.kappa = kappa.head(n);
  out.k0 = k0;
  out.B = B;
  out.n_system = n_system;
  out.normalized = normalized;
  out.mesh = mesh;
  out.space = space;
  return out;
}

void write_mode_csv(const ModeSet& ms, std::ostream& os) {
  os << "index,re_beta,im_beta,re_kappa,im_kappa,residual\n";
  char buf[256];
  for (int i = 0; i < ms.size(); ++i) {
    const Complex k = ms.kappa.size() == ms.size() ? ms.kappa(i) : Complex(0, 0);
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", i + 1,
                  ms.modes[i].beta.real(), ms.modes[i].beta.imag(), k.real(), k.imag(),
                  ms.modes[i].residual);
    os << buf;
  }
}

} // namespace wgfem
