#include "wgfem/fem_basis.hpp"

#include <cassert>
#include <cmath>

namespace wgfem {

namespace {

constexpr int kMaxOrder = 16;

// Scaled Legendre polynomials P^_n(x,t) = t^n P_n(x/t) together with their
// x- and t-derivatives, n = 0..nmax. P^_n(x,1) = P_n(x).
struct ScaledLegendre {
  double P[kMaxOrder + 1];
  double Px[kMaxOrder + 1];
  double Pt[kMaxOrder + 1];
  double t_val, tt;

  ScaledLegendre(int nmax, double x, double t) : t_val(t), tt(t * t) {
    assert(nmax <= kMaxOrder);
    P[0] = 1;
    Px[0] = 0;
    Pt[0] = 0;
    if (nmax == 0) return;
    P[1] = x;
    Px[1] = 1;
    Pt[1] = 0;
    for (int n = 2; n <= nmax; ++n) {
      const double a = (2.0 * n - 1) / n, b = (n - 1.0) / n;
      P[n] = a * x * P[n - 1] - b * tt * P[n - 2];
      Px[n] = a * (P[n - 1] + x * Px[n - 1]) - b * tt * Px[n - 2];
      Pt[n] = a * x * Pt[n - 1] - b * (2 * t_val * P[n - 2] + tt * Pt[n - 2]);
    }
  }

  // Integrated Legendre L_n = (P^_n - t^2 P^_{n-2}) / (2n-1), n >= 2.
  // L_n(+-t, t) = 0, so edge kernels vanish at edge endpoints.
  double L(int n) const { return (P[n] - tt * P[n - 2]) / (2.0 * n - 1); }
  double Lx(int n) const { return (Px[n] - tt * Px[n - 2]) / (2.0 * n - 1); }
  double Lt(int n) const {
    return (Pt[n] - 2 * t_val * P[n - 2] - tt * Pt[n - 2]) / (2.0 * n - 1);
  }
};

void eval_segment(int p, double t, std::span<double> v, std::span<double> g) {
  v[0] = 1.0 - t;
  g[0] = -1.0;
  v[1] = t;
  g[1] = 1.0;
  if (p < 2) return;
  const double xi = 2.0 * t - 1.0;
  ScaledLegendre sl(p, xi, 1.0);
  for (int k = 0; k <= p - 2; ++k) {
    const int n = k + 2;
    v[2 + k] = sl.L(n);
    g[2 + k] = 2.0 * sl.Lx(n); // d xi / d t = 2
  }
}

void eval_triangle(int p, const double* ref, std::span<double> v, std::span<double> g) {
  const double x = ref[0], y = ref[1];
  const double lam[3] = {1.0 - x - y, x, y};
  const double dlam[3][2] = {{-1, -1}, {1, 0}, {0, 1}};

  for (int a = 0; a < 3; ++a) {
    v[a] = lam[a];
    g[2 * a + 0] = dlam[a][0];
    g[2 * a + 1] = dlam[a][1];
  }
  int idx = 3;

  // edge blocks: scaled integrated Legendre in (lam_b - lam_a, lam_a + lam_b);
  // on the edge itself (t = 1) this restricts to the segment kernels
  static const int edges[3][2] = {{0, 1}, {1, 2}, {2, 0}};
  for (int e = 0; e < 3; ++e) {
    const int a = edges[e][0], b = edges[e][1];
    const double u = lam[b] - lam[a];
    const double t = lam[a] + lam[b];
    ScaledLegendre sl(p, u, t);
    const double du[2] = {dlam[b][0] - dlam[a][0], dlam[b][1] - dlam[a][1]};
    const double dt[2] = {dlam[a][0] + dlam[b][0], dlam[a][1] + dlam[b][1]};
    for (int k = 0; k <= p - 2; ++k) {
      const int n = k + 2;
      v[idx] = sl.L(n);
      const double lu = sl.Lx(n), lt = sl.Lt(n);
      g[2 * idx + 0] = lu * du[0] + lt * dt[0];
      g[2 * idx + 1] = lu * du[1] + lt * dt[1];
      ++idx;
    }
  }

  // face bubbles: lam0 lam1 lam2 * P^_i(lam1-lam0, lam0+lam1) * P_j(2 lam2 - 1)
  if (p >= 3) {
    const double u = lam[1] - lam[0];
    const double t = lam[0] + lam[1];
    ScaledLegendre sa(p, u, t);
    const double w = 2.0 * lam[2] - 1.0;
    ScaledLegendre sb(p, w, 1.0);
    const double bub = lam[0] * lam[1] * lam[2];
    const double dbub[2] = {
        dlam[0][0] * lam[1] * lam[2] + lam[0] * dlam[1][0] * lam[2] +
            lam[0] * lam[1] * dlam[2][0],
        dlam[0][1] * lam[1] * lam[2] + lam[0] * dlam[1][1] * lam[2] +
            lam[0] * lam[1] * dlam[2][1]};
    const double du[2] = {dlam[1][0] - dlam[0][0], dlam[1][1] - dlam[0][1]};
    const double dt[2] = {dlam[0][0] + dlam[1][0], dlam[0][1] + dlam[1][1]};
    const double dw[2] = {2 * dlam[2][0], 2 * dlam[2][1]};
    for (int i = 0; i <= p - 3; ++i) {
      for (int j = 0; i + j <= p - 3; ++j) {
        const double pa = sa.P[i], pb = sb.P[j];
        const double dpa[2] = {sa.Px[i] * du[0] + sa.Pt[i] * dt[0],
                               sa.Px[i] * du[1] + sa.Pt[i] * dt[1]};
        const double dpb[2] = {sb.Px[j] * dw[0], sb.Px[j] * dw[1]};
        v[idx] = bub * pa * pb;
        for (int d = 0; d < 2; ++d)
          g[2 * idx + d] = dbub[d] * pa * pb + bub * dpa[d] * pb + bub * pa * dpb[d];
        ++idx;
      }
    }
  }
}

} // namespace

void ShapeBasis::eval(const double* ref_point, std::span<double> values,
                      std::span<double> gradients) const {
  assert(order >= 1 && order <= kMaxOrder - 2);
  assert((int)values.size() >= count());
  assert((int)gradients.size() >= dim() * count());
  if (kind == ElemKind::segment)
    eval_segment(order, ref_point[0], values, gradients);
  else
    eval_triangle(order, ref_point, values, gradients);
}

std::vector<int> trace_dofs(const ShapeBasis& basis, int edge_index) {
  std::vector<int> out;
  if (basis.kind == ElemKind::segment) {
    if (edge_index < 0 || edge_index > 1)
      throw ConfigError("trace_dofs: segment edge index must be 0 or 1");
    out.push_back(edge_index);
    return out;
  }
  if (edge_index < 0 || edge_index > 2)
    throw ConfigError("trace_dofs: triangle edge index must be in [0,2]");
  static const int edges[3][2] = {{0, 1}, {1, 2}, {2, 0}};
  out.push_back(edges[edge_index][0]);
  out.push_back(edges[edge_index][1]);
  const int per_edge = basis.functions_per_edge();
  for (int k = 0; k < per_edge; ++k) out.push_back(3 + edge_index * per_edge + k);
  return out;
}

QuadRule quad_segment(int degree) {
  const int n = std::max(1, (degree + 2) / 2);
  // Gauss-Legendre nodes on [-1,1] via Newton on P_n, then mapped to [0,1]
  QuadRule rule;
  rule.degree = 2 * n - 1;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double p1 = 0, p0 = 0, dp = 0;
    for (int it = 0; it < 100; ++it) {
      p0 = 1;
      p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    p0 = 1;
    p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points[i] = {0.5 * (x + 1.0), 0.0};
    rule.weights[i] = 0.5 * w;
  }
  for (int i = 0; i < n / 2; ++i) {
    std::swap(rule.points[i], rule.points[n - 1 - i]);
    std::swap(rule.weights[i], rule.weights[n - 1 - i]);
  }
  return rule;
}

QuadRule quad_triangle(int degree) {
  // Duffy map (u, v) -> (u, v(1-u)) of a tensor Gauss rule; the (1-u)
  // Jacobian raises the u-degree by one.
  const QuadRule gu = quad_segment(degree + 1);
  const QuadRule gv = quad_segment(degree);
  QuadRule rule;
  rule.degree = degree;
  rule.points.reserve((size_t)gu.size() * gv.size());
  rule.weights.reserve((size_t)gu.size() * gv.size());
  for (int i = 0; i < gu.size(); ++i) {
    const double u = gu.points[i][0];
    for (int j = 0; j < gv.size(); ++j) {
      const double v = gv.points[j][0];
      rule.points.push_back({u, v * (1.0 - u)});
      rule.weights.push_back(gu.weights[i] * gv.weights[j] * (1.0 - u));
    }
  }
  return rule;
}

BasisTable tabulate(const ShapeBasis& basis, const QuadRule& rule) {
  BasisTable tab;
  tab.basis = basis;
  tab.rule = rule;
  const int nq = rule.size();
  const int nf = basis.count();
  tab.values.resize(nq, nf);
  tab.grad_x.resize(nq, nf);
  tab.grad_y.resize(nq, nf);
  std::vector<double> v(nf), g((size_t)basis.dim() * nf);
  for (int q = 0; q < nq; ++q) {
    basis.eval(rule.points[q].data(), v, g);
    for (int f = 0; f < nf; ++f) {
      tab.values(q, f) = v[f];
      tab.grad_x(q, f) = g[(size_t)basis.dim() * f];
      tab.grad_y(q, f) = basis.dim() == 2 ? g[(size_t)basis.dim() * f + 1] : 0.0;
    }
  }
  return tab;
}

} // namespace wgfem
