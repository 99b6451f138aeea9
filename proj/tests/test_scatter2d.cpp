#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "wgfem/pipelines.hpp"

using namespace wgfem;

namespace {

RunConfig unit_material_config(double h, int p) {
  RunConfig cfg;
  cfg.wavelength = 1.55;
  cfg.order = p;
  cfg.materials = {{"core", 1.0}, {"cladding", 1.0}};
  cfg.geometry.core_width = 0.5;
  cfg.geometry.cladding_extent = 0.5;
  cfg.geometry.domain_length = 1.0;
  cfg.geometry.element_size = h;
  cfg.geometry.eval_offset = 0.25;
  cfg.pml.width_x = 0.5;
  cfg.pml.width_z = 0.5;
  cfg.geometry.pml_width_x = 0.5;
  cfg.geometry.pml_width_z = 0.5;
  return cfg;
}

RunConfig guide_config(double h, int p) {
  RunConfig cfg;
  cfg.wavelength = 1.55;
  cfg.order = p;
  cfg.geometry.core_width = 1.0;
  cfg.geometry.cladding_extent = 1.2;
  cfg.geometry.domain_length = 1.0;
  cfg.geometry.element_size = h;
  cfg.geometry.eval_offset = h;
  cfg.pml.width_x = 0.8;
  cfg.pml.width_z = 0.8;
  cfg.geometry.pml_width_x = 0.8;
  cfg.geometry.pml_width_z = 0.8;
  return cfg;
}

// L2 error of the solution against a manufactured field
double l2_error(const ScatterSolution& sol, const std::function<Complex(double, double)>& exact) {
  const Mesh2D& mesh = *sol.mesh;
  const QuadRule rule = quad_triangle(2 * sol.order + 2);
  double err2 = 0;
  for (int t = 0; t < (int)mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t].v;
    const auto& p0 = mesh.nodes[tri[0]];
    const auto& p1 = mesh.nodes[tri[1]];
    const auto& p2 = mesh.nodes[tri[2]];
    const double det = (p1.x - p0.x) * (p2.z - p0.z) - (p2.x - p0.x) * (p1.z - p0.z);
    for (int q = 0; q < rule.size(); ++q) {
      const double rx = rule.points[q][0], ry = rule.points[q][1];
      const double x = p0.x + (p1.x - p0.x) * rx + (p2.x - p0.x) * ry;
      const double z = p0.z + (p1.z - p0.z) * rx + (p2.z - p0.z) * ry;
      const double pt[2] = {rx, ry};
      const Complex diff = evaluate_element_field(*sol.space, sol.base, t, pt) - exact(x, z);
      err2 += rule.weights[q] * det * std::norm(diff);
    }
  }
  return std::sqrt(err2);
}

} // namespace

TEST_CASE("k0 = 0 reduces the volume terms to the pure stiffness form") {
  RunConfig cfg = unit_material_config(0.25, 2);
  auto mesh = std::make_shared<Mesh2D>(build_slab_mesh(cfg.geometry, PortLayout::wpbc));
  ScatterSystem sys = assemble_scatter(mesh, cfg.materials, 0.0, 2, DomainPml{});

  // independent per-element stiffness assembly
  const ShapeBasis basis{ElemKind::triangle, 2};
  const BasisTable tab = tabulate(basis, quad_triangle(6));
  const int nf = basis.count();
  std::vector<int> dofs;
  std::vector<double> signs;
  for (int t = 0; t < (int)mesh->triangles.size(); ++t) {
    const auto& tri = mesh->triangles[t].v;
    const auto& p0 = mesh->nodes[tri[0]];
    const auto& p1 = mesh->nodes[tri[1]];
    const auto& p2 = mesh->nodes[tri[2]];
    const double j00 = p1.x - p0.x, j01 = p2.x - p0.x;
    const double j10 = p1.z - p0.z, j11 = p2.z - p0.z;
    const double det = j00 * j11 - j01 * j10;
    RMatrix ke = RMatrix::Zero(nf, nf);
    for (int q = 0; q < tab.rule.size(); ++q) {
      for (int i = 0; i < nf; ++i) {
        const double gxi = (j11 * tab.grad_x(q, i) - j10 * tab.grad_y(q, i)) / det;
        const double gzi = (-j01 * tab.grad_x(q, i) + j00 * tab.grad_y(q, i)) / det;
        for (int j = 0; j < nf; ++j) {
          const double gxj = (j11 * tab.grad_x(q, j) - j10 * tab.grad_y(q, j)) / det;
          const double gzj = (-j01 * tab.grad_x(q, j) + j00 * tab.grad_y(q, j)) / det;
          ke(i, j) += tab.rule.weights[q] * det * (gxi * gxj + gzi * gzj);
        }
      }
    }
    sys.space->element_dofs(t, dofs, signs);
    for (int i = 0; i < nf; ++i)
      for (int j = 0; j < nf; ++j)
        CHECK(std::abs(sys.elem_K[t](i, j) - signs[i] * signs[j] * ke(i, j)) <=
              1e-13 * std::abs(ke(i, j)) + 1e-15);
  }
}

TEST_CASE("manufactured solution converges at order p+1 in L2") {
  for (int p : {1, 2}) {
    std::vector<double> errs;
    for (double h : {0.25, 0.125, 0.0625}) {
      RunConfig cfg = unit_material_config(h, p);
      auto mesh = std::make_shared<Mesh2D>(build_slab_mesh(cfg.geometry, PortLayout::pml_backed));
      double x0 = 1e300, x1 = -1e300, z0 = 1e300, z1 = -1e300;
      for (const auto& nd : mesh->nodes) {
        x0 = std::min(x0, nd.x);
        x1 = std::max(x1, nd.x);
        z0 = std::min(z0, nd.z);
        z1 = std::max(z1, nd.z);
      }
      const double lx = x1 - x0, lz = z1 - z0, k0 = 1.0;
      auto exact = [=](double x, double z) {
        return Complex(std::sin(M_PI * (x - x0) / lx) * std::sin(M_PI * (z - z0) / lz), 0.0);
      };
      ScatterOptions opts;
      opts.volume_source = [=](double x, double z) {
        const double factor = M_PI * M_PI / (lx * lx) + M_PI * M_PI / (lz * lz) - k0 * k0;
        return factor * exact(x, z);
      };
      ScatterSystem sys = assemble_scatter(mesh, cfg.materials, k0, p, DomainPml{}, opts);
      ScatterSolution sol = solve(sys);
      errs.push_back(l2_error(sol, exact));
    }
    const double rate1 = std::log2(errs[0] / errs[1]);
    const double rate2 = std::log2(errs[1] / errs[2]);
    CHECK(rate1 >= p + 1 - 0.3);
    CHECK(rate2 >= p + 1 - 0.3);
  }
}

TEST_CASE("unit stretches match the pml-free assembly entrywise") {
  RunConfig cfg = guide_config(0.25, 3);
  auto mesh = std::make_shared<Mesh2D>(build_slab_mesh(cfg.geometry, PortLayout::wpbc));

  RunConfig unit = cfg;
  unit.pml.alpha_max_x = 0.0;
  DomainPml pml_unit = slab_domain_pml(unit, PortLayout::wpbc);
  ScatterSystem sys_unit =
      assemble_scatter(mesh, cfg.materials, cfg.k0(), cfg.order, pml_unit);
  ScatterSystem sys_none = assemble_scatter(mesh, cfg.materials, cfg.k0(), cfg.order, DomainPml{});
  finalize_system(sys_unit);
  finalize_system(sys_none);
  CHECK((CMatrix(sys_unit.K) - CMatrix(sys_none.K)).cwiseAbs().maxCoeff() <=
        1e-15 * CMatrix(sys_none.K).cwiseAbs().maxCoeff());
}

TEST_CASE("global pattern symmetry with ports applied") {
  RunConfig cfg = guide_config(0.25, 2);
  auto mesh = std::make_shared<Mesh2D>(build_slab_mesh(cfg.geometry, PortLayout::wpbc));
  const ModeSet ms_in = port_mode_set(*mesh, cfg, kLinePortIn, 4, true);
  const ModeSet ms_out = port_mode_set(*mesh, cfg, kLinePortOut, 4, true);
  DomainPml pml = slab_domain_pml(cfg, PortLayout::wpbc);
  ScatterSystem sys = assemble_scatter(mesh, cfg.materials, cfg.k0(), cfg.order, pml);
  CVector alpha = CVector::Zero(4);
  alpha(0) = 1.0;
  std::vector<Port> ports;
  ports.push_back(make_port(*sys.space, kLinePortIn, -1, ms_in, alpha));
  ports.push_back(make_port(*sys.space, kLinePortOut, +1, ms_out, CVector::Zero(4)));
  apply_wpbc(sys, std::move(ports), PatchMode::per_port);
  CHECK(pattern_symmetric(sys.K));
  CHECK(sys.n_sys == sys.n_base() - 2 * (int)ms_in.n_system + 8);
}

TEST_CASE("sourceless problem has the zero solution and zero Dirichlet dofs") {
  RunConfig cfg = guide_config(0.25, 2);
  auto mesh = std::make_shared<Mesh2D>(build_slab_mesh(cfg.geometry, PortLayout::wpbc));
  const ModeSet ms_in = port_mode_set(*mesh, cfg, kLinePortIn, 3, true);
  const ModeSet ms_out = port_mode_set(*mesh, cfg, kLinePortOut, 3, true);
  DomainPml pml = slab_domain_pml(cfg, PortLayout::wpbc);
  ScatterSystem sys = assemble_scatter(mesh, cfg.materials, cfg.k0(), cfg.order, pml);
  std::vector<Port> ports;
  ports.push_back(make_port(*sys.space, kLinePortIn, -1, ms_in, CVector::Zero(3)));
  ports.push_back(make_port(*sys.space, kLinePortOut, +1, ms_out, CVector::Zero(3)));
  apply_wpbc(sys, std::move(ports), PatchMode::per_port);
  ScatterSolution sol = solve(sys);
  CHECK(sol.base.norm() == 0.0);

  // with a source, Dirichlet dofs still carry exactly zero
  CVector alpha = CVector::Zero(3);
  alpha(0) = 1.0;
  std::vector<Port> ports2;
  ports2.push_back(make_port(*sys.space, kLinePortIn, -1, ms_in, alpha));
  ports2.push_back(make_port(*sys.space, kLinePortOut, +1, ms_out, CVector::Zero(3)));
  apply_wpbc(sys, std::move(ports2), PatchMode::per_port);
  ScatterSolution sol2 = solve(sys);
  CHECK(sol2.base.norm() > 0.0);
  for (int d = 0; d < sys.n_base(); ++d)
    if (sys.space->dirichlet[d]) CHECK(sol2.base(d) == Complex(0.0));
}

TEST_CASE("solution is linear in the incident coefficients") {
  RunConfig cfg = guide_config(0.25, 2);
  auto mesh = std::make_shared<Mesh2D>(build_slab_mesh(cfg.geometry, PortLayout::wpbc));
  const ModeSet ms_in = port_mode_set(*mesh, cfg, kLinePortIn, 3, true);
  const ModeSet ms_out = port_mode_set(*mesh, cfg, kLinePortOut, 3, true);
  DomainPml pml = slab_domain_pml(cfg, PortLayout::wpbc);
  ScatterSystem sys = assemble_scatter(mesh, cfg.materials, cfg.k0(), cfg.order, pml);

  auto run = [&](const CVector& alpha) {
    std::vector<Port> ports;
    ports.push_back(make_port(*sys.space, kLinePortIn, -1, ms_in, alpha));
    ports.push_back(make_port(*sys.space, kLinePortOut, +1, ms_out, CVector::Zero(3)));
    apply_wpbc(sys, std::move(ports), PatchMode::per_port);
    return solve(sys).base;
  };
  std::mt19937 rng(5);
  std::normal_distribution<double> gauss;
  CVector a1(3), a2(3);
  for (int i = 0; i < 3; ++i) {
    a1(i) = Complex(gauss(rng), gauss(rng));
    a2(i) = Complex(gauss(rng), gauss(rng));
  }
  const CVector u1 = run(a1), u2 = run(a2), u12 = run(a1 + a2);
  CHECK((u12 - u1 - u2).norm() <= 1e-10 * u12.norm());
}

TEST_CASE("direct and gmres solves agree") {
  RunConfig cfg = guide_config(0.25, 2);
  cfg.pml.alpha_max_x = 0.0; // keep the system Hermitian
  auto mesh = std::make_shared<Mesh2D>(build_slab_mesh(cfg.geometry, PortLayout::pml_backed));
  DomainPml none;
  ScatterOptions opts;
  opts.volume_source = [](double x, double z) { return Complex(x * z, 0.5); };
  ScatterSystem sys = assemble_scatter(mesh, cfg.materials, cfg.k0(), 2, none, opts);
  ScatterSolution direct = solve(sys);
  SolveOptions gm;
  gm.method = SolveOptions::Method::gmres;
  gm.tol = 1e-12;
  gm.max_iter = 20000;
  ScatterSolution iter = solve(sys, gm);
  CHECK((direct.base - iter.base).norm() <= 1e-9 * direct.base.norm());

  // identity system returns the right-hand side
  std::vector<Eigen::Triplet<Complex>> trip;
  for (int i = 0; i < 10; ++i) trip.emplace_back(i, i, Complex(1.0, 0.0));
  ComplexSparse eye(10, 10);
  eye.setFromTriplets(trip.begin(), trip.end());
  CVector b = CVector::Random(10);
  CHECK((solve_linear(eye, b, {}) - b).norm() == 0.0);
  SolveOptions gm2;
  gm2.method = SolveOptions::Method::gmres;
  CHECK((solve_linear(eye, b, gm2) - b).norm() <= 1e-12 * b.norm());
}

TEST_CASE("singular systems produce diagnostics") {
  SUBCASE("two ports sharing a line") {
    RunConfig cfg = guide_config(0.25, 2);
    auto mesh = std::make_shared<Mesh2D>(build_slab_mesh(cfg.geometry, PortLayout::wpbc));
    const ModeSet ms = port_mode_set(*mesh, cfg, kLinePortIn, 3, true);
    DomainPml pml = slab_domain_pml(cfg, PortLayout::wpbc);
    ScatterSystem sys = assemble_scatter(mesh, cfg.materials, cfg.k0(), cfg.order, pml);
    std::vector<Port> ports;
    ports.push_back(make_port(*sys.space, kLinePortIn, -1, ms, CVector::Zero(3)));
    ports.push_back(make_port(*sys.space, kLinePortIn, -1, ms, CVector::Zero(3)));
    CHECK_THROWS_WITH_AS(apply_wpbc(sys, std::move(ports), PatchMode::per_port),
                         doctest::Contains("share dof"), NumericalError);
  }

  SUBCASE("structurally empty row is named") {
    std::vector<Eigen::Triplet<Complex>> trip;
    for (int i = 0; i < 5; ++i)
      if (i != 2) trip.emplace_back(i, i, Complex(1.0, 0.0));
    ComplexSparse bad(5, 5);
    bad.setFromTriplets(trip.begin(), trip.end());
    CHECK_THROWS_WITH_AS(solve_linear(bad, CVector::Ones(5), {}),
                         doctest::Contains("row 2"), NumericalError);
  }
}

TEST_CASE("static condensation reproduces the full solve") {
  RunConfig cfg = guide_config(0.25, 3);
  auto mesh = std::make_shared<Mesh2D>(build_slab_mesh(cfg.geometry, PortLayout::wpbc));
  const ModeSet ms_in = port_mode_set(*mesh, cfg, kLinePortIn, 3, true);
  const ModeSet ms_out = port_mode_set(*mesh, cfg, kLinePortOut, 3, true);
  DomainPml pml = slab_domain_pml(cfg, PortLayout::wpbc);
  CVector alpha = CVector::Zero(3);
  alpha(0) = 1.0;

  auto run = [&](bool condense) {
    ScatterOptions opts;
    opts.static_condensation = condense;
    ScatterSystem sys = assemble_scatter(mesh, cfg.materials, cfg.k0(), cfg.order, pml, opts);
    std::vector<Port> ports;
    ports.push_back(make_port(*sys.space, kLinePortIn, -1, ms_in, alpha));
    ports.push_back(make_port(*sys.space, kLinePortOut, +1, ms_out, CVector::Zero(3)));
    apply_wpbc(sys, std::move(ports), PatchMode::per_port);
    return solve(sys);
  };
  const ScatterSolution full = run(false);
  const ScatterSolution cond = run(true);
  CHECK((full.base - cond.base).norm() <= 1e-10 * full.base.norm());
}

TEST_CASE("threaded assembly is identical to serial") {
  RunConfig cfg = guide_config(0.25, 3);
  auto mesh = std::make_shared<Mesh2D>(build_slab_mesh(cfg.geometry, PortLayout::wpbc));
  DomainPml pml = slab_domain_pml(cfg, PortLayout::wpbc);
  ScatterOptions serial, threaded;
  threaded.threads = 4;
  ScatterSystem a = assemble_scatter(mesh, cfg.materials, cfg.k0(), cfg.order, pml, serial);
  ScatterSystem b = assemble_scatter(mesh, cfg.materials, cfg.k0(), cfg.order, pml, threaded);
  for (int t = 0; t < (int)mesh->triangles.size(); ++t)
    CHECK((a.elem_K[t] - b.elem_K[t]).cwiseAbs().maxCoeff() == 0.0);
}
