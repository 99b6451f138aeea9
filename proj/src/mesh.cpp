#include "wgfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace wgfem {

double Mesh2D::signed_area(int t) const {
  const auto& tri = triangles[t];
  const auto& a = nodes[tri.v[0]];
  const auto& b = nodes[tri.v[1]];
  const auto& c = nodes[tri.v[2]];
  return 0.5 * ((b.x - a.x) * (c.z - a.z) - (c.x - a.x) * (b.z - a.z));
}

double Mesh2D::total_area() const {
  double s = 0;
  for (int t = 0; t < (int)triangles.size(); ++t) s += signed_area(t);
  return s;
}

double SlabGeometry::half_height() const {
  const double w = core_width2 ? std::max(core_width, *core_width2) : core_width;
  return 0.5 * w + cladding_extent + pml_width_x;
}

double SlabGeometry::resolved_eval_offset() const {
  return eval_offset > 0 ? eval_offset : element_size;
}

void SlabGeometry::validate() const {
  if (core_width <= 0) throw ConfigError("slab geometry: core_width must be > 0");
  if (core_width2 && *core_width2 <= 0)
    throw ConfigError("slab geometry: core_width2 must be > 0");
  if (cladding_extent <= 0)
    throw ConfigError("slab geometry: cladding_extent must be > 0");
  if (pml_width_x <= 0) throw ConfigError("slab geometry: pml_width_x must be > 0");
  if (domain_length <= 0)
    throw ConfigError("slab geometry: domain_length must be > 0");
  if (element_size <= 0)
    throw ConfigError("slab geometry: element_size must be > 0");
  const double d = resolved_eval_offset();
  if (d <= 0 || 2 * d >= domain_length)
    throw ConfigError("slab geometry: eval_offset must lie in (0, L/2)");
  if (core_width2) {
    if (z_disc <= 0 || z_disc >= domain_length)
      throw ConfigError("slab geometry: z_disc must lie inside (0, L)");
  }
}

namespace {

constexpr double kCoordTol = 1e-12;

// Subdivide the span [a,b] into n = round(len/h) intervals. Rejects spans
// whose nearest subdivision deviates from the target size by more than 50%.
void subdivide(double a, double b, double h, std::vector<double>& out) {
  const double len = b - a;
  int n = (int)std::llround(len / h);
  if (n < 1) n = 1;
  const double actual = len / n;
  if (actual < 0.5 * h || actual > 1.5 * h) {
    std::ostringstream msg;
    msg << "element size " << h << " incompatible with line offsets: span ["
        << a << ", " << b << "] of length " << len
        << " cannot be subdivided near the target size";
    throw ConfigError(msg.str());
  }
  for (int i = 1; i <= n; ++i) out.push_back(a + len * i / n);
}

std::vector<double> grade_axis(const std::vector<double>& breaks, double h) {
  std::vector<double> sorted(breaks);
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end(),
                           [](double a, double b) { return std::abs(a - b) < kCoordTol; }),
               sorted.end());
  std::vector<double> out;
  out.push_back(sorted.front());
  for (size_t i = 0; i + 1 < sorted.size(); ++i)
    subdivide(sorted[i], sorted[i + 1], h, out);
  return out;
}

struct RegionKey {
  std::string material;
  PmlAxes pml;
  bool operator<(const RegionKey& o) const {
    if (material != o.material) return material < o.material;
    return (int)pml < (int)o.pml;
  }
};

} // namespace

Mesh2D build_slab_mesh(const SlabGeometry& geom, PortLayout layout) {
  geom.validate();
  const double h = geom.element_size;
  const double hh = geom.half_height();
  const double d = geom.resolved_eval_offset();
  const double L = geom.domain_length;
  const bool backed = layout == PortLayout::pml_backed;
  if (backed && geom.pml_width_z <= 0)
    throw ConfigError("slab geometry: pml_width_z must be > 0 for the PML-backed layout");
  if (backed && d >= geom.pml_width_z)
    throw ConfigError("slab geometry: eval_offset must be smaller than pml_width_z");

  std::vector<double> xb = {-hh, -(hh - geom.pml_width_x), -0.5 * geom.core_width,
                            0.5 * geom.core_width, hh - geom.pml_width_x, hh};
  if (geom.core_width2) {
    xb.push_back(-0.5 * *geom.core_width2);
    xb.push_back(0.5 * *geom.core_width2);
  }
  std::vector<double> zb = {0.0, d, L - d, L};
  if (geom.core_width2) zb.push_back(geom.z_disc);
  if (backed) {
    // the z strips begin one evaluation offset beyond the ports so that
    // both evaluation lines sit in unstretched material
    zb.push_back(-d - geom.pml_width_z);
    zb.push_back(L + d + geom.pml_width_z);
    zb.push_back(-d); // mirror evaluation line for the current-plane source
    zb.push_back(L + d);
  }

  const std::vector<double> xs = grade_axis(xb, h);
  const std::vector<double> zs = grade_axis(zb, h);
  const int nx = (int)xs.size();
  const int nz = (int)zs.size();

  Mesh2D mesh;
  mesh.nodes.resize((size_t)nx * nz);
  // node id = ix*nz + iz: node ids grow with x along any fixed-z column
  for (int ix = 0; ix < nx; ++ix)
    for (int iz = 0; iz < nz; ++iz) mesh.nodes[(size_t)ix * nz + iz] = {xs[ix], zs[iz]};
  auto nid = [nz](int ix, int iz) { return ix * nz + iz; };

  std::map<RegionKey, int> region_ids;
  auto region_of = [&](double xc, double zc) {
    const double w =
        (geom.core_width2 && zc > geom.z_disc) ? *geom.core_width2 : geom.core_width;
    RegionKey key;
    if (std::abs(xc) < 0.5 * w)
      key.material = (geom.core_width2 && zc > geom.z_disc) ? "core2" : "core";
    else
      key.material = "cladding";
    const bool px = std::abs(xc) > hh - geom.pml_width_x;
    const double dz_off = geom.resolved_eval_offset();
    const bool pz = backed && (zc < -dz_off || zc > L + dz_off);
    key.pml = px ? (pz ? PmlAxes::xz : PmlAxes::x) : (pz ? PmlAxes::z : PmlAxes::none);
    auto it = region_ids.find(key);
    if (it == region_ids.end()) {
      const int id = (int)region_ids.size() + 1;
      it = region_ids.emplace(key, id).first;
      mesh.region_table[id] = Region{key.material, key.pml};
    }
    return it->second;
  };

  mesh.triangles.reserve((size_t)2 * (nx - 1) * (nz - 1));
  for (int ix = 0; ix + 1 < nx; ++ix) {
    for (int iz = 0; iz + 1 < nz; ++iz) {
      const int n00 = nid(ix, iz), n10 = nid(ix + 1, iz);
      const int n01 = nid(ix, iz + 1), n11 = nid(ix + 1, iz + 1);
      const double zc = 0.5 * (zs[iz] + zs[iz + 1]);
      const int reg = region_of(0.5 * (xs[ix] + xs[ix + 1]), zc);
      // cells behind the input port split along the mirrored diagonal, so
      // the discretization is exactly z-mirror-symmetric about the source
      // plane of the PML-backed layout
      if (zc >= 0) {
        mesh.triangles.push_back({{n00, n11, n01}, reg});
        mesh.triangles.push_back({{n00, n10, n11}, reg});
      } else {
        mesh.triangles.push_back({{n00, n10, n01}, reg});
        mesh.triangles.push_back({{n10, n11, n01}, reg});
      }
    }
  }

  const double z_lo = zs.front(), z_hi = zs.back();
  auto btag = [&](double zc, bool along_z) {
    if (along_z) return kBoundaryPec; // x = +-hh walls
    if (!backed && std::abs(zc - 0.0) < kCoordTol) return kBoundaryPortIn;
    if (!backed && std::abs(zc - L) < kCoordTol) return kBoundaryPortOut;
    return kBoundaryPec;
  };
  for (int iz = 0; iz + 1 < nz; ++iz) {
    mesh.boundary_edges.push_back({{nid(0, iz), nid(0, iz + 1)}, btag(0, true)});
    mesh.boundary_edges.push_back({{nid(nx - 1, iz), nid(nx - 1, iz + 1)}, btag(0, true)});
  }
  for (int ix = 0; ix + 1 < nx; ++ix) {
    mesh.boundary_edges.push_back({{nid(ix, 0), nid(ix + 1, 0)}, btag(z_lo, false)});
    mesh.boundary_edges.push_back(
        {{nid(ix, nz - 1), nid(ix + 1, nz - 1)}, btag(z_hi, false)});
  }

  auto add_line = [&](const std::string& tag, double z) {
    int iz = -1;
    for (int i = 0; i < nz; ++i)
      if (std::abs(zs[i] - z) < kCoordTol) iz = i;
    if (iz < 0) throw ConfigError("internal: line coordinate missing from grid");
    std::vector<int> ids(nx);
    for (int ix = 0; ix < nx; ++ix) ids[ix] = nid(ix, iz);
    mesh.line_table[tag] = std::move(ids);
  };
  add_line(kLinePortIn, 0.0);
  add_line(kLinePortOut, L);
  add_line(kLineEvalIn, d);
  add_line(kLineEvalOut, L - d);
  if (backed) add_line(kLineEvalInMirror, -d);

  return mesh;
}

Mesh1D extract_trace(const Mesh2D& mesh, const std::string& line_tag) {
  auto it = mesh.line_table.find(line_tag);
  if (it == mesh.line_table.end())
    throw ConfigError("extract_trace: unknown line tag '" + line_tag + "'");
  const auto& ids = it->second;
  if (ids.size() < 2) throw ConfigError("extract_trace: degenerate line");

  Mesh1D out;
  out.nodes.resize(ids.size());
  const double z_line = mesh.nodes[ids[0]].z;
  for (size_t i = 0; i < ids.size(); ++i) out.nodes[i] = mesh.nodes[ids[i]].x;

  // adjacent region per segment: prefer the +z side triangle
  std::map<std::pair<int, int>, std::vector<int>> edge_tris;
  for (int t = 0; t < (int)mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t].v;
    for (int e = 0; e < 3; ++e) {
      int a = tri[e], b = tri[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      edge_tris[{a, b}].push_back(t);
    }
  }

  std::map<int, int> region_map; // 2D region id -> 1D region id
  out.segments.reserve(ids.size() - 1);
  for (size_t i = 0; i + 1 < ids.size(); ++i) {
    int a = ids[i], b = ids[i + 1];
    if (a > b) std::swap(a, b);
    auto jt = edge_tris.find({a, b});
    if (jt == edge_tris.end() || jt->second.empty())
      throw ConfigError("extract_trace: line segment is not a mesh edge");
    int chosen = jt->second.front();
    for (int t : jt->second) {
      const auto& tri = mesh.triangles[t].v;
      double zc = (mesh.nodes[tri[0]].z + mesh.nodes[tri[1]].z + mesh.nodes[tri[2]].z) / 3.0;
      if (zc > z_line) chosen = t;
    }
    const int reg2d = mesh.triangles[chosen].region;
    auto rt = region_map.find(reg2d);
    if (rt == region_map.end()) {
      const Region& r2 = mesh.region_table.at(reg2d);
      Region r1 = r2;
      // a cross-section trace keeps only the transverse stretching
      r1.pml = (r2.pml == PmlAxes::x || r2.pml == PmlAxes::xz) ? PmlAxes::x : PmlAxes::none;
      const int id1 = (int)region_map.size() + 1;
      rt = region_map.emplace(reg2d, id1).first;
      out.region_table[id1] = r1;
    }
    out.segments.push_back({{(int)i, (int)(i + 1)}, rt->second});
  }
  return out;
}

void write_mesh_text(const Mesh2D& mesh, std::ostream& os) {
  char buf[128];
  os << mesh.nodes.size() << " " << mesh.triangles.size() << " "
     << mesh.boundary_edges.size() << "\n";
  for (size_t i = 0; i < mesh.nodes.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu %.17g %.17g\n", i, mesh.nodes[i].x,
                  mesh.nodes[i].z);
    os << buf;
  }
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    os << t << " " << tri.v[0] << " " << tri.v[1] << " " << tri.v[2] << " "
       << tri.region << "\n";
  }
  for (size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
    const auto& be = mesh.boundary_edges[e];
    os << e << " " << be.v[0] << " " << be.v[1] << " " << be.tag << "\n";
  }
}

Mesh2D read_mesh_text(std::istream& is) {
  Mesh2D mesh;
  size_t nn = 0, nt = 0, ne = 0;
  if (!(is >> nn >> nt >> ne)) throw ConfigError("mesh text: bad header");
  mesh.nodes.resize(nn);
  for (size_t i = 0; i < nn; ++i) {
    size_t id;
    double x, z;
    if (!(is >> id >> x >> z) || id >= nn) throw ConfigError("mesh text: bad node line");
    mesh.nodes[id] = {x, z};
  }
  mesh.triangles.resize(nt);
  std::map<int, Region> regions;
  for (size_t t = 0; t < nt; ++t) {
    size_t id;
    int a, b, c, tag;
    if (!(is >> id >> a >> b >> c >> tag) || id >= nt)
      throw ConfigError("mesh text: bad triangle line");
    mesh.triangles[id] = {{a, b, c}, tag};
    if (!regions.count(tag)) regions[tag] = Region{"region" + std::to_string(tag)};
  }
  mesh.region_table = std::move(regions);
  mesh.boundary_edges.resize(ne);
  for (size_t e = 0; e < ne; ++e) {
    size_t id;
    int a, b, tag;
    if (!(is >> id >> a >> b >> tag) || id >= ne)
      throw ConfigError("mesh text: bad edge line");
    mesh.boundary_edges[id] = {{a, b}, tag};
  }
  return mesh;
}

void write_mesh_vtk(const Mesh2D& mesh, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  char buf[128];
  os << "# vtk DataFile Version 3.0\n";
  os << "wgfem mesh\n";
  os << "ASCII\n";
  os << "DATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.nodes.size() << " double\n";
  for (const auto& n : mesh.nodes) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g 0\n", n.x, n.z);
    os << buf;
  }
  os << "CELLS " << mesh.triangles.size() << " " << 4 * mesh.triangles.size() << "\n";
  for (const auto& t : mesh.triangles)
    os << "3 " << t.v[0] << " " << t.v[1] << " " << t.v[2] << "\n";
  os << "CELL_TYPES " << mesh.triangles.size() << "\n";
  for (size_t i = 0; i < mesh.triangles.size(); ++i) os << "5\n";
  os << "CELL_DATA " << mesh.triangles.size() << "\n";
  os << "SCALARS region int 1\nLOOKUP_TABLE default\n";
  for (const auto& t : mesh.triangles) os << t.region << "\n";
}

bool pattern_symmetric(const ComplexSparse& m) {
  if (m.rows() != m.cols()) return false;
  ComplexSparseCol a = m, at = m.transpose();
  a.prune([](int, int, const Complex&) { return true; });
  at.prune([](int, int, const Complex&) { return true; });
  if (a.nonZeros() != at.nonZeros()) return false;
  for (int k = 0; k < a.outerSize(); ++k) {
    ComplexSparseCol::InnerIterator ia(a, k), ib(at, k);
    for (; ia && ib; ++ia, ++ib)
      if (ia.row() != ib.row()) return false;
    if (ia || ib) return false;
  }
  return true;
}

void recompress(ComplexSparse& m) {
  m.prune([](int, int, const Complex& v) { return v != Complex(0.0, 0.0); });
}

bool same_pattern(const ComplexSparse& a, const ComplexSparse& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  if (a.nonZeros() != b.nonZeros()) return false;
  for (int k = 0; k < a.outerSize(); ++k) {
    ComplexSparse::InnerIterator ia(a, k), ib(b, k);
    for (; ia && ib; ++ia, ++ib)
      if (ia.col() != ib.col()) return false;
    if (ia || ib) return false;
  }
  return true;
}

} // namespace wgfem
