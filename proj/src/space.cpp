#include "wgfem/space.hpp"

#include <algorithm>
#include <set>

namespace wgfem {

H1Space1D::H1Space1D(std::shared_ptr<const Mesh1D> m, int p) : mesh(std::move(m)), order(p) {
  if (order < 1) throw ConfigError("H1Space1D: order must be >= 1");
  const int nn = (int)mesh->nodes.size();
  const int ns = (int)mesh->segments.size();
  if (nn < 2 || ns < 1) throw ConfigError("H1Space1D: empty mesh");
  n_dofs = nn + ns * (order - 1);
  free_index.assign(n_dofs, -1);
  // PEC at the two ends of the cross section
  for (int d = 0; d < n_dofs; ++d) {
    if (d == 0 || d == nn - 1) continue;
    free_index[d] = (int)free_dofs.size();
    free_dofs.push_back(d);
  }
}

void H1Space1D::element_dofs(int seg, std::vector<int>& dofs) const {
  const auto& s = mesh->segments[seg];
  dofs.clear();
  dofs.push_back(node_dof(s.v[0]));
  dofs.push_back(node_dof(s.v[1]));
  for (int k = 0; k < order - 1; ++k) dofs.push_back(seg_dof(seg, k));
}

H1Space2D::H1Space2D(std::shared_ptr<const Mesh2D> m, int p) : mesh(std::move(m)), order(p) {
  if (order < 1) throw ConfigError("H1Space2D: order must be >= 1");
  const int nt = (int)mesh->triangles.size();
  if (nt == 0) throw ConfigError("H1Space2D: empty mesh");

  std::map<std::pair<int, int>, int> edge_ids;
  tri_edges.resize(nt);
  tri_edge_flip.resize(nt);
  static const int loc[3][2] = {{0, 1}, {1, 2}, {2, 0}};
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh->triangles[t].v;
    for (int e = 0; e < 3; ++e) {
      int a = tri[loc[e][0]], b = tri[loc[e][1]];
      const bool flip = a > b;
      if (flip) std::swap(a, b);
      auto it = edge_ids.find({a, b});
      if (it == edge_ids.end()) {
        it = edge_ids.emplace(std::make_pair(a, b), (int)edges.size()).first;
        edges.push_back({a, b});
      }
      tri_edges[t][e] = it->second;
      tri_edge_flip[t][e] = flip;
    }
  }

  const int nn = (int)mesh->nodes.size();
  const int ne = (int)edges.size();
  n_dofs = nn + ne * (order - 1) + nt * n_face_functions();
  dirichlet.assign(n_dofs, 0);

  for (const auto& be : mesh->boundary_edges) {
    if (be.tag != kBoundaryPec) continue;
    int a = be.v[0], b = be.v[1];
    dirichlet[node_dof(a)] = 1;
    dirichlet[node_dof(b)] = 1;
    if (a > b) std::swap(a, b);
    auto it = edge_ids.find({a, b});
    if (it == edge_ids.end())
      throw ConfigError("H1Space2D: boundary edge is not a mesh edge");
    for (int k = 0; k < order - 1; ++k) dirichlet[edge_dof(it->second, k)] = 1;
  }
}

void H1Space2D::element_dofs(int t, std::vector<int>& dofs,
                             std::vector<double>& signs) const {
  const auto& tri = mesh->triangles[t].v;
  dofs.clear();
  signs.clear();
  for (int a = 0; a < 3; ++a) {
    dofs.push_back(node_dof(tri[a]));
    signs.push_back(1.0);
  }
  for (int e = 0; e < 3; ++e) {
    const int ge = tri_edges[t][e];
    const bool flip = tri_edge_flip[t][e];
    for (int k = 0; k < order - 1; ++k) {
      dofs.push_back(edge_dof(ge, k));
      signs.push_back(flip && (k % 2 == 1) ? -1.0 : 1.0);
    }
  }
  for (int k = 0; k < n_face_functions(); ++k) {
    dofs.push_back(face_dof(t, k));
    signs.push_back(1.0);
  }
}

std::vector<TraceLink> H1Space2D::line_trace(const std::string& tag,
                                             const H1Space1D& s1) const {
  auto it = mesh->line_table.find(tag);
  if (it == mesh->line_table.end())
    throw ConfigError("line_trace: unknown line tag '" + tag + "'");
  const auto& ids = it->second;
  if ((int)ids.size() != (int)s1.mesh->nodes.size())
    throw ConfigError("line_trace: 1D space does not match the line '" + tag + "'");
  if (s1.order != order)
    throw ConfigError("line_trace: trace order mismatch");

  std::map<std::pair<int, int>, int> edge_ids;
  for (int e = 0; e < (int)edges.size(); ++e)
    edge_ids[{edges[e].a, edges[e].b}] = e;

  std::vector<TraceLink> links;
  // nodes: 1D node i <-> 2D node ids[i]; end nodes are Dirichlet in both
  for (size_t i = 0; i < ids.size(); ++i) {
    const int f1 = s1.free_index[s1.node_dof((int)i)];
    if (f1 < 0) continue;
    links.push_back({node_dof(ids[i]), f1, 1.0});
  }
  // segments: 1D runs in ascending x; the 2D edge runs lower->higher node id
  for (size_t i = 0; i + 1 < ids.size(); ++i) {
    int a = ids[i], b = ids[i + 1];
    const bool flip = a > b; // 2D global direction opposite to ascending x
    if (flip) std::swap(a, b);
    auto jt = edge_ids.find({a, b});
    if (jt == edge_ids.end())
      throw ConfigError("line_trace: line segment is not a mesh edge");
    for (int k = 0; k < order - 1; ++k) {
      const int f1 = s1.free_index[s1.seg_dof((int)i, k)];
      if (f1 < 0) continue;
      const double sign = flip && (k % 2 == 1) ? -1.0 : 1.0;
      links.push_back({edge_dof(jt->second, k), f1, sign});
    }
  }
  return links;
}

std::vector<int> H1Space2D::line_adjacent_triangles(const std::string& tag) const {
  auto it = mesh->line_table.find(tag);
  if (it == mesh->line_table.end())
    throw ConfigError("line_adjacent_triangles: unknown line tag '" + tag + "'");
  std::set<int> line_nodes(it->second.begin(), it->second.end());
  std::vector<int> out;
  for (int t = 0; t < (int)mesh->triangles.size(); ++t) {
    const auto& tri = mesh->triangles[t].v;
    if (line_nodes.count(tri[0]) || line_nodes.count(tri[1]) || line_nodes.count(tri[2]))
      out.push_back(t);
  }
  return out;
}

} // namespace wgfem
