#ifndef WGFEM_SPACE_HPP
#define WGFEM_SPACE_HPP

#include <map>
#include <memory>
#include <vector>

#include "wgfem/fem_basis.hpp"
#include "wgfem/mesh.hpp"

namespace wgfem {

/** @brief H1-conforming space on a 1D trace mesh.

    Homogeneous Dirichlet (PEC) conditions at the two end nodes are
    eliminated: system vectors and matrices run over free dofs only. */
struct H1Space1D {
  std::shared_ptr<const Mesh1D> mesh;
  int order;
  int n_dofs;                  // including the two Dirichlet end dofs
  std::vector<int> free_index; // dof -> free index, -1 if Dirichlet
  std::vector<int> free_dofs;  // free index -> dof

  H1Space1D(std::shared_ptr<const Mesh1D> m, int p);

  int n_free() const { return (int)free_dofs.size(); }
  int node_dof(int node) const { return node; }
  int seg_dof(int seg, int k) const {
    return (int)mesh->nodes.size() + seg * (order - 1) + k;
  }
  //! Local dof ids of a segment: v0, v1, interior k = 0..p-2.
  void element_dofs(int seg, std::vector<int>& dofs) const;
};

//! Identification of one 2D trace dof with a 1D free dof. `sign` is the
//! edge-orientation factor between the global 2D function and the 1D one.
struct TraceLink {
  int dof2d;
  int free1d;
  double sign;
};

/** @brief H1-conforming space on a 2D mesh.

    Global edge direction runs from the lower to the higher node id; local
    edge functions of odd kernel degree flip sign when the element edge
    disagrees. Dirichlet dofs (nodes and edges on PEC-tagged boundary
    edges) are kept in the numbering and flagged. */
struct H1Space2D {
  std::shared_ptr<const Mesh2D> mesh;
  int order;

  struct Edge {
    int a, b; // a < b
  };
  std::vector<Edge> edges;
  std::vector<std::array<int, 3>> tri_edges;
  std::vector<std::array<bool, 3>> tri_edge_flip;
  int n_dofs = 0;
  std::vector<char> dirichlet;

  H1Space2D(std::shared_ptr<const Mesh2D> m, int p);

  int node_dof(int n) const { return n; }
  int edge_dof(int e, int k) const {
    return (int)mesh->nodes.size() + e * (order - 1) + k;
  }
  int face_dof(int t, int k) const {
    ShapeBasis b{ElemKind::triangle, order};
    return (int)mesh->nodes.size() + (int)edges.size() * (order - 1) +
           t * b.face_function_count() + k;
  }
  int n_face_functions() const {
    return ShapeBasis{ElemKind::triangle, order}.face_function_count();
  }

  //! Global dof ids and orientation signs of one triangle, in basis order.
  void element_dofs(int t, std::vector<int>& dofs, std::vector<double>& signs) const;

  //! Free (non-Dirichlet) dofs supported on a named line, matched against
  //! the space built on extract_trace() of that line.
  std::vector<TraceLink> line_trace(const std::string& tag, const H1Space1D& s1) const;

  //! Triangles owning at least one dof of the given line.
  std::vector<int> line_adjacent_triangles(const std::string& tag) const;
};

} // namespace wgfem

#endif
