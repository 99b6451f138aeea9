#ifndef WGFEM_FEM_BASIS_HPP
#define WGFEM_FEM_BASIS_HPP

#include <array>
#include <span>
#include <vector>

#include "wgfem/types.hpp"

namespace wgfem {

enum class ElemKind { segment, triangle };

/** @brief Hierarchical H1-conforming shape functions up to order p.

    Vertex functions are the p=1 hats; edge-interior functions are
    integrated-Legendre kernels vanishing at the edge endpoints; triangle
    face functions carry the full bubble factor. The trace of a triangle
    edge block on its edge coincides pointwise with the segment basis of
    the same order, which is what makes trace-dof identification between
    a port line and its 1D trace mesh exact.

    Reference elements: segment t in [0,1]; triangle with vertices
    (0,0), (1,0), (0,1). Ordering: vertices, then edge blocks in local
    edge order ((0,1),(1,2),(2,0) for triangles), then face functions. */
struct ShapeBasis {
  ElemKind kind = ElemKind::segment;
  int order = 1;

  int dim() const { return kind == ElemKind::segment ? 1 : 2; }
  int vertex_count() const { return kind == ElemKind::segment ? 2 : 3; }
  int edge_block_count() const { return kind == ElemKind::segment ? 1 : 3; }
  int functions_per_edge() const { return order - 1; }
  int face_function_count() const {
    if (kind == ElemKind::segment) return 0;
    return (order - 1) * (order - 2) / 2;
  }
  int count() const {
    return vertex_count() + edge_block_count() * functions_per_edge() +
           face_function_count();
  }

  //! Values and reference gradients at one reference point.
  //! values: count() entries; gradients: dim()*count(), layout [f*dim + d].
  void eval(const double* ref_point, std::span<double> values,
            std::span<double> gradients) const;
};

//! Indices of all basis functions with non-vanishing restriction on the
//! given element edge (segment "edges" are its two endpoints).
std::vector<int> trace_dofs(const ShapeBasis& basis, int edge_index);

struct QuadRule {
  std::vector<std::array<double, 2>> points;
  std::vector<double> weights;
  int degree = 0;

  int size() const { return (int)weights.size(); }
};

//! Gauss-Legendre rule on [0,1], exact for polynomials of the given degree.
QuadRule quad_segment(int degree);
//! Collapsed-coordinate Gauss rule on the reference triangle.
QuadRule quad_triangle(int degree);

//! Basis values tabulated at the points of a rule (computed once per
//! (kind, p, rule), reused across elements).
struct BasisTable {
  ShapeBasis basis;
  QuadRule rule;
  RMatrix values; // nq x nfun
  RMatrix grad_x; // nq x nfun
  RMatrix grad_y; // nq x nfun (triangles; unused for segments)
};

BasisTable tabulate(const ShapeBasis& basis, const QuadRule& rule);

} // namespace wgfem

#endif
