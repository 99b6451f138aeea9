#ifndef WGFEM_MESH_HPP
#define WGFEM_MESH_HPP

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wgfem/types.hpp"

namespace wgfem {

//! Coordinate directions in which a region is complex-stretched.
enum class PmlAxes { none, x, z, xz };

struct Region {
  std::string material;
  PmlAxes pml = PmlAxes::none;
};

// Boundary-edge tags used by the slab meshes.
inline constexpr int kBoundaryPec = 1;
inline constexpr int kBoundaryPortIn = 2;
inline constexpr int kBoundaryPortOut = 3;

// Named lines present in slab meshes (node columns of the structured grid).
inline const std::string kLinePortIn = "Gamma_in";
inline const std::string kLinePortOut = "Gamma_out";
inline const std::string kLineEvalIn = "Gamma_in_e";
inline const std::string kLineEvalOut = "Gamma_out_e";
inline const std::string kLineEvalInMirror = "Gamma_in_e_m";

//! Triangulated (x,z) domain. x is the transverse direction, z the
//! propagation direction.
struct Mesh2D {
  struct NodeXZ {
    double x, z;
  };
  struct Tri {
    std::array<int, 3> v; // positive orientation in (x,z)
    int region;
  };
  struct BEdge {
    std::array<int, 2> v;
    int tag;
  };

  std::vector<NodeXZ> nodes;
  std::vector<Tri> triangles;
  std::vector<BEdge> boundary_edges;
  std::map<int, Region> region_table;
  //! tag -> node ids of a vertical line, ordered by ascending x
  std::map<std::string, std::vector<int>> line_table;

  double signed_area(int t) const;
  double total_area() const;
};

//! Cross-section trace mesh: nodes on a vertical line, ordered in x.
struct Mesh1D {
  struct Seg {
    std::array<int, 2> v;
    int region;
  };
  std::vector<double> nodes; // strictly increasing
  std::vector<Seg> segments;
  std::map<int, Region> region_table;
};

enum class PortLayout { wpbc, pml_backed };

//! Slab geometry in micrometres. Ports sit at z = 0 and z = domain_length;
//! the optional second core starts at z_disc.
struct SlabGeometry {
  double core_width = 1.0;
  std::optional<double> core_width2;
  double z_disc = 0.0;
  double cladding_extent = 3.0;
  double pml_width_x = 1.0;
  double pml_width_z = 1.0; // used by the pml_backed layout only
  double domain_length = 2.0;
  double eval_offset = 0.0; // 0: one element column from the port
  double element_size = 0.155;

  double half_height() const;
  double resolved_eval_offset() const;
  void validate() const; // throws ConfigError
};

//! Structured triangular mesh of the slab. Port and evaluation lines fall
//! exactly on node columns; the x-coordinate set is shared by all columns.
Mesh2D build_slab_mesh(const SlabGeometry& geom, PortLayout layout);

//! 1D trace mesh of a named vertical line; region tags inherited from the
//! adjacent 2D regions (z-stretching flags dropped).
Mesh1D extract_trace(const Mesh2D& mesh, const std::string& line_tag);

// Plain-text mesh format: see README for the grammar.
void write_mesh_text(const Mesh2D& mesh, std::ostream& os);
Mesh2D read_mesh_text(std::istream& is);

//! Legacy-VTK ASCII dump of the mesh with region ids as cell data.
void write_mesh_vtk(const Mesh2D& mesh, const std::string& path);

} // namespace wgfem

#endif
