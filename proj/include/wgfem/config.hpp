#ifndef WGFEM_CONFIG_HPP
#define WGFEM_CONFIG_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wgfem/modal1d.hpp"

namespace wgfem {

/** @brief One batch run, parsed from a flat [section] key = value file.

    See README for the grammar and the full key list. */
struct RunConfig {
  std::string experiment; // modal | scatter | validate | nmodes (optional)
  double wavelength = 1.55;
  int order = 4;
  int threads = 1;
  std::string output_dir = "out";

  SlabGeometry geometry;
  MaterialMap materials = {{"core", 2.5}, {"cladding", 1.5}};

  struct PmlBlock {
    double m = 2.0;
    double R = 1e-70;
    double width_x = 1.0;
    double width_z = 1.0;
    std::optional<double> alpha_max_x;
    std::optional<double> alpha_max_z;
  } pml;

  struct PortBlock {
    int nmodes = 10;
    std::vector<std::pair<int, Complex>> incident; // 1-based mode index
  };
  PortBlock port_in, port_out;

  struct ModalBlock {
    int nmodes = 20;
    std::optional<Complex> target;
    EigenSolverKind solver = EigenSolverKind::automatic;
  } modal;

  std::vector<int> nmodes_grid = {3, 10, 30, 100, -1}; // -1: full basis
  std::optional<std::pair<int, int>> nmodes_single;    // one (n_in, n_out) cell

  double k0() const { return 2.0 * M_PI / wavelength; }
  //! Incident coefficient vector of a port for a given mode count.
  CVector incident_vector(const PortBlock& port, int n_modes) const;
};

RunConfig parse_config(std::istream& is, const std::string& name = "<config>");
RunConfig load_config(const std::string& path);

} // namespace wgfem

#endif
