#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "wgfem/pipelines.hpp"

using namespace wgfem;

namespace {

RunConfig parse(const std::string& text) {
  std::stringstream ss(text);
  return parse_config(ss, "test");
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

} // namespace

TEST_CASE("full configuration parse") {
  const RunConfig cfg = parse(R"(
# validation setup
[run]
experiment = validate
wavelength = 1.55
order = 4
threads = 2
output_dir = out_test

[geometry]
core_width = 1.0
cladding_extent = 3.0
domain_length = 2.0
element_size = 0.155

[materials]
core = 2.5
cladding = 1.5

[pml]
m = 2
R = 1e-70
width_x = 1.0
width_z = 1.0

[ports]
in.nmodes = 10
in.incident = 1:0.5, 2:2, 3:2.5
out.nmodes = 10

[modal]
nmodes = 50
solver = dense
)");
  CHECK(cfg.experiment == "validate");
  CHECK(cfg.wavelength == 1.55);
  CHECK(cfg.order == 4);
  CHECK(cfg.threads == 2);
  CHECK(cfg.output_dir == "out_test");
  CHECK(cfg.geometry.core_width == 1.0);
  CHECK(cfg.geometry.pml_width_x == 1.0); // copied from the pml block
  CHECK(cfg.materials.at("core") == Complex(2.5, 0.0));
  CHECK(cfg.port_in.nmodes == 10);
  REQUIRE(cfg.port_in.incident.size() == 3);
  CHECK(cfg.port_in.incident[1].first == 2);
  CHECK(cfg.port_in.incident[1].second == Complex(2.0, 0.0));
  CHECK(cfg.modal.nmodes == 50);
  CHECK(cfg.modal.solver == EigenSolverKind::dense);
  CHECK(cfg.k0() == doctest::Approx(2 * M_PI / 1.55));

  const CVector alpha = cfg.incident_vector(cfg.port_in, 10);
  CHECK(alpha(0) == Complex(0.5, 0.0));
  CHECK(alpha(2) == Complex(2.5, 0.0));
  CHECK(alpha(3) == Complex(0.0, 0.0));
}

TEST_CASE("defaults apply when sections are omitted") {
  const RunConfig cfg = parse("[run]\nwavelength = 1.3\n");
  CHECK(cfg.order == 4);
  CHECK(cfg.materials.at("core") == Complex(2.5, 0.0));
  CHECK(cfg.materials.at("cladding") == Complex(1.5, 0.0));
  CHECK(cfg.pml.R == 1e-70);
  CHECK(cfg.nmodes_grid.size() == 5);
  CHECK(cfg.nmodes_grid.back() == -1);
}

TEST_CASE("complex amplitudes and the full keyword") {
  const RunConfig cfg = parse(R"(
[ports]
in.incident = 1:(0.5,-0.25) 3:1.5
[nmodes]
grid = 3, 10, full
)");
  REQUIRE(cfg.port_in.incident.size() == 2);
  CHECK(cfg.port_in.incident[0].second == Complex(0.5, -0.25));
  CHECK(cfg.port_in.incident[1].first == 3);
  REQUIRE(cfg.nmodes_grid.size() == 3);
  CHECK(cfg.nmodes_grid[2] == -1);
}

TEST_CASE("configuration errors carry context") {
  CHECK_THROWS_WITH_AS(parse("[run]\nbogus = 1\n"), doctest::Contains("unknown key"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse("[nope]\nx = 1\n"), doctest::Contains("unknown section"),
                       ConfigError);
  CHECK_THROWS_AS(parse("[run]\nwavelength == 1\n"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("[run]\nwavelength = fast\n"), doctest::Contains("number"),
                       ConfigError);
  // an explicit materials section must cover the required names
  CHECK_THROWS_WITH_AS(parse("[materials]\ncore = 2.5\n"), doctest::Contains("cladding"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse("[ports]\nin.incident = 0:1\n"), doctest::Contains("1-based"),
                       ConfigError);
  CHECK_THROWS_AS(parse("[geometry]\nelement_size = -1\n"), ConfigError);
  CHECK_THROWS_AS(load_config("definitely_missing.cfg"), ConfigError);

  const RunConfig cfg = parse("[ports]\nin.incident = 1:1\n");
  CHECK_THROWS_WITH_AS(cfg.incident_vector(cfg.port_in, 0), doctest::Contains("exceeds"),
                       ConfigError);
}

TEST_CASE("validate pipeline preconditions") {
  RunConfig cfg = parse("[ports]\nin.incident = 1:1\n");
  cfg.geometry.core_width2 = 1.5;
  cfg.geometry.z_disc = 1.0;
  CHECK_THROWS_WITH_AS(run_validate(cfg, false), doctest::Contains("straight"), ConfigError);

  RunConfig no_inc = parse("[run]\norder = 2\n");
  CHECK_THROWS_WITH_AS(run_validate(no_inc, false), doctest::Contains("undefined"),
                       ConfigError);

  RunConfig straight = parse("[ports]\nin.incident = 1:1\n");
  CHECK_THROWS_WITH_AS(run_nmodes(straight, false), doctest::Contains("core_width2"),
                       ConfigError);
}

TEST_CASE("identical configs produce bitwise-identical outputs") {
  RunConfig cfg = parse(R"(
[run]
order = 2
[geometry]
core_width = 1.0
cladding_extent = 1.2
domain_length = 1.0
element_size = 0.25
[pml]
width_x = 0.8
width_z = 0.8
[modal]
nmodes = 6
)");
  cfg.output_dir = "det_a";
  run_modal(cfg);
  cfg.output_dir = "det_b";
  run_modal(cfg);
  CHECK(slurp("det_a/modes.csv") == slurp("det_b/modes.csv"));
  CHECK(!slurp("det_a/modes.csv").empty());
  CHECK(slurp("det_a/biorthogonality.csv") == slurp("det_b/biorthogonality.csv"));
  std::filesystem::remove_all("det_a");
  std::filesystem::remove_all("det_b");
}
