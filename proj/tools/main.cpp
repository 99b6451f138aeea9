// wgfem: batch front-end for scalar slab waveguide-port analyses.
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure,
// 3 validation assertion failure.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "wgfem/pipelines.hpp"

using namespace wgfem;

int main(int argc, char** argv) {
  CLI::App app{"scalar slab waveguide solver with waveguide-port boundary conditions"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int nmodes_in = 0, nmodes_out = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "run configuration file")->required();
    cmd->add_option("--out", out_dir, "output directory (overrides config)");
  };

  CLI::App* cmd_modal = app.add_subcommand("modal", "cross-section modal analysis");
  CLI::App* cmd_scatter = app.add_subcommand("scatter", "scattering solve with ports");
  CLI::App* cmd_validate =
      app.add_subcommand("validate", "straight-guide propagation validation");
  CLI::App* cmd_nmodes = app.add_subcommand("nmodes", "mode-count sweep");
  for (CLI::App* c : {cmd_modal, cmd_scatter, cmd_validate, cmd_nmodes}) add_common(c);
  cmd_nmodes->add_option("--nmodes-in", nmodes_in, "single input-port mode count");
  cmd_nmodes->add_option("--nmodes-out", nmodes_out, "single output-port mode count");

  CLI11_PARSE(app, argc, argv);
  const std::string sub = app.get_subcommands().front()->get_name();

  try {
    RunConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (!cfg.experiment.empty() && cfg.experiment != sub)
      throw ConfigError("config requests experiment '" + cfg.experiment +
                        "' but subcommand is '" + sub + "'");

    if (sub == "modal") {
      const ModalReport rep = run_modal(cfg);
      std::printf("modes: %d\n", rep.modes.size());
      std::printf("max off-diagonal (non-conjugated): %.6e\n", rep.max_offdiag_nonconj);
      std::printf("max off-diagonal (conjugated):     %.6e\n", rep.max_offdiag_conj);
    } else if (sub == "scatter") {
      const ScatterReport rep = run_scatter(cfg);
      std::printf("solve residual: %.3e\n", rep.residual);
      for (size_t p = 0; p < rep.amplitudes.size(); ++p) {
        std::printf("port %zu amplitudes:\n", p);
        for (int j = 0; j < rep.amplitudes[p].size(); ++j)
          std::printf("  mode %d: % .6e %+.6ej  (|.| = %.6e)\n", j + 1,
                      rep.amplitudes[p](j).real(), rep.amplitudes[p](j).imag(),
                      std::abs(rep.amplitudes[p](j)));
      }
    } else if (sub == "validate") {
      const ValidationReport rep = run_validate(cfg);
      std::printf("relative error on the evaluation line:\n");
      std::printf("  waveguide ports: %.6e  (ndof %d)\n", rep.err_wpbc, rep.ndof_wpbc);
      std::printf("  pml-backed:      %.6e  (ndof %d)\n", rep.err_pml, rep.ndof_pml);
      if (!rep.wpbc_not_worse) {
        std::fprintf(stderr, "validation assertion failed: port error is not below "
                             "the pml-backed error\n");
        return 3;
      }
    } else if (sub == "nmodes") {
      RunConfig cfg2 = cfg;
      if (nmodes_in > 0 || nmodes_out > 0)
        cfg2.nmodes_single = {nmodes_in > 0 ? nmodes_in : cfg.port_in.nmodes,
                              nmodes_out > 0 ? nmodes_out : cfg.port_out.nmodes};
      const NmodesReport rep = run_nmodes(cfg2);
      std::printf("n_in,n_out,r_in,r_out\n");
      for (const auto& row : rep.rows)
        std::printf("%d,%d,%.6e,%.6e\n", row.n_in, row.n_out, row.r_in, row.r_out);
      std::printf("validation floor: %.6e\n", rep.floor_err);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 1;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
