#include <cstdio>
#include <fstream>
#include <string>

#include "CLI11.hpp"
#include "../src/cli.hpp"

namespace {

/// Pre-scan for a --name value so config/manifest can seed the option
/// defaults before CLI11 binds and parses (flag precedence: explicit flags
/// and DSLT_* environment variables beat config/manifest values, which beat
/// built-in defaults).
std::string scan_flag(int argc, char** argv, const std::string& name) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == name && i + 1 < argc) return argv[i + 1];
    if (arg.rfind(name + "=", 0) == 0) return arg.substr(name.size() + 1);
  }
  return {};
}

void add_common_options(CLI::App* sub, dslt::cli::CommonOptions& opt,
                        std::string& config_path, std::string& manifest_path) {
  sub->add_option("--hurst", opt.hurst, "Hurst parameter H in (0,1)")
      ->envname("DSLT_HURST");
  sub->add_option("--horizon", opt.horizon, "Time horizon T > 0")
      ->envname("DSLT_HORIZON");
  sub->add_option("--steps", opt.steps, "Grid steps n (default 2048)")
      ->envname("DSLT_STEPS");
  sub->add_option("--paths", opt.paths, "Number of Monte Carlo paths")
      ->envname("DSLT_PATHS");
  sub->add_option("--eps", opt.eps,
                  "Kernel width eps (repeatable; default 1e-1 1e-2 1e-3)");
  sub->add_option("--seed", opt.seed, "Master seed (one RNG stream per path)")
      ->envname("DSLT_SEED");
  sub->add_option("--method", opt.method, "Sampler: circulant | cholesky")
      ->envname("DSLT_METHOD");
  sub->add_option("--workers", opt.workers,
                  "Worker threads (never changes results)")
      ->envname("DSLT_WORKERS");
  sub->add_option("--out-dir", opt.out_dir, "Output directory")
      ->envname("DSLT_OUT_DIR");
  sub->add_option("--format", opt.format, "Output format: json | csv")
      ->envname("DSLT_FORMAT");
  sub->add_flag("--plot", opt.plot, "Also write an SVG variance plot");
  sub->add_flag("--allow-coarse-grid", opt.allow_coarse_grid,
                "Waive the dt <= sqrt(eps) resolution requirement");
  sub->add_option("--variance-rel-tol", opt.variance_rel_tol,
                  "Variance window half-width r: accept in [1-r, 1/(1-r)]");
  sub->add_option("--normality-alpha", opt.normality_alpha,
                  "KS/JB p-value acceptance threshold");
  sub->add_option("--cauchy-decrease-factor", opt.cauchy_decrease_factor,
                  "Required shrink factor for successive CRN L2 differences");
  sub->add_option("--config", config_path, "JSON config file (flags override it)");
  sub->add_option("--from-manifest", manifest_path,
                  "Replay a previous run from its manifest");
}

}  // namespace

int main(int argc, char** argv) {
  using dslt::cli::CommonOptions;
  CommonOptions opt;
  std::string config_path = scan_flag(argc, argv, "--config");
  std::string manifest_path = scan_flag(argc, argv, "--from-manifest");
  std::string manifest_command;
  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw dslt::domain_error("cannot read config " + config_path);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw dslt::domain_error("malformed config " + config_path + ": " + e.what());
      }
      opt = dslt::cli::options_from_json(j);
    }
    if (!manifest_path.empty())
      opt = dslt::cli::load_manifest(manifest_path, manifest_command);
  } catch (const dslt::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  CLI::App app{"Simulation and numerical verification toolkit for the derivative of "
               "self-intersection local time of fractional Brownian motion"};
  app.set_version_flag("--version", std::string("dslt ") + dslt::cli::tool_version);
  app.require_subcommand(1);

  CLI::App* sim = app.add_subcommand("simulate", "Sample fBm paths and dump them");
  add_common_options(sim, opt, config_path, manifest_path);
  CLI::App* est = app.add_subcommand(
      "estimate", "Per-path alpha_eps and chaos-projection estimates");
  add_common_options(est, opt, config_path, manifest_path);
  est->add_option("--q", opt.q, "Chaos index (projection J_{2q-1})")
      ->envname("DSLT_Q");
  CLI::App* con = app.add_subcommand(
      "constants", "Deterministic variance integrals and limit constants");
  add_common_options(con, opt, config_path, manifest_path);
  con->add_option("--q", opt.q, "Also tabulate the chaos-q constants")
      ->envname("DSLT_Q");
  CLI::App* exp = app.add_subcommand(
      "experiment", "Monte Carlo verification runs with pass/fail reports");
  add_common_options(exp, opt, config_path, manifest_path);
  exp->add_option("--q", opt.q, "Chaos index for the chaos experiments")
      ->envname("DSLT_Q");
  std::string kind_arg;
  exp->add_option("kind", kind_arg, "alpha-clt | chaos-l2 | chaos-clt");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const char* invoked = sim->parsed()   ? "simulate"
                          : est->parsed() ? "estimate"
                          : con->parsed() ? "constants"
                                          : "experiment";
    if (!manifest_command.empty() && manifest_command != invoked)
      throw dslt::domain_error("manifest records command '" + manifest_command +
                               "' but '" + std::string(invoked) + "' was invoked");
    if (sim->parsed()) return dslt::cli::cmd_simulate(opt);
    if (est->parsed()) return dslt::cli::cmd_estimate(opt);
    if (con->parsed()) {
      opt.q_explicit = opt.q_explicit || con->count("--q") > 0;
      return dslt::cli::cmd_constants(opt);
    }
    if (exp->count("kind") > 0) opt.experiment_kind = kind_arg;
    if (opt.experiment_kind.empty())
      throw dslt::domain_error(
          "experiment needs a kind (alpha-clt | chaos-l2 | chaos-clt) or a manifest");
    return dslt::cli::cmd_experiment(opt);
  } catch (const dslt::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
