#pragma once

/// Shared CLI plumbing: resolved options, run manifests, and the subcommand
/// entry points.  Every subcommand writes its outputs plus a RunManifest
/// describing the fully resolved configuration; re-running from a manifest
/// reproduces output files bit-for-bit (the manifest's own timestamp is the
/// only thing that changes).

#include <cstdint>
#include <string>
#include <vector>

#include "dslt/experiments.hpp"
#include "json.hpp"

namespace dslt::cli {

inline constexpr const char* tool_version = "1.0.0";

/// One flat bag of options for all subcommands; each command reads the
/// subset it needs.  Resolution order: defaults, then config file, then
/// manifest (on replay), then environment variables and explicit flags.
struct CommonOptions {
  double hurst = 0.7;
  double horizon = 1.0;
  int steps = 2048;
  int paths = 2000;
  std::vector<double> eps;  // empty means the default schedule
  int q = 2;
  bool q_explicit = false;  // constants: chaos table only when --q was given
  uint64_t seed = default_master_seed;
  std::string method = "circulant";  // circulant | cholesky
  int workers = 1;
  std::string out_dir = ".";
  std::string format = "json";  // json | csv
  bool plot = false;
  bool allow_coarse_grid = false;
  double variance_rel_tol = 0.20;
  double normality_alpha = 0.01;
  double cauchy_decrease_factor = 1.0;
  std::string experiment_kind;  // alpha-clt | chaos-l2 | chaos-clt

  std::vector<double> eps_or_default() const {
    return eps.empty() ? std::vector<double>{1e-1, 1e-2, 1e-3} : eps;
  }
  HurstModel model() const { return HurstModel(hurst, horizon); }
  GridSpec grid() const { return GridSpec(steps, horizon); }
  SimMethod sim_method() const;
  ExperimentConfig experiment_config() const;
};

/// Writes `content` to `path` atomically (temp file + rename).
void write_text_atomic(const std::string& path, const std::string& content);

/// Resolved-config <-> JSON (the manifest's "config" object).
nlohmann::ordered_json options_to_json(const CommonOptions& opt);
CommonOptions options_from_json(const nlohmann::json& j);

/// Writes the RunManifest for `command` next to `outputs` (file names
/// relative to opt.out_dir); returns the manifest path.
std::string write_manifest(const std::string& command, const CommonOptions& opt,
                           const std::vector<std::string>& outputs);

/// Loads a manifest, returning its command name and resolved options.
CommonOptions load_manifest(const std::string& path, std::string& command_out);

/// Report serialization (deterministic: no timestamps, fixed formatting).
nlohmann::ordered_json report_to_json(const ExperimentReport& report);
std::string report_to_csv(const ExperimentReport& report);
std::string report_to_svg(const ExperimentReport& report);

/// Subcommand bodies.  Return the process exit code (0 ok / 1 red flags);
/// argument and domain violations throw dslt::domain_error (exit 2 in main).
int cmd_simulate(const CommonOptions& opt);
int cmd_estimate(const CommonOptions& opt);
int cmd_constants(const CommonOptions& opt);
int cmd_experiment(const CommonOptions& opt);

}  // namespace dslt::cli
