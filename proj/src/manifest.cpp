#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dslt::cli {

SimMethod CommonOptions::sim_method() const {
  if (method == "circulant") return SimMethod::circulant;
  if (method == "cholesky") return SimMethod::cholesky;
  throw domain_error("unknown method '" + method + "' (expected circulant or cholesky)");
}

ExperimentConfig CommonOptions::experiment_config() const {
  ExperimentConfig cfg(model(), grid());
  cfg.eps_schedule = eps_or_default();
  cfg.n_paths = paths;
  cfg.q_list = {q};
  cfg.master_seed = seed;
  cfg.method = sim_method();
  cfg.workers = workers;
  cfg.tolerances.variance_rel_tol = variance_rel_tol;
  cfg.tolerances.normality_alpha = normality_alpha;
  cfg.tolerances.cauchy_decrease_factor = cauchy_decrease_factor;
  cfg.allow_coarse_grid = allow_coarse_grid;
  return cfg;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

nlohmann::ordered_json options_to_json(const CommonOptions& opt) {
  nlohmann::ordered_json j;
  j["hurst"] = opt.hurst;
  j["horizon"] = opt.horizon;
  j["steps"] = opt.steps;
  j["paths"] = opt.paths;
  j["eps"] = opt.eps_or_default();
  j["q"] = opt.q;
  j["q_explicit"] = opt.q_explicit;
  j["seed"] = opt.seed;
  j["method"] = opt.method;
  j["workers"] = opt.workers;
  j["out_dir"] = opt.out_dir;
  j["format"] = opt.format;
  j["plot"] = opt.plot;
  j["allow_coarse_grid"] = opt.allow_coarse_grid;
  j["variance_rel_tol"] = opt.variance_rel_tol;
  j["normality_alpha"] = opt.normality_alpha;
  j["cauchy_decrease_factor"] = opt.cauchy_decrease_factor;
  j["experiment_kind"] = opt.experiment_kind;
  return j;
}

CommonOptions options_from_json(const nlohmann::json& j) {
  CommonOptions opt;
  opt.hurst = j.value("hurst", opt.hurst);
  opt.horizon = j.value("horizon", opt.horizon);
  opt.steps = j.value("steps", opt.steps);
  opt.paths = j.value("paths", opt.paths);
  if (j.contains("eps")) opt.eps = j.at("eps").get<std::vector<double>>();
  opt.q = j.value("q", opt.q);
  opt.q_explicit = j.value("q_explicit", opt.q_explicit);
  opt.seed = j.value("seed", opt.seed);
  opt.method = j.value("method", opt.method);
  opt.workers = j.value("workers", opt.workers);
  opt.out_dir = j.value("out_dir", opt.out_dir);
  opt.format = j.value("format", opt.format);
  opt.plot = j.value("plot", opt.plot);
  opt.allow_coarse_grid = j.value("allow_coarse_grid", opt.allow_coarse_grid);
  opt.variance_rel_tol = j.value("variance_rel_tol", opt.variance_rel_tol);
  opt.normality_alpha = j.value("normality_alpha", opt.normality_alpha);
  opt.cauchy_decrease_factor =
      j.value("cauchy_decrease_factor", opt.cauchy_decrease_factor);
  opt.experiment_kind = j.value("experiment_kind", opt.experiment_kind);
  return opt;
}

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[80];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

}  // namespace

std::string write_manifest(const std::string& command, const CommonOptions& opt,
                           const std::vector<std::string>& outputs) {
  nlohmann::ordered_json j;
  j["schema"] = "dslt-manifest/1";
  j["command"] = command;
  j["tool_version"] = tool_version;
  j["timestamp"] = utc_timestamp();
  j["master_seed"] = opt.seed;
  j["config"] = options_to_json(opt);
  j["outputs"] = outputs;
  std::filesystem::create_directories(opt.out_dir);
  const std::string path =
      (std::filesystem::path(opt.out_dir) / (command + "_manifest.json")).string();
  write_text_atomic(path, j.dump(2) + "\n");
  return path;
}

CommonOptions load_manifest(const std::string& path, std::string& command_out) {
  std::ifstream in(path);
  if (!in) throw domain_error("cannot read manifest " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw domain_error("malformed manifest " + path + ": " + e.what());
  }
  if (j.value("schema", "") != std::string("dslt-manifest/1"))
    throw domain_error("unrecognized manifest schema in " + path);
  command_out = j.value("command", "");
  return options_from_json(j.at("config"));
}

}  // namespace dslt::cli
