#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "cli.hpp"

namespace dslt::cli {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

/// Per-path estimator dump: for every path and every eps in the schedule,
/// the raw and scaled alpha_eps plus the raw and scaled chaos projection
/// J_{2q-1}.  One row per (path, eps); statistics over these rows are the
/// experiment commands' job.
int cmd_estimate(const CommonOptions& opt) {
  const HurstModel model = opt.model();
  const GridSpec grid = opt.grid();
  const SimMethod method = opt.sim_method();
  const std::vector<double> eps = opt.eps_or_default();
  if (opt.paths < 1) throw domain_error("estimate: need at least 1 path");
  if (opt.q < 1) throw domain_error("estimate: q must be >= 1");
  for (size_t e = 0; e < eps.size(); ++e) {
    if (!(eps[e] > 0.0)) throw domain_error("estimate: eps must be > 0");
    if (!opt.allow_coarse_grid && !grid_resolves_kernel(grid, eps[e]))
      throw domain_error("estimate: dt > sqrt(eps) at eps = " + std::to_string(eps[e]) +
                         "; refine the grid or pass --allow-coarse-grid");
  }

  const int n_eps = static_cast<int>(eps.size());
  const size_t stride = static_cast<size_t>(n_eps) * 4;  // alpha raw/scaled, chaos raw/scaled
  std::vector<double> rows(static_cast<size_t>(opt.paths) * stride);
  detail::for_each_path(
      opt.paths, opt.workers,
      [&] { return detail::PathWorker{PathSampler(model, grid, method), {}}; },
      [&](detail::PathWorker& w, int p) {
        const FbmPath path = w.sampler.sample(derive_stream(opt.seed, p));
        chaos_lag_buckets(model, path, opt.q, w.buckets);
        for (int e = 0; e < n_eps; ++e) {
          const DsltEstimate a = alpha_eps(model, path, eps[static_cast<size_t>(e)]);
          const ChaosProjectionEstimate c = chaos_from_buckets(
              model, grid, opt.q, eps[static_cast<size_t>(e)], w.buckets);
          double* slot = rows.data() + static_cast<size_t>(p) * stride + 4 * e;
          slot[0] = a.raw;
          slot[1] = a.scaled;
          slot[2] = c.raw;
          slot[3] = c.scaled;
        }
      });

  std::filesystem::create_directories(opt.out_dir);
  std::string file_name;
  if (opt.format == "csv") {
    file_name = "estimates.csv";
    std::string out = "path,eps,q,alpha_raw,alpha_scaled,chaos_raw,chaos_scaled\n";
    for (int p = 0; p < opt.paths; ++p)
      for (int e = 0; e < n_eps; ++e) {
        const double* slot = rows.data() + static_cast<size_t>(p) * stride + 4 * e;
        out += std::to_string(p) + ',' + fmt_double(eps[static_cast<size_t>(e)]) + ',' +
               std::to_string(opt.q) + ',' + fmt_double(slot[0]) + ',' +
               fmt_double(slot[1]) + ',' + fmt_double(slot[2]) + ',' +
               fmt_double(slot[3]) + '\n';
      }
    write_text_atomic((std::filesystem::path(opt.out_dir) / file_name).string(), out);
  } else if (opt.format == "json") {
    file_name = "estimates.json";
    nlohmann::ordered_json j;
    j["schema"] = "dslt-estimates/1";
    j["hurst"] = opt.hurst;
    j["horizon"] = opt.horizon;
    j["steps"] = opt.steps;
    j["q"] = opt.q;
    j["method"] = opt.method;
    j["master_seed"] = opt.seed;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (int p = 0; p < opt.paths; ++p)
      for (int e = 0; e < n_eps; ++e) {
        const double* slot = rows.data() + static_cast<size_t>(p) * stride + 4 * e;
        nlohmann::ordered_json row;
        row["path"] = p;
        row["eps"] = eps[static_cast<size_t>(e)];
        row["alpha_raw"] = slot[0];
        row["alpha_scaled"] = slot[1];
        row["chaos_raw"] = slot[2];
        row["chaos_scaled"] = slot[3];
        arr.push_back(std::move(row));
      }
    j["rows"] = std::move(arr);
    write_text_atomic((std::filesystem::path(opt.out_dir) / file_name).string(),
                      j.dump() + "\n");
  } else {
    throw domain_error("unknown format '" + opt.format + "' (expected json or csv)");
  }
  const std::string manifest = write_manifest("estimate", opt, {file_name});
  std::printf("wrote %s and %s\n",
              (std::filesystem::path(opt.out_dir) / file_name).string().c_str(),
              manifest.c_str());
  return 0;
}

}  // namespace dslt::cli
