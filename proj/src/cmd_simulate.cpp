#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "cli.hpp"

namespace dslt::cli {

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

/// Samples `paths` fBm paths (one RNG stream per path index) and dumps the
/// value matrix as CSV (one path per row, n+1 columns) or JSON, plus the
/// manifest.  Outputs carry no timestamps, so identical invocations produce
/// identical bytes.
int cmd_simulate(const CommonOptions& opt) {
  const HurstModel model = opt.model();
  const GridSpec grid = opt.grid();
  const SimMethod method = opt.sim_method();
  if (opt.paths < 1) throw domain_error("simulate: need at least 1 path");

  const size_t cols = static_cast<size_t>(grid.n) + 1;
  std::vector<double> values(static_cast<size_t>(opt.paths) * cols);
  detail::for_each_path(
      opt.paths, opt.workers, [&] { return PathSampler(model, grid, method); },
      [&](PathSampler& sampler, int p) {
        const FbmPath path = sampler.sample(derive_stream(opt.seed, p));
        std::copy(path.values.begin(), path.values.end(),
                  values.begin() + static_cast<size_t>(p) * cols);
      });

  std::filesystem::create_directories(opt.out_dir);
  std::string file_name;
  if (opt.format == "csv") {
    file_name = "paths.csv";
    std::string out;
    out.reserve(values.size() * 20);
    for (int p = 0; p < opt.paths; ++p) {
      for (size_t c = 0; c < cols; ++c) {
        if (c > 0) out += ',';
        append_double(out, values[static_cast<size_t>(p) * cols + c]);
      }
      out += '\n';
    }
    write_text_atomic((std::filesystem::path(opt.out_dir) / file_name).string(), out);
  } else if (opt.format == "json") {
    file_name = "paths.json";
    nlohmann::ordered_json j;
    j["schema"] = "dslt-paths/1";
    j["hurst"] = opt.hurst;
    j["horizon"] = opt.horizon;
    j["steps"] = opt.steps;
    j["method"] = opt.method;
    j["master_seed"] = opt.seed;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (int p = 0; p < opt.paths; ++p) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (size_t c = 0; c < cols; ++c)
        row.push_back(values[static_cast<size_t>(p) * cols + c]);
      rows.push_back(std::move(row));
    }
    j["paths"] = std::move(rows);
    write_text_atomic((std::filesystem::path(opt.out_dir) / file_name).string(),
                      j.dump() + "\n");
  } else {
    throw domain_error("unknown format '" + opt.format + "' (expected json or csv)");
  }
  const std::string manifest = write_manifest("simulate", opt, {file_name});
  std::printf("wrote %s and %s\n",
              (std::filesystem::path(opt.out_dir) / file_name).string().c_str(),
              manifest.c_str());
  return 0;
}

}  // namespace dslt::cli
