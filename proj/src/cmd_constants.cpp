#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "cli.hpp"

namespace dslt::cli {

namespace {

nlohmann::ordered_json quad_json(const QuadratureResult& r) {
  nlohmann::ordered_json j;
  j["value"] = r.value;
  j["abs_err_est"] = r.abs_err_est;
  j["evaluations"] = r.evaluations;
  j["converged"] = r.converged;
  return j;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

/// Deterministic constants table: sigma^2 (both closed-form routes), the
/// V1/V2/V3 decomposition and first-chaos variance per eps, and — when --q
/// is given — the chaos variance per eps plus whichever of sigma_bar_q^2
/// (2/3 < H < 3/4) or sigma_q^2 (3/4 < H < (4q-3)/(4q-2)) the window admits.
int cmd_constants(const CommonOptions& opt) {
  const HurstModel model = opt.model();
  const std::vector<double> eps = opt.eps_or_default();

  nlohmann::ordered_json j;
  j["schema"] = "dslt-constants/1";
  j["hurst"] = opt.hurst;
  j["horizon"] = opt.horizon;
  j["sigma_squared"] = sigma_squared(model);
  j["sigma_squared_lemma_route"] = sigma_squared_via_lemma(model);

  nlohmann::ordered_json alpha_rows = nlohmann::ordered_json::array();
  nlohmann::ordered_json first_chaos_rows = nlohmann::ordered_json::array();
  for (double e : eps) {
    if (!(e > 0.0)) throw domain_error("constants: eps must be > 0");
    const AlphaVariance v = exact_alpha_variance(model, e);
    nlohmann::ordered_json row;
    row["eps"] = e;
    row["v1"] = quad_json(v.v1);
    row["v2"] = quad_json(v.v2);
    row["v3"] = quad_json(v.v3);
    row["total"] = quad_json(v.total);
    alpha_rows.push_back(std::move(row));

    nlohmann::ordered_json crow;
    crow["eps"] = e;
    crow["variance"] = quad_json(exact_first_chaos_variance(model, e));
    first_chaos_rows.push_back(std::move(crow));
  }
  j["alpha_variance"] = std::move(alpha_rows);
  j["first_chaos_variance"] = std::move(first_chaos_rows);

  if (opt.q_explicit && opt.q >= 2) {
    const int q = opt.q;
    model.require_noncritical(q);
    nlohmann::ordered_json chaos;
    chaos["q"] = q;
    const double upper = (4.0 * q - 3.0) / (4.0 * q - 2.0);
    if (model.in_l2_window()) {
      chaos["sigma_bar_q_squared"] =
          quad_json(sigma_q_bar_squared(ChaosKernelSpec(q, eps.front(), model)));
    } else if (model.in_chaos_clt_window(q)) {
      chaos["sigma_q_squared"] =
          quad_json(sigma_q_squared(ChaosKernelSpec(q, eps.front(), model)));
    } else {
      throw domain_error("constants: H = " + std::to_string(opt.hurst) + " with q = " +
                         std::to_string(q) + " is outside the sigma_q window (3/4, " +
                         std::to_string(upper) +
                         ") and the sigma_bar_q window (2/3, 3/4)");
    }
    nlohmann::ordered_json chaos_rows = nlohmann::ordered_json::array();
    for (double e : eps) {
      nlohmann::ordered_json row;
      row["eps"] = e;
      row["variance"] = quad_json(exact_chaos_variance(ChaosKernelSpec(q, e, model)));
      chaos_rows.push_back(std::move(row));
    }
    chaos["variance_rows"] = std::move(chaos_rows);
    j["chaos"] = std::move(chaos);
  }

  std::filesystem::create_directories(opt.out_dir);
  std::vector<std::string> outputs = {"constants.json"};
  write_text_atomic((std::filesystem::path(opt.out_dir) / "constants.json").string(),
                    j.dump(2) + "\n");
  if (opt.format == "csv") {
    std::string csv = "key,eps,value,abs_err_est,converged\n";
    csv += "sigma_squared,," + fmt_double(j["sigma_squared"].get<double>()) + ",0,1\n";
    for (const auto& row : j["alpha_variance"]) {
      const std::string e = fmt_double(row["eps"].get<double>());
      for (const char* part : {"v1", "v2", "v3", "total"})
        csv += std::string("alpha_") + part + "," + e + "," +
               fmt_double(row[part]["value"].get<double>()) + "," +
               fmt_double(row[part]["abs_err_est"].get<double>()) + "," +
               (row[part]["converged"].get<bool>() ? "1" : "0") + "\n";
    }
    for (const auto& row : j["first_chaos_variance"])
      csv += "first_chaos," + fmt_double(row["eps"].get<double>()) + "," +
             fmt_double(row["variance"]["value"].get<double>()) + "," +
             fmt_double(row["variance"]["abs_err_est"].get<double>()) + "," +
             (row["variance"]["converged"].get<bool>() ? "1" : "0") + "\n";
    if (j.contains("chaos")) {
      for (const char* key : {"sigma_bar_q_squared", "sigma_q_squared"})
        if (j["chaos"].contains(key))
          csv += std::string(key) + ",," +
                 fmt_double(j["chaos"][key]["value"].get<double>()) + "," +
                 fmt_double(j["chaos"][key]["abs_err_est"].get<double>()) + "," +
                 (j["chaos"][key]["converged"].get<bool>() ? "1" : "0") + "\n";
      for (const auto& row : j["chaos"]["variance_rows"])
        csv += "chaos_variance," + fmt_double(row["eps"].get<double>()) + "," +
               fmt_double(row["variance"]["value"].get<double>()) + "," +
               fmt_double(row["variance"]["abs_err_est"].get<double>()) + "," +
               (row["variance"]["converged"].get<bool>() ? "1" : "0") + "\n";
    }
    write_text_atomic((std::filesystem::path(opt.out_dir) / "constants.csv").string(),
                      csv);
    outputs.push_back("constants.csv");
  }
  const std::string manifest = write_manifest("constants", opt, outputs);
  std::printf("wrote %s and %s\n",
              (std::filesystem::path(opt.out_dir) / "constants.json").string().c_str(),
              manifest.c_str());
  return 0;
}

}  // namespace dslt::cli
