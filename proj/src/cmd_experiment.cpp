#include <algorithm>
#include <cmath>
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

std::string fmt_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

nlohmann::ordered_json row_to_json(const EpsRow& row) {
  nlohmann::ordered_json j;
  j["eps"] = row.eps;
  j["q"] = row.q;
  j["n_samples"] = row.n_samples;
  j["kernel_resolved"] = row.kernel_resolved;
  j["sample_mean"] = row.sample_mean;
  j["mean_se"] = row.mean_se;
  j["sample_variance"] = row.sample_variance;
  j["variance_se"] = row.variance_se;
  j["var_ci_lo"] = row.var_ci_lo;
  j["var_ci_hi"] = row.var_ci_hi;
  j["ks_stat"] = row.normality.ks_stat;
  j["ks_p"] = row.normality.ks_p;
  j["jb_stat"] = row.normality.jb_stat;
  j["jb_p"] = row.normality.jb_p;
  j["skewness"] = row.normality.skewness;
  j["excess_kurtosis"] = row.normality.excess_kurtosis;
  j["target_variance"] = row.target_variance;
  j["target_abs_err"] = row.target_abs_err;
  j["target_converged"] = row.target_converged;
  j["limit_variance"] = row.limit_variance;
  j["variance_ratio"] = row.variance_ratio;
  j["closure_z"] = row.closure_z;
  if (std::isfinite(row.sq_diff_prev)) j["sq_diff_prev"] = row.sq_diff_prev;
  j["pass_mean"] = row.pass_mean;
  j["pass_variance"] = row.pass_variance;
  j["pass_normality"] = row.pass_normality;
  j["pass_cauchy"] = row.pass_cauchy;
  j["pass_kurtosis"] = row.pass_kurtosis;
  return j;
}

}  // namespace

nlohmann::ordered_json report_to_json(const ExperimentReport& report) {
  nlohmann::ordered_json j;
  j["schema"] = "dslt-report/1";
  j["kind"] = to_string(report.kind);
  j["hurst"] = report.hurst;
  j["horizon"] = report.horizon;
  j["steps"] = report.steps;
  j["n_paths"] = report.n_paths;
  j["master_seed"] = report.master_seed;
  j["method"] = report.method;
  j["tolerances"]["variance_rel_tol"] = report.tolerances.variance_rel_tol;
  j["tolerances"]["normality_alpha"] = report.tolerances.normality_alpha;
  j["tolerances"]["cauchy_decrease_factor"] = report.tolerances.cauchy_decrease_factor;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const EpsRow& row : report.rows) rows.push_back(row_to_json(row));
  j["rows"] = std::move(rows);
  j["notes"] = report.notes;
  j["all_pass"] = report.all_pass;
  return j;
}

std::string report_to_csv(const ExperimentReport& report) {
  std::string out =
      "kind,q,eps,n_samples,kernel_resolved,sample_mean,mean_se,sample_variance,"
      "variance_se,var_ci_lo,var_ci_hi,ks_stat,ks_p,jb_stat,jb_p,skewness,"
      "excess_kurtosis,target_variance,target_abs_err,target_converged,"
      "limit_variance,variance_ratio,closure_z,sq_diff_prev,pass_mean,"
      "pass_variance,pass_normality,pass_cauchy,pass_kurtosis\n";
  for (const EpsRow& row : report.rows) {
    out += std::string(to_string(report.kind)) + ',' + std::to_string(row.q) + ',' +
           fmt_double(row.eps) + ',' + std::to_string(row.n_samples) + ',' +
           (row.kernel_resolved ? "1" : "0") + ',' + fmt_double(row.sample_mean) + ',' +
           fmt_double(row.mean_se) + ',' + fmt_double(row.sample_variance) + ',' +
           fmt_double(row.variance_se) + ',' + fmt_double(row.var_ci_lo) + ',' +
           fmt_double(row.var_ci_hi) + ',' + fmt_double(row.normality.ks_stat) + ',' +
           fmt_double(row.normality.ks_p) + ',' + fmt_double(row.normality.jb_stat) +
           ',' + fmt_double(row.normality.jb_p) + ',' +
           fmt_double(row.normality.skewness) + ',' +
           fmt_double(row.normality.excess_kurtosis) + ',' +
           fmt_double(row.target_variance) + ',' + fmt_double(row.target_abs_err) +
           ',' + (row.target_converged ? "1" : "0") + ',' +
           fmt_double(row.limit_variance) + ',' + fmt_double(row.variance_ratio) + ',' +
           fmt_double(row.closure_z) + ',' +
           (std::isfinite(row.sq_diff_prev) ? fmt_double(row.sq_diff_prev) : "") + ',' +
           (row.pass_mean ? "1" : "0") + ',' + (row.pass_variance ? "1" : "0") + ',' +
           (row.pass_normality ? "1" : "0") + ',' + (row.pass_cauchy ? "1" : "0") +
           ',' + (row.pass_kurtosis ? "1" : "0") + '\n';
  }
  return out;
}

/// Log-log plot of variance vs eps: sample variance (solid, one polyline per
/// q), exact finite-eps variance (open circles), and the limit constant
/// (dashed horizontal reference).  Pure function of the report (no
/// timestamps), so plots reproduce bit-for-bit.
std::string report_to_svg(const ExperimentReport& report) {
  const double width = 640.0, height = 420.0;
  const double ml = 70.0, mr = 20.0, mt = 30.0, mb = 50.0;
  std::vector<double> xs, ys;
  for (const EpsRow& row : report.rows) {
    xs.push_back(-std::log10(row.eps));
    for (double v : {row.sample_variance, row.target_variance, row.limit_variance})
      if (v > 0.0) ys.push_back(std::log10(v));
  }
  double x_lo = *std::min_element(xs.begin(), xs.end());
  double x_hi = *std::max_element(xs.begin(), xs.end());
  double y_lo = *std::min_element(ys.begin(), ys.end());
  double y_hi = *std::max_element(ys.begin(), ys.end());
  if (x_hi - x_lo < 1e-9) { x_lo -= 0.5; x_hi += 0.5; }
  if (y_hi - y_lo < 1e-9) { y_lo -= 0.5; y_hi += 0.5; }
  const double x_pad = 0.06 * (x_hi - x_lo), y_pad = 0.08 * (y_hi - y_lo);
  x_lo -= x_pad; x_hi += x_pad; y_lo -= y_pad; y_hi += y_pad;
  auto px = [&](double x) {
    return ml + (x - x_lo) / (x_hi - x_lo) * (width - ml - mr);
  };
  auto py = [&](double y) {
    return height - mb - (y - y_lo) / (y_hi - y_lo) * (height - mt - mb);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 640 420\" "
         "font-family=\"monospace\" font-size=\"12\">\n";
  svg += "<rect x=\"" + fmt_coord(ml) + "\" y=\"" + fmt_coord(mt) + "\" width=\"" +
         fmt_coord(width - ml - mr) + "\" height=\"" + fmt_coord(height - mt - mb) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + fmt_coord(width / 2) + "\" y=\"" + fmt_coord(height - 12.0) +
         "\" text-anchor=\"middle\">-log10(eps)</text>\n";
  svg += "<text x=\"16\" y=\"" + fmt_coord(height / 2) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         fmt_coord(height / 2) + ")\">log10(variance)</text>\n";
  svg += "<text x=\"" + fmt_coord(width / 2) + "\" y=\"20\" text-anchor=\"middle\">" +
         std::string(to_string(report.kind)) + " H=" + fmt_coord(report.hurst) +
         " n_paths=" + std::to_string(report.n_paths) + "</text>\n";
  for (int d = static_cast<int>(std::ceil(x_lo)); d <= static_cast<int>(std::floor(x_hi));
       ++d) {
    svg += "<line x1=\"" + fmt_coord(px(d)) + "\" y1=\"" + fmt_coord(height - mb) +
           "\" x2=\"" + fmt_coord(px(d)) + "\" y2=\"" + fmt_coord(height - mb + 5) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt_coord(px(d)) + "\" y=\"" + fmt_coord(height - mb + 18) +
           "\" text-anchor=\"middle\">" + std::to_string(d) + "</text>\n";
  }
  for (int d = static_cast<int>(std::ceil(y_lo)); d <= static_cast<int>(std::floor(y_hi));
       ++d) {
    svg += "<line x1=\"" + fmt_coord(ml - 5) + "\" y1=\"" + fmt_coord(py(d)) +
           "\" x2=\"" + fmt_coord(ml) + "\" y2=\"" + fmt_coord(py(d)) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt_coord(ml - 8) + "\" y=\"" + fmt_coord(py(d) + 4) +
           "\" text-anchor=\"end\">" + std::to_string(d) + "</text>\n";
  }

  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::vector<int> qs;
  for (const EpsRow& row : report.rows)
    if (std::find(qs.begin(), qs.end(), row.q) == qs.end()) qs.push_back(row.q);
  for (size_t iq = 0; iq < qs.size(); ++iq) {
    const char* color = colors[iq % 4];
    std::string pts;
    for (const EpsRow& row : report.rows) {
      if (row.q != qs[iq] || !(row.sample_variance > 0.0)) continue;
      pts += fmt_coord(px(-std::log10(row.eps))) + "," +
             fmt_coord(py(std::log10(row.sample_variance))) + " ";
    }
    svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1.5\"/>\n";
    for (const EpsRow& row : report.rows) {
      if (row.q != qs[iq]) continue;
      if (row.sample_variance > 0.0)
        svg += "<circle cx=\"" + fmt_coord(px(-std::log10(row.eps))) + "\" cy=\"" +
               fmt_coord(py(std::log10(row.sample_variance))) + "\" r=\"3\" fill=\"" +
               color + "\"/>\n";
      if (row.target_variance > 0.0)
        svg += "<circle cx=\"" + fmt_coord(px(-std::log10(row.eps))) + "\" cy=\"" +
               fmt_coord(py(std::log10(row.target_variance))) +
               "\" r=\"3\" fill=\"none\" stroke=\"" + color + "\"/>\n";
    }
    const double limit = report.rows.empty() ? 0.0 : report.rows.front().limit_variance;
    if (limit > 0.0)
      svg += "<line x1=\"" + fmt_coord(ml) + "\" y1=\"" + fmt_coord(py(std::log10(limit))) +
             "\" x2=\"" + fmt_coord(width - mr) + "\" y2=\"" +
             fmt_coord(py(std::log10(limit))) +
             "\" stroke=\"gray\" stroke-dasharray=\"6 3\"/>\n";
  }
  svg += "</svg>\n";
  return svg;
}

/// Runs one experiment kind and writes report.json (always), report.csv
/// (--format csv) and report.svg (--plot) plus the manifest.  Exit code 0 if
/// every pass flag is green, 1 otherwise.
int cmd_experiment(const CommonOptions& opt) {
  ExperimentReport report;
  const ExperimentConfig cfg = opt.experiment_config();
  if (opt.experiment_kind == "alpha-clt")
    report = clt_alpha_experiment(cfg);
  else if (opt.experiment_kind == "chaos-l2")
    report = chaos_l2_experiment(cfg);
  else if (opt.experiment_kind == "chaos-clt")
    report = clt_chaos_experiment(cfg);
  else
    throw domain_error("unknown experiment kind '" + opt.experiment_kind +
                       "' (expected alpha-clt, chaos-l2 or chaos-clt)");

  std::filesystem::create_directories(opt.out_dir);
  std::vector<std::string> outputs = {"report.json"};
  write_text_atomic((std::filesystem::path(opt.out_dir) / "report.json").string(),
                    report_to_json(report).dump(2) + "\n");
  if (opt.format == "csv") {
    write_text_atomic((std::filesystem::path(opt.out_dir) / "report.csv").string(),
                      report_to_csv(report));
    outputs.push_back("report.csv");
  }
  if (opt.plot) {
    write_text_atomic((std::filesystem::path(opt.out_dir) / "report.svg").string(),
                      report_to_svg(report));
    outputs.push_back("report.svg");
  }
  write_manifest("experiment", opt, outputs);

  for (const EpsRow& row : report.rows)
    std::printf("%s q=%d eps=%g: var=%.6g target=%.6g limit=%.6g ratio=%.4f "
                "mean=%+.4g jb_p=%.3g ks_p=%.3g exkurt=%+.3f pass(m/v/n/c/k)=%d%d%d%d%d\n",
                to_string(report.kind), row.q, row.eps, row.sample_variance,
                row.target_variance, row.limit_variance, row.variance_ratio,
                row.sample_mean, row.normality.jb_p, row.normality.ks_p,
                row.normality.excess_kurtosis, row.pass_mean, row.pass_variance,
                row.pass_normality, row.pass_cauchy, row.pass_kurtosis);
  std::printf("%s: %s\n", to_string(report.kind), report.all_pass ? "PASS" : "FAIL");
  return report.all_pass ? 0 : 1;
}

}  // namespace dslt::cli
