#include "uqbench/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "uqbench/errors.hpp"

namespace uqbench::report {

using json = nlohmann::json;

ordered_json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

double number_or_nan(const json& j) {
  if (j.is_null()) return kUndefined;
  if (!j.is_number()) throw Error(Errc::parse_error, "expected a number or null");
  return j.get<double>();
}

namespace {

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(Errc::parse_error, std::string("missing field '") + key + "'");
  return *it;
}

}  // namespace

ordered_json to_json(const CalibrationFit& fit) {
  ordered_json j;
  j["slope"] = number_or_null(fit.slope);
  j["intercept"] = number_or_null(fit.intercept);
  j["fit_r2"] = number_or_null(fit.fit_r2);
  j["parity_r2"] = number_or_null(fit.parity_r2);
  j["n_bins"] = fit.n_bins;
  return j;
}

CalibrationFit fit_from_json(const json& j) {
  CalibrationFit fit;
  fit.slope = number_or_nan(field(j, "slope"));
  fit.intercept = number_or_nan(field(j, "intercept"));
  fit.fit_r2 = number_or_nan(field(j, "fit_r2"));
  fit.parity_r2 = number_or_nan(field(j, "parity_r2"));
  fit.n_bins = field(j, "n_bins").get<std::size_t>();
  if (!std::isfinite(fit.slope) || !std::isfinite(fit.intercept)) {
    throw Error(Errc::parse_error, "calibration fit has undefined slope or intercept");
  }
  return fit;
}

ordered_json to_json(std::span<const CalibrationBin> bins) {
  ordered_json arr = ordered_json::array();
  for (const auto& b : bins) {
    ordered_json row;
    row["rmv"] = b.rmv;
    row["rmse"] = b.rmse;
    row["ci_lo"] = b.rmse_ci_lo;
    row["ci_hi"] = b.rmse_ci_hi;
    row["count"] = b.count;
    arr.push_back(std::move(row));
  }
  return arr;
}

std::vector<CalibrationBin> bins_from_json(const json& j) {
  if (!j.is_array()) throw Error(Errc::parse_error, "bin table must be an array");
  std::vector<CalibrationBin> out;
  for (const auto& row : j) {
    CalibrationBin b;
    b.rmv = field(row, "rmv").get<double>();
    b.rmse = field(row, "rmse").get<double>();
    b.rmse_ci_lo = field(row, "ci_lo").get<double>();
    b.rmse_ci_hi = field(row, "ci_hi").get<double>();
    b.count = field(row, "count").get<std::size_t>();
    out.push_back(b);
  }
  return out;
}

ordered_json to_json(const MetricsReport& r) {
  ordered_json j;
  j["n"] = r.n;
  j["parity_r2"] = number_or_null(r.parity_r2);
  j["fit_r2"] = number_or_null(r.fit_r2);
  j["slope"] = number_or_null(r.slope);
  j["intercept"] = number_or_null(r.intercept);
  j["nll"] = number_or_null(r.nll);
  j["spearman_rho"] = number_or_null(r.spearman_rho);
  j["auroc"] = number_or_null(r.auroc);
  j["miscal_area"] = number_or_null(r.miscal_area);
  j["var_z"] = number_or_null(r.var_z);
  j["ci_var_z"] = {{"lo", number_or_null(r.ci_var_z.lo)},
                   {"hi", number_or_null(r.ci_var_z.hi)},
                   {"level", r.ci_var_z.level},
                   {"degenerate", r.ci_var_z.degenerate}};
  j["calibrated_flag"] = r.calibrated_flag;
  j["warnings"] = r.warnings;
  return j;
}

MetricsReport metrics_from_json(const json& j) {
  MetricsReport r;
  r.n = field(j, "n").get<std::size_t>();
  r.parity_r2 = number_or_nan(field(j, "parity_r2"));
  r.fit_r2 = number_or_nan(field(j, "fit_r2"));
  r.slope = number_or_nan(field(j, "slope"));
  r.intercept = number_or_nan(field(j, "intercept"));
  r.nll = number_or_nan(field(j, "nll"));
  r.spearman_rho = number_or_nan(field(j, "spearman_rho"));
  r.auroc = number_or_nan(field(j, "auroc"));
  r.miscal_area = number_or_nan(field(j, "miscal_area"));
  r.var_z = number_or_nan(field(j, "var_z"));
  const auto& ci = field(j, "ci_var_z");
  r.ci_var_z.lo = number_or_nan(field(ci, "lo"));
  r.ci_var_z.hi = number_or_nan(field(ci, "hi"));
  r.ci_var_z.level = field(ci, "level").get<double>();
  r.ci_var_z.degenerate = field(ci, "degenerate").get<bool>();
  r.calibrated_flag = field(j, "calibrated_flag").get<bool>();
  r.warnings = field(j, "warnings").get<std::vector<std::string>>();
  return r;
}

ReportBundle bundle_from_json(const json& j) {
  try {
    ReportBundle b;
    b.metrics = metrics_from_json(field(j, "report"));
    b.bins = bins_from_json(field(j, "curve"));
    if (auto it = j.find("metadata"); it != j.end()) b.metadata = *it;
    return b;
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed report: ") + e.what());
  }
}

namespace {

struct Frame {
  double width = 640.0;
  double height = 520.0;
  double left = 80.0;
  double right = 30.0;
  double top = 40.0;
  double bottom = 70.0;
  double max_value = 1.0;

  double x(double v) const { return left + v / max_value * (width - left - right); }
  double y(double v) const { return height - bottom - v / max_value * (height - top - bottom); }
};

// Clips the line y = slope * x + intercept to the square [0, m] x [0, m].
bool clip_line(double slope, double intercept, double m, double& x0, double& y0, double& x1,
               double& y1) {
  double lo = 0.0;
  double hi = m;
  if (slope != 0.0) {
    const double xa = (0.0 - intercept) / slope;
    const double xb = (m - intercept) / slope;
    lo = std::max(lo, std::min(xa, xb));
    hi = std::min(hi, std::max(xa, xb));
  } else if (intercept < 0.0 || intercept > m) {
    return false;
  }
  if (!(lo < hi)) return false;
  x0 = lo;
  x1 = hi;
  y0 = slope * lo + intercept;
  y1 = slope * hi + intercept;
  return true;
}

double nice_step(double range) {
  const double raw = range / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace

std::string calibration_svg(std::span<const CalibrationBin> bins, double slope, double intercept) {
  Frame f;
  double max_value = 0.0;
  for (const auto& b : bins) max_value = std::max({max_value, b.rmv, b.rmse_ci_hi, b.rmse});
  f.max_value = max_value > 0.0 ? max_value * 1.05 : 1.0;

  std::string s;
  s += fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\">\n",
      f.width, f.height);
  s += "<style>"
       ".axis{stroke:#222;stroke-width:1}"
       ".grid{stroke:#ddd;stroke-width:0.5}"
       ".parity{stroke:#777;stroke-width:1.5;stroke-dasharray:6 4}"
       ".fit{stroke:#c0392b;stroke-width:1.5}"
       ".errorbar{stroke:#1f4e79;stroke-width:1.2}"
       ".bin{fill:#2e86c1;stroke:#1f4e79;stroke-width:1}"
       "text{font-family:sans-serif;font-size:12px;fill:#222}"
       "</style>\n";
  s += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", f.width,
                   f.height);

  const double step = nice_step(f.max_value);
  for (double t = 0.0; t <= f.max_value + 1e-12; t += step) {
    s += fmt::format("<line class=\"grid\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\"/>\n",
                     f.x(t), f.y(0.0), f.x(t), f.y(f.max_value));
    s += fmt::format("<line class=\"grid\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\"/>\n",
                     f.x(0.0), f.y(t), f.x(f.max_value), f.y(t));
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:g}</text>\n", f.x(t),
                     f.y(0.0) + 18.0, t);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:g}</text>\n",
                     f.x(0.0) - 6.0, f.y(t) + 4.0, t);
  }
  s += fmt::format("<line class=\"axis\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\"/>\n",
                   f.x(0.0), f.y(0.0), f.x(f.max_value), f.y(0.0));
  s += fmt::format("<line class=\"axis\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\"/>\n",
                   f.x(0.0), f.y(0.0), f.x(0.0), f.y(f.max_value));
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">RMV (eV)</text>\n",
                   (f.x(0.0) + f.x(f.max_value)) / 2.0, f.height - 25.0);
  s += fmt::format(
      "<text x=\"20\" y=\"{:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.2f})\">"
      "RMSE (eV)</text>\n",
      (f.y(0.0) + f.y(f.max_value)) / 2.0, (f.y(0.0) + f.y(f.max_value)) / 2.0);
  s += fmt::format("<text x=\"{:.2f}\" y=\"24\" text-anchor=\"middle\">Error-based calibration</text>\n",
                   f.width / 2.0);

  s += fmt::format(
      "<line class=\"reference parity\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\"/>\n",
      f.x(0.0), f.y(0.0), f.x(f.max_value), f.y(f.max_value));
  double x0, y0, x1, y1;
  if (std::isfinite(slope) && std::isfinite(intercept) &&
      clip_line(slope, intercept, f.max_value, x0, y0, x1, y1)) {
    s += fmt::format(
        "<line class=\"reference fit\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\"/>\n",
        f.x(x0), f.y(y0), f.x(x1), f.y(y1));
  }

  for (const auto& b : bins) {
    s += fmt::format("<line class=\"errorbar\" x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\"/>\n",
                     f.x(b.rmv), f.y(b.rmse_ci_lo), f.y(b.rmse_ci_hi));
  }
  for (const auto& b : bins) {
    s += fmt::format("<circle class=\"bin\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3.5\"/>\n", f.x(b.rmv),
                     f.y(b.rmse));
  }
  s += "</svg>\n";
  return s;
}

std::string bins_csv(std::span<const CalibrationBin> bins) {
  std::string s = "rmv,rmse,ci_lo,ci_hi,count\n";
  for (const auto& b : bins) {
    s += fmt::format("{},{},{},{},{}\n", b.rmv, b.rmse, b.rmse_ci_lo, b.rmse_ci_hi, b.count);
  }
  return s;
}

}  // namespace uqbench::report
