#include "homdef/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace homdef {

using nlohmann::json;

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_text(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw Error("cannot create directory '" + p.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
  if (!out) throw Error("write failed for '" + path + "'");
}

void write_json(const std::string& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

namespace {

// json stores non-finite doubles as null; keep them readable instead.
json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json numbers(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

json tensor_json(const TensorBlock& t) {
  json rows = json::array();
  for (int r = 0; r < t.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < t.cols(); ++c) row.push_back(t(r, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

json mesh_summary(const DomainMesh& mesh) {
  json lower = json::array(), upper = json::array();
  for (int k = 0; k < mesh.dim; ++k) {
    lower.push_back(mesh.box.lower(k));
    upper.push_back(mesh.box.upper(k));
  }
  return {{"dimension", mesh.dim},
          {"nodes", mesh.num_nodes()},
          {"elements", mesh.num_elements()},
          {"boundary_nodes", mesh.num_boundary_nodes()},
          {"subdivisions", mesh.subdivisions},
          {"h", mesh.max_diameter},
          {"lower", lower},
          {"upper", upper}};
}

json mesh_summary(const UnitCellGrid& grid) {
  return {{"dimension", grid.dim},
          {"nodes", grid.num_nodes()},
          {"elements", grid.num_elements()},
          {"periodic_dofs", grid.num_masters()},
          {"subdivisions", grid.subdivisions},
          {"h", grid.spacing() * std::sqrt(static_cast<double>(grid.dim))}};
}

std::string matrix_market(const CsrMatrix& matrix) {
  std::ostringstream out;
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << matrix.rows() << ' ' << matrix.cols() << ' ' << matrix.nonZeros() << '\n';
  for (int r = 0; r < matrix.outerSize(); ++r) {
    for (CsrMatrix::InnerIterator it(matrix, r); it; ++it) {
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << format_double(it.value()) << '\n';
    }
  }
  return out.str();
}

std::string correctors_csv(const CorrectorSet& correctors) {
  const UnitCellGrid& grid = correctors.grid();
  const int n = correctors.components();
  const int d = correctors.dim();
  std::ostringstream out;
  for (int k = 0; k < d; ++k) out << (k ? "," : "") << "y" << k + 1;
  for (int g = 0; g < n; ++g)
    for (int b = 0; b < n; ++b)
      for (int j = 0; j < d; ++j) out << ",v_" << g + 1 << '_' << b + 1 << '_' << j + 1;
  out << '\n';
  for (int m = 0; m < grid.num_masters(); ++m) {
    const int node = grid.master_node(m);
    for (int k = 0; k < d; ++k) out << (k ? "," : "") << format_double(grid.nodes(k, node));
    for (int g = 0; g < n; ++g)
      for (int b = 0; b < n; ++b)
        for (int j = 0; j < d; ++j) out << ',' << format_double(correctors.node_value(node, g, b, j));
    out << '\n';
  }
  return out.str();
}

json homogenized_json(const HomogenizedTensor& ahat) {
  json entries = json::array();
  const int n = ahat.components;
  const int d = ahat.dim;
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < d; ++i)
      for (int b = 0; b < n; ++b)
        for (int j = 0; j < d; ++j) {
          entries.push_back({{"alpha", a + 1}, {"i", i + 1}, {"beta", b + 1}, {"j", j + 1},
                             {"value", ahat.value(a * d + i, b * d + j)}});
        }
  return {{"components", n},
          {"dimension", d},
          {"tensor", tensor_json(ahat.value)},
          {"entries", entries},
          {"coercivity", ahat.coercivity}};
}

std::string solution_csv(const DiscreteField& u0, const DiscreteField& u_bar,
                         const std::optional<DiscreteField>& u_eps) {
  const DomainMesh& mesh = u0.mesh();
  const int n = u0.components();
  std::ostringstream out;
  for (int k = 0; k < mesh.dim; ++k) out << (k ? "," : "") << "x" << k + 1;
  for (int c = 0; c < n; ++c) {
    const std::string s = n > 1 ? "_" + std::to_string(c + 1) : "";
    out << ",u0" << s << ",u_bar" << s << ",difference" << s;
    if (u_eps) out << ",u_eps" << s;
  }
  out << '\n';
  for (int node = 0; node < mesh.num_nodes(); ++node) {
    for (int k = 0; k < mesh.dim; ++k) out << (k ? "," : "") << format_double(mesh.nodes(k, node));
    for (int c = 0; c < n; ++c) {
      out << ',' << format_double(u0(node, c)) << ',' << format_double(u_bar(node, c)) << ','
          << format_double(u_bar(node, c) - u0(node, c));
      if (u_eps) out << ',' << format_double((*u_eps)(node, c));
    }
    out << '\n';
  }
  return out.str();
}

json frozen_report_json(const FrozenNewtonReport& r) {
  return {{"status", status_name(r.status)},
          {"converged", r.converged()},
          {"iterations", r.iterations},
          {"residuals", numbers(r.residuals)},
          {"steps", numbers(r.steps)},
          {"ratios", numbers(r.ratios)},
          {"max_ratio", number(r.max_ratio())},
          {"initial_residual", number(r.initial_residual)},
          {"rho_hat", number(r.rho_hat)},
          {"rho_converged", r.rho_converged},
          {"h1_distance", number(r.h1_distance)},
          {"aposteriori_bound", number(r.aposteriori_bound)},
          {"aposteriori_ratio", number(r.aposteriori_ratio())}};
}

json newton_result_json(const NewtonResult& r) {
  return {{"converged", r.converged},
          {"iterations", r.iterations},
          {"residuals", numbers(r.residuals)},
          {"rho_hat", number(r.rho_hat)},
          {"sup_norm", r.solution.sup_norm()}};
}

json probe_report_json(const ProbeReport& r) {
  return {{"radius", r.radius},     {"trials", r.trials},         {"diverged", r.diverged},
          {"spread", number(r.spread)}, {"iterations", r.iterations}, {"statuses", r.statuses}};
}

json fit_json(const std::optional<LogLogFit>& fit, const FitWindow& window) {
  json w = {{"eps_min", window.eps_min}, {"eps_max", number(window.eps_max)}};
  if (!fit) return {{"fitted", false}, {"window", w}};
  return {{"fitted", true},
          {"slope", fit->slope},
          {"intercept", fit->intercept},
          {"r_squared", fit->r_squared},
          {"points", fit->points},
          {"window", w}};
}

std::string rate_csv(const RateStudyResult& result) {
  std::ostringstream out;
  out << "eps,err_sup,resid_dual,q_max,iters,status,rho_hat,h1_distance,aposteriori_bound\n";
  for (const RatePoint& p : result.points) {
    out << format_double(p.eps) << ',' << format_double(p.err_sup) << ','
        << format_double(p.resid_dual) << ',' << format_double(p.q_max) << ',' << p.iters << ','
        << p.status << ',' << format_double(p.rho_hat) << ',' << format_double(p.h1_distance) << ','
        << format_double(p.aposteriori_bound) << '\n';
  }
  if (result.fit) {
    out << "fit," << format_double(result.fit->slope) << ',' << format_double(result.fit->r_squared)
        << ",," << result.fit->points << ",fitted,,,\n";
  } else {
    out << "fit,,,,0," << (result.floor_limited ? "floor-limited" : "not-fitted") << ",,,\n";
  }
  return out.str();
}

json rate_json(const RateStudyResult& result) {
  json points = json::array();
  for (const RatePoint& p : result.points) {
    points.push_back({{"eps", p.eps},
                      {"err_sup", number(p.err_sup)},
                      {"resid_dual", number(p.resid_dual)},
                      {"q_max", number(p.q_max)},
                      {"iters", p.iters},
                      {"status", p.status},
                      {"rho_hat", number(p.rho_hat)},
                      {"h1_distance", number(p.h1_distance)},
                      {"aposteriori_bound", number(p.aposteriori_bound)},
                      {"aposteriori_ratio", number(p.aposteriori_ratio())},
                      {"approximation_gap", number(p.approximation_gap)},
                      {"cutoff_constant", number(p.cutoff_constant)},
                      {"seconds", p.seconds},
                      {"message", p.message}});
  }
  return {{"variant", result.variant},
          {"points", points},
          {"fit", fit_json(result.fit, result.window)},
          {"floor_limited", result.floor_limited},
          {"monotonicity_violations", result.monotonicity_violations()},
          {"warnings", result.warnings}};
}

std::string decay_csv(const DecayResult& result, const std::string& column) {
  std::ostringstream out;
  out << "eps," << column << '\n';
  for (const DecayPoint& p : result.points) {
    out << format_double(p.eps) << ',' << format_double(p.value) << '\n';
  }
  if (result.fit) {
    out << "fit," << format_double(result.fit->slope) << '\n';
  } else {
    out << "fit,\n";
  }
  return out.str();
}

json decay_json(const DecayResult& result) {
  json points = json::array();
  for (const DecayPoint& p : result.points) points.push_back({{"eps", p.eps}, {"value", number(p.value)}});
  json doc = {{"points", points},
              {"fit", fit_json(result.fit, result.window)},
              {"monotone_decreasing", result.monotone_decreasing()},
              {"warnings", result.warnings}};
  if (result.expected_slope) doc["expected_slope"] = *result.expected_slope;
  return doc;
}

std::string loglog_svg(const std::vector<double>& eps, const std::vector<double>& values,
                       const std::optional<LogLogFit>& fit, const std::string& title,
                       const std::string& ylabel) {
  constexpr double W = 480, H = 360, L = 70, R = 20, T = 40, B = 50;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < eps.size() && i < values.size(); ++i) {
    if (eps[i] > 0 && values[i] > 0 && std::isfinite(values[i])) {
      pts.emplace_back(std::log10(eps[i]), std::log10(values[i]));
    }
  }
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title
      << "</text>\n";
  if (pts.empty()) {
    svg << "<text x=\"" << W / 2 << "\" y=\"" << H / 2 << "\" text-anchor=\"middle\">no data</text>\n</svg>\n";
    return svg.str();
  }
  double x0 = pts[0].first, x1 = x0, y0 = pts[0].second, y1 = y0;
  for (auto [x, y] : pts) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  x0 = std::floor(x0 * 10) / 10 - 0.1;
  x1 = std::ceil(x1 * 10) / 10 + 0.1;
  y0 = std::floor(y0 * 10) / 10 - 0.1;
  y1 = std::ceil(y1 * 10) / 10 + 0.1;
  auto sx = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto sy = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  svg << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\" font-size=\"12\">log10 eps</text>\n";
  svg << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << (T + H - B) / 2 << ")\">log10 " << ylabel << "</text>\n";
  for (double x : {x0, x1}) {
    svg << "<text x=\"" << sx(x) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
        << std::round(x * 100) / 100 << "</text>\n";
  }
  for (double y : {y0, y1}) {
    svg << "<text x=\"" << L - 6 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\" font-size=\"10\">"
        << std::round(y * 100) / 100 << "</text>\n";
  }
  if (fit) {
    const double ln10 = std::log(10.0);
    auto fy = [&](double x) { return (fit->intercept + fit->slope * x * ln10) / ln10; };
    svg << "<line x1=\"" << sx(x0) << "\" y1=\"" << sy(fy(x0)) << "\" x2=\"" << sx(x1) << "\" y2=\""
        << sy(fy(x1)) << "\" stroke=\"steelblue\" stroke-dasharray=\"4 3\"/>\n";
    svg << "<text x=\"" << L + 8 << "\" y=\"" << T + 16 << "\" font-size=\"12\">slope "
        << std::round(fit->slope * 1000) / 1000 << ", R2 " << std::round(fit->r_squared * 1000) / 1000
        << "</text>\n";
  }
  svg << "<polyline fill=\"none\" stroke=\"black\" points=\"";
  for (auto [x, y] : pts) svg << sx(x) << ',' << sy(y) << ' ';
  svg << "\"/>\n";
  for (auto [x, y] : pts) {
    svg << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3\" fill=\"crimson\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace homdef
