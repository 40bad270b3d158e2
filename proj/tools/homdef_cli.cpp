// homdef: cell problems, frozen-Jacobian solves and eps-sweep studies from a JSON config.

#include "homdef/config.hpp"
#include "homdef/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>

namespace {

using namespace homdef;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitNumerical = 4;

struct Flags {
  std::string config;
  std::string out;
  int threads = 0;
  std::optional<std::uint64_t> seed;
};

ExperimentConfig load(const Flags& flags) {
  ExperimentConfig cfg = load_config(flags.config);
  if (!flags.out.empty()) cfg.output = flags.out;
  if (flags.threads > 0) cfg.threads = flags.threads;
  if (flags.seed) cfg.seed = *flags.seed;
  return cfg;
}

std::string path_in(const ExperimentConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.output) / name).string();
}

double require_eps(const ExperimentConfig& cfg) {
  if (!cfg.eps) throw ConfigError("missing key 'eps' in config (needed by this command)");
  return *cfg.eps;
}

const std::vector<double>& require_ladder(const ExperimentConfig& cfg) {
  if (cfg.ladder.empty()) throw ConfigError("missing key 'ladder' in config (needed by this command)");
  return cfg.ladder;
}

StudyOptions study_options(const ExperimentConfig& cfg) {
  StudyOptions o;
  o.window = cfg.fit_window;
  o.threads = cfg.threads;
  return o;
}

void print_fit(const std::optional<LogLogFit>& fit, const std::string& what) {
  if (fit) {
    std::cout << what << " slope " << fit->slope << "  R^2 " << fit->r_squared << "  (" << fit->points
              << " points)\n";
  } else {
    std::cout << what << " slope not fitted\n";
  }
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_cell(const ExperimentConfig& cfg) {
  const ProblemSpec& p = cfg.problem;
  auto grid = std::make_shared<const UnitCellGrid>(build_unit_cell_grid(p.dim, p.cell_subdivisions));
  const CorrectorSet correctors = solve_cell_problems(grid, p.a);
  const HomogenizedTensor ahat = homogenized_tensor(*grid, p.a, correctors);
  write_text(path_in(cfg, "correctors.csv"), correctors_csv(correctors));
  json doc = homogenized_json(ahat);
  doc["cell_mesh"] = mesh_summary(*grid);
  if (p.a.components() == 1) {
    const VoigtReussBounds vr = voigt_reuss_bounds(*grid, p.a);
    const auto [lower, upper] = voigt_reuss_margins(ahat, vr);
    doc["voigt_reuss"] = {{"harmonic_margin", lower}, {"arithmetic_margin", upper}};
  }
  write_json(path_in(cfg, "ahat.json"), doc);
  std::cout << "ahat =\n" << ahat.value << "\ncoercivity " << ahat.coercivity << "\nwrote "
            << path_in(cfg, "ahat.json") << ", " << path_in(cfg, "correctors.csv") << '\n';
  return 0;
}

struct SolveOutcome {
  HomogenizedSetup setup;
  ApproximateSolution ubar;
  FrozenNewtonReport report;
  Diffusion diffusion;
};

SolveOutcome solve_at_eps(const ExperimentConfig& cfg, double eps) {
  const ProblemSpec& p = cfg.problem;
  HomogenizedSetup setup = prepare_homogenized(p);
  const CutoffFamily cutoff = build_cutoff(*setup.mesh, eps);
  ApproximationOptions approx{p.assembly.resolution_floor, p.assembly.allow_underresolved, p.rule};
  ApproximateSolution ubar =
      build_approximate_solution(p.variant, setup.u0->solution, *setup.correctors, eps, cutoff, approx);
  Diffusion diffusion = Diffusion::oscillating(p.a, eps, p.b);
  FrozenNewtonReport report = frozen_newton_solve(*setup.assembler, diffusion, p.nl, ubar.field, p.solver);
  return {std::move(setup), std::move(ubar), std::move(report), std::move(diffusion)};
}

int cmd_solve(const ExperimentConfig& cfg) {
  const double eps = require_eps(cfg);
  const SolveOutcome s = solve_at_eps(cfg, eps);
  json doc = frozen_report_json(s.report);
  doc["eps"] = eps;
  doc["variant"] = variant_name(s.ubar.variant);
  doc["smoothing_radius"] = s.ubar.delta;
  doc["approximation_gap"] = s.ubar.sup_difference;
  doc["mesh"] = mesh_summary(*s.setup.mesh);
  doc["homogenized"] = newton_result_json(*s.setup.u0);
  if (s.report.solution) {
    doc["err_sup"] = DiscreteField(s.setup.mesh, s.report.solution->components(),
                                   s.report.solution->values() - s.setup.u0->solution.values())
                         .sup_norm();
  }
  write_json(path_in(cfg, "report.json"), doc);
  write_text(path_in(cfg, "solution.csv"),
             solution_csv(s.setup.u0->solution, s.ubar.field, s.report.solution));
  std::cout << "frozen iteration: " << status_name(s.report.status) << " after " << s.report.iterations
            << " iterations, max q " << s.report.max_ratio() << ", rho_hat " << s.report.rho_hat << '\n';
  if (!s.report.converged()) {
    std::cerr << "error: frozen iteration " << status_name(s.report.status)
              << "; eps may be too large for contraction at this approximate solution\n";
    return kExitDivergence;
  }
  std::cout << "||u_eps - u_bar||_H1 = " << s.report.h1_distance << " <= " << s.report.aposteriori_ratio()
            << " x (2/rho_hat)||F(u_bar)||\nwrote " << path_in(cfg, "report.json") << '\n';
  return 0;
}

json rate_metadata(const ExperimentConfig& cfg) {
  json meta = {{"dimension", cfg.problem.dim},
               {"components", cfg.problem.a.components()},
               {"mesh_subdivisions", cfg.problem.mesh_subdivisions},
               {"cell_subdivisions", cfg.problem.cell_subdivisions},
               {"defect", cfg.problem.b.has_value()},
               {"seed", cfg.seed}};
  if (cfg.problem.a.components() == 1) {
    meta["note"] =
        "Scalar problem: the classical O(eps) sup-norm rate is expected for smooth data. Whether it "
        "survives for general bounded measurable coefficients is open; the slope is measured, not asserted.";
  }
  return meta;
}

int cmd_rate(const ExperimentConfig& cfg) {
  const auto& ladder = require_ladder(cfg);
  const HomogenizedSetup setup = prepare_homogenized(cfg.problem);
  const RateStudyResult result = rate_study(cfg.problem, setup, ladder, study_options(cfg));
  write_text(path_in(cfg, "rate.csv"), rate_csv(result));
  json doc = rate_json(result);
  doc["metadata"] = rate_metadata(cfg);
  write_json(path_in(cfg, "rate.json"), doc);
  std::vector<double> eps, err;
  for (const auto& p : result.points) {
    std::cout << "eps " << std::setw(10) << p.eps << "  err_sup " << std::setw(12) << p.err_sup << "  q_max "
              << std::setw(10) << p.q_max << "  iters " << p.iters << "  " << p.status << '\n';
    if (p.converged()) {
      eps.push_back(p.eps);
      err.push_back(p.err_sup);
    }
  }
  write_text(path_in(cfg, "rate.svg"), loglog_svg(eps, err, result.fit, "sup-norm error", "err_sup"));
  print_fit(result.fit, "rate");
  print_warnings(result.warnings);
  for (const auto& p : result.points) {
    if (p.status == "non-contractive") return kExitDivergence;
  }
  return 0;
}

int cmd_defect(const ExperimentConfig& cfg) {
  const auto& ladder = require_ladder(cfg);
  const ProblemSpec& p = cfg.problem;
  if (!p.b) throw ConfigError("missing key 'defect' in config (needed by the defect study)");
  auto mesh = std::make_shared<const DomainMesh>(build_domain_mesh(p.dim, p.box, p.mesh_subdivisions));
  if (p.a.components() != 1) throw ConfigError("the defect study uses a scalar test field; set components to 1");
  AssemblyOptions options = p.assembly;
  const Assembler assembler(mesh, 1, options);
  const DiscreteField u = cfg.test_field.kind == "spike" ? spike_test_field(mesh, cfg.test_field.exponent)
                                                         : sine_test_field(mesh);
  const DecayResult result = defect_decay_study(assembler, *p.b, u, ladder, study_options(cfg));
  write_text(path_in(cfg, "defect.csv"), decay_csv(result, "defect_dual"));
  json doc = decay_json(result);
  doc["test_field"] = {{"kind", cfg.test_field.kind}, {"exponent", cfg.test_field.exponent}};
  write_json(path_in(cfg, "defect.json"), doc);
  std::vector<double> eps, val;
  for (const auto& d : result.points) {
    std::cout << "eps " << std::setw(10) << d.eps << "  ||B_eps u|| " << d.value << '\n';
    eps.push_back(d.eps);
    val.push_back(d.value);
  }
  write_text(path_in(cfg, "defect.svg"), loglog_svg(eps, val, result.fit, "defect term", "dual norm"));
  print_fit(result.fit, "defect");
  print_warnings(result.warnings);
  return 0;
}

int cmd_residual(const ExperimentConfig& cfg) {
  const auto& ladder = require_ladder(cfg);
  const HomogenizedSetup setup = prepare_homogenized(cfg.problem);
  const DecayResult result = residual_decay_study(cfg.problem, setup, ladder, study_options(cfg));
  write_text(path_in(cfg, "residual.csv"), decay_csv(result, "resid_dual"));
  json doc = decay_json(result);
  doc["variant"] = variant_name(cfg.problem.variant);
  write_json(path_in(cfg, "residual.json"), doc);
  std::vector<double> eps, val;
  for (const auto& d : result.points) {
    std::cout << "eps " << std::setw(10) << d.eps << "  ||F(u_bar)|| " << d.value << '\n';
    eps.push_back(d.eps);
    val.push_back(d.value);
  }
  write_text(path_in(cfg, "residual.svg"), loglog_svg(eps, val, result.fit, "residual of u_bar", "dual norm"));
  print_fit(result.fit, "residual");
  print_warnings(result.warnings);
  return 0;
}

int cmd_probe(const ExperimentConfig& cfg) {
  const double eps = require_eps(cfg);
  const SolveOutcome s = solve_at_eps(cfg, eps);
  if (!s.report.converged()) {
    std::cerr << "error: reference solve " << status_name(s.report.status) << "; nothing to probe\n";
    return kExitDivergence;
  }
  const ProbeReport probe =
      local_uniqueness_probe(*s.setup.assembler, s.diffusion, cfg.problem.nl, s.ubar.field,
                             *s.report.solution, cfg.probe.radius, cfg.probe.trials, cfg.seed, cfg.problem.solver);
  json doc = probe_report_json(probe);
  doc["eps"] = eps;
  doc["seed"] = cfg.seed;
  doc["reference"] = frozen_report_json(s.report);
  write_json(path_in(cfg, "probe.json"), doc);
  std::cout << probe.trials << " restarts within sup distance " << probe.radius << ": " << probe.diverged
            << " diverged, spread " << probe.spread << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic homogenization with localized defects for semilinear elliptic problems"};
  app.require_subcommand(1, 1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"cell", "solve the cell problems; write correctors.csv and ahat.json"},
      {"solve", "frozen-Jacobian solve at one eps; write solution.csv and report.json"},
      {"rate", "sup-norm error against eps over the ladder"},
      {"defect", "decay of the defect term on a fixed test field"},
      {"residual", "decay of the residual of the approximate solution"},
      {"probe", "restart the frozen iteration from random perturbations"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "experiment config (JSON)")->required();
    sub->add_option("--out", flags.out, "output directory (overrides config)");
    sub->add_option("--threads", flags.threads, "parallel ladder points")->check(CLI::PositiveNumber);
    sub->add_option("--seed", flags.seed, "random seed (overrides config)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const ExperimentConfig cfg = load(flags);
    if (command == "cell") return cmd_cell(cfg);
    if (command == "solve") return cmd_solve(cfg);
    if (command == "rate") return cmd_rate(cfg);
    if (command == "defect") return cmd_defect(cfg);
    if (command == "residual") return cmd_residual(cfg);
    return cmd_probe(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
