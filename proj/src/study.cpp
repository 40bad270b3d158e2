#include "homdef/study.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace homdef {

namespace {

template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  threads = std::clamp(threads, 1, std::max(1, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::string format_eps(double eps) {
  std::ostringstream out;
  out << eps;
  return out.str();
}

std::optional<LogLogFit> fit_if_possible(const std::vector<double>& eps,
                                         const std::vector<double>& values,
                                         const std::vector<bool>& usable, const FitWindow& window,
                                         int min_points, std::vector<std::string>& warnings) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (usable[i] && window.contains(eps[i]) && values[i] > 0.0) {
      xs.push_back(eps[i]);
      ys.push_back(values[i]);
    }
  }
  if (static_cast<int>(xs.size()) < min_points) {
    warnings.push_back("only " + std::to_string(xs.size()) + " usable points in the fit window (need " +
                       std::to_string(min_points) + "); slope not fitted");
    return std::nullopt;
  }
  return fit_loglog(xs, ys);
}

}  // namespace

LogLogFit fit_loglog(const std::vector<double>& eps, const std::vector<double>& values,
                     const FitWindow& window) {
  if (eps.size() != values.size()) throw ConfigError("fit_loglog: eps and values differ in length");
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!window.contains(eps[i])) continue;
    if (!(eps[i] > 0.0) || !(values[i] > 0.0)) {
      throw NumericalError("fit_loglog: non-positive value at eps = " + format_eps(eps[i]));
    }
    x.push_back(std::log(eps[i]));
    y.push_back(std::log(values[i]));
  }
  if (x.size() < 2) throw NumericalError("fit_loglog: need at least two points in the window");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw NumericalError("fit_loglog: all eps coincide");
  LogLogFit fit;
  fit.points = static_cast<int>(x.size());
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    sse += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  if (x.size() == 2) fit.r_squared = 1.0;
  return fit;
}

void validate_ladder(const std::vector<double>& ladder) {
  if (ladder.empty()) throw ConfigError("eps ladder is empty");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (!(ladder[i] > 0.0)) throw ConfigError("eps ladder entries must be positive");
    if (i > 0 && !(ladder[i] < ladder[i - 1])) {
      throw ConfigError("eps ladder must be strictly decreasing");
    }
  }
}

FitWindow default_window(const std::vector<double>& ladder) {
  validate_ladder(ladder);
  FitWindow w;
  if (ladder.size() > 1) w.eps_max = ladder[1];
  return w;
}

HomogenizedSetup prepare_homogenized(const ProblemSpec& spec) {
  if (spec.a.dim() != spec.dim || spec.nl.dim() != spec.dim) {
    throw ConfigError("coefficient, nonlinearity and mesh dimensions differ");
  }
  if (spec.nl.components() != spec.a.components()) {
    throw ConfigError("nonlinearity and coefficient have different numbers of components");
  }
  if (spec.b && (spec.b->components() != spec.a.components() || spec.b->dim() != spec.dim)) {
    throw ConfigError("defect does not match the coefficient shape");
  }
  HomogenizedSetup setup;
  setup.mesh = std::make_shared<const DomainMesh>(
      build_domain_mesh(spec.dim, spec.box, spec.mesh_subdivisions));
  setup.assembler = std::make_shared<const Assembler>(setup.mesh, spec.a.components(), spec.assembly);
  setup.grid = std::make_shared<const UnitCellGrid>(build_unit_cell_grid(spec.dim, spec.cell_subdivisions));
  setup.correctors = std::make_shared<const CorrectorSet>(solve_cell_problems(setup.grid, spec.a));
  setup.ahat = homogenized_tensor(*setup.grid, spec.a, *setup.correctors);
  setup.u0 = std::make_shared<const NewtonResult>(
      newton_homogenized(*setup.assembler, setup.ahat.value, spec.nl, spec.solver));
  return setup;
}

int RateStudyResult::monotonicity_violations() const {
  int count = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].converged() && points[i - 1].converged() && points[i].err_sup > points[i - 1].err_sup) {
      ++count;
    }
  }
  return count;
}

RateStudyResult rate_from_errors(const std::vector<double>& ladder, const std::vector<double>& errors,
                                 const StudyOptions& options) {
  validate_ladder(ladder);
  if (ladder.size() != errors.size()) throw ConfigError("ladder and errors differ in length");
  RateStudyResult result;
  result.window = options.window.value_or(default_window(ladder));
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    RatePoint p;
    p.eps = ladder[i];
    p.err_sup = errors[i];
    p.status = "converged";
    result.points.push_back(p);
  }
  const double worst = *std::max_element(errors.begin(), errors.end());
  if (worst < options.floor) {
    result.floor_limited = true;
    result.warnings.push_back("errors are at the discretization floor; slope not fitted");
    return result;
  }
  result.fit = fit_if_possible(ladder, errors, std::vector<bool>(ladder.size(), true), result.window,
                               options.min_fit_points, result.warnings);
  return result;
}

RateStudyResult rate_study(const ProblemSpec& spec, const HomogenizedSetup& setup,
                           const std::vector<double>& ladder, const StudyOptions& options) {
  validate_ladder(ladder);
  const DomainMesh& mesh = *setup.mesh;
  const double eps_min = ladder.back();
  const bool oscillates = !spec.a.is_constant() || spec.b.has_value();
  if (oscillates && !spec.assembly.allow_underresolved &&
      mesh.max_diameter > eps_min / spec.assembly.resolution_floor * (1 + 1e-12)) {
    throw ConfigError("shared mesh too coarse for the ladder: h = " + std::to_string(mesh.max_diameter) +
                      " exceeds eps_min/" + std::to_string(spec.assembly.resolution_floor));
  }
  RateStudyResult result;
  result.variant = variant_name(spec.variant);
  result.window = options.window.value_or(default_window(ladder));
  result.points.resize(ladder.size());
  if (options.keep_solutions) result.solutions.assign(ladder.size(), setup.u0->solution);

  const DiscreteField& u0 = setup.u0->solution;
  ApproximationOptions approx{spec.assembly.resolution_floor, spec.assembly.allow_underresolved, spec.rule};
  parallel_for(static_cast<int>(ladder.size()), options.threads, [&](int i) {
    const auto start = std::chrono::steady_clock::now();
    RatePoint& p = result.points[i];
    p.eps = ladder[i];
    try {
      const CutoffFamily cutoff = build_cutoff(mesh, p.eps);
      p.cutoff_constant = cutoff.gradient_constant;
      const ApproximateSolution ubar =
          build_approximate_solution(spec.variant, u0, *setup.correctors, p.eps, cutoff, approx);
      p.approximation_gap = ubar.sup_difference;
      const Diffusion diffusion = Diffusion::oscillating(spec.a, p.eps, spec.b);
      const FrozenNewtonReport report =
          frozen_newton_solve(*setup.assembler, diffusion, spec.nl, ubar.field, spec.solver);
      p.status = status_name(report.status);
      p.iters = report.iterations;
      p.q_max = report.max_ratio();
      p.resid_dual = report.initial_residual;
      p.rho_hat = report.rho_hat;
      p.h1_distance = report.h1_distance;
      p.aposteriori_bound = report.aposteriori_bound;
      if (report.converged()) {
        DiscreteField diff(setup.mesh, u0.components(), report.solution->values() - u0.values());
        p.err_sup = diff.sup_norm();
        if (options.keep_solutions) result.solutions[i] = *report.solution;
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      p.status = "failed";
      p.message = e.what();
    }
    p.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });

  std::vector<double> eps;
  std::vector<double> errors;
  std::vector<bool> usable;
  double worst = 0.0;
  for (const RatePoint& p : result.points) {
    eps.push_back(p.eps);
    errors.push_back(p.err_sup);
    usable.push_back(p.converged());
    if (!p.converged()) {
      result.warnings.push_back("eps = " + format_eps(p.eps) + " " + p.status +
                                (p.message.empty() ? "" : ": " + p.message) + "; excluded from the fit");
    } else {
      worst = std::max(worst, p.err_sup);
    }
  }
  if (worst < options.floor) {
    result.floor_limited = true;
    result.warnings.push_back("errors are at the discretization floor; slope not fitted");
    return result;
  }
  result.fit = fit_if_possible(eps, errors, usable, result.window, options.min_fit_points, result.warnings);
  return result;
}

bool DecayResult::monotone_decreasing() const {
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i].value < points[i - 1].value)) return false;
  }
  return true;
}

DecayResult defect_decay_study(const Assembler& assembler, const DefectCoefficient& b,
                               const DiscreteField& u, const std::vector<double>& ladder,
                               const StudyOptions& options) {
  validate_ladder(ladder);
  DecayResult result;
  result.window = options.window.value_or(default_window(ladder));
  if (b.support_radius()) result.expected_slope = 0.5 * assembler.mesh().dim;
  const Vector interior = assembler.layout().restrict(u.values());
  result.points.resize(ladder.size());
  parallel_for(static_cast<int>(ladder.size()), options.threads, [&](int i) {
    const Diffusion diffusion = Diffusion::defect_only(b, ladder[i]);
    const SparseOperator B = assembler.stiffness(diffusion);
    result.points[i] = DecayPoint{ladder[i], assembler.dual_norm(B.matrix * interior)};
  });
  std::vector<double> eps;
  std::vector<double> values;
  double worst = 0.0;
  for (const auto& p : result.points) {
    eps.push_back(p.eps);
    values.push_back(p.value);
    worst = std::max(worst, p.value);
  }
  if (worst < options.floor) {
    result.warnings.push_back("defect term vanishes at every eps; slope not fitted");
    return result;
  }
  result.fit = fit_if_possible(eps, values, std::vector<bool>(eps.size(), true), result.window,
                               std::min(options.min_fit_points, 2), result.warnings);
  return result;
}

DecayResult residual_decay_study(const ProblemSpec& spec, const HomogenizedSetup& setup,
                                 const std::vector<double>& ladder, const StudyOptions& options) {
  validate_ladder(ladder);
  DecayResult result;
  result.window = options.window.value_or(default_window(ladder));
  result.points.resize(ladder.size());
  const DiscreteField& u0 = setup.u0->solution;
  ApproximationOptions approx{spec.assembly.resolution_floor, spec.assembly.allow_underresolved, spec.rule};
  parallel_for(static_cast<int>(ladder.size()), options.threads, [&](int i) {
    const double eps = ladder[i];
    const CutoffFamily cutoff = build_cutoff(*setup.mesh, eps);
    const ApproximateSolution ubar =
        build_approximate_solution(spec.variant, u0, *setup.correctors, eps, cutoff, approx);
    const Diffusion diffusion = Diffusion::oscillating(spec.a, eps, spec.b);
    const Vector F = setup.assembler->residual(diffusion, spec.nl, ubar.field);
    result.points[i] = DecayPoint{eps, setup.assembler->dual_norm(F)};
  });
  std::vector<double> eps;
  std::vector<double> values;
  double worst = 0.0;
  for (const auto& p : result.points) {
    eps.push_back(p.eps);
    values.push_back(p.value);
    worst = std::max(worst, p.value);
  }
  if (worst < options.floor) {
    result.warnings.push_back("residual is at the discretization floor; slope not fitted");
    return result;
  }
  result.fit = fit_if_possible(eps, values, std::vector<bool>(eps.size(), true), result.window,
                               std::min(options.min_fit_points, 2), result.warnings);
  return result;
}

}  // namespace homdef
