#include "homdef/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace homdef {

void SolverConfig::validate() const {
  if (!(tolerance > 0.0)) throw ConfigError("solver tolerance must be positive");
  if (max_iterations < 1) throw ConfigError("solver max_iterations must be at least 1");
  if (monitor_window < 1) throw ConfigError("solver monitor_window must be at least 1");
  if (!(growth_limit > 1.0)) throw ConfigError("solver growth_limit must exceed 1");
  if (!(spectral_tolerance > 0.0)) throw ConfigError("spectral_tolerance must be positive");
  if (spectral_iterations < 1) throw ConfigError("spectral_iterations must be at least 1");
}

std::string status_name(FrozenStatus s) {
  switch (s) {
    case FrozenStatus::converged: return "converged";
    case FrozenStatus::non_contractive: return "non-contractive";
    case FrozenStatus::max_iterations: return "max-iterations";
  }
  return "unknown";
}

double FrozenNewtonReport::max_ratio() const {
  return ratios.empty() ? 0.0 : *std::max_element(ratios.begin(), ratios.end());
}

NewtonResult newton_solve(const Assembler& assembler, const Diffusion& diffusion,
                          const Nonlinearity& nl, const DiscreteField& initial,
                          const SolverConfig& config, bool estimate_rho) {
  config.validate();
  const DofLayout& layout = assembler.layout();
  auto mesh = assembler.mesh_ptr();
  const int n = assembler.components();
  Vector u = layout.restrict(initial.values());
  auto field = [&](const Vector& interior) { return DiscreteField::from_interior(mesh, n, interior); };

  NewtonResult result{field(u), 0, {}, false, 0.0};
  Vector F = assembler.residual(diffusion, nl, result.solution);
  double r = assembler.dual_norm(F);
  result.residuals.push_back(r);
  std::optional<Factorization> jac;
  for (int it = 0; it < config.max_iterations && r > config.tolerance; ++it) {
    jac.emplace(assembler.jacobian(diffusion, nl, result.solution), &assembler.ordering());
    const Vector step = jac->solve(F);
    double t = 1.0;
    Vector trial = u - step;
    DiscreteField trial_field = field(trial);
    Vector trial_F = assembler.residual(diffusion, nl, trial_field);
    double trial_r = assembler.dual_norm(trial_F);
    if (config.damping) {
      for (int halving = 0; halving < 30 && !(trial_r < r); ++halving) {
        t *= 0.5;
        trial = u - t * step;
        trial_field = field(trial);
        trial_F = assembler.residual(diffusion, nl, trial_field);
        trial_r = assembler.dual_norm(trial_F);
      }
    }
    u = std::move(trial);
    result.solution = std::move(trial_field);
    F = std::move(trial_F);
    r = trial_r;
    result.iterations = it + 1;
    result.residuals.push_back(r);
    if (!std::isfinite(r)) break;
  }
  result.converged = r <= config.tolerance;
  if (result.converged && estimate_rho) {
    const Factorization final_jac(assembler.jacobian(diffusion, nl, result.solution),
                                  &assembler.ordering());
    result.rho_hat = smallest_singular_value(final_jac, assembler.dual().gram(),
                                             config.spectral_tolerance, config.spectral_iterations)
                          .value;
  }
  return result;
}

NewtonResult newton_homogenized(const Assembler& assembler, const TensorBlock& ahat,
                                const Nonlinearity& nl, const SolverConfig& config,
                                std::optional<DiscreteField> initial) {
  const int n = assembler.components();
  const int d = assembler.mesh().dim;
  if (legendre_minimum(ahat) <= 0.0) throw NonCoerciveError("homogenized tensor is not coercive");
  const Diffusion diffusion = Diffusion::homogenized(ahat, n, d);
  const DiscreteField start = initial ? *initial : DiscreteField(assembler.mesh_ptr(), n);
  NewtonResult result = newton_solve(assembler, diffusion, nl, start, config);
  if (!result.converged) {
    throw DivergenceError("Newton on the homogenized problem did not reach tolerance " +
                          std::to_string(config.tolerance) + " (last residual " +
                          std::to_string(result.residuals.back()) + ")");
  }
  if (!(result.rho_hat > 1e-10)) {
    throw NumericalError("homogenized solution is degenerate: smallest singular value " +
                         std::to_string(result.rho_hat));
  }
  return result;
}

FrozenNewtonReport frozen_newton_solve(const Assembler& assembler, const Diffusion& diffusion,
                                       const Nonlinearity& nl, const DiscreteField& u_bar,
                                       const SolverConfig& config,
                                       std::optional<DiscreteField> start, bool estimate_rho) {
  config.validate();
  const DofLayout& layout = assembler.layout();
  auto mesh = assembler.mesh_ptr();
  const int n = assembler.components();
  FrozenNewtonReport report;

  const Factorization jac(assembler.jacobian(diffusion, nl, u_bar), &assembler.ordering());
  const Vector F_bar = assembler.residual(diffusion, nl, u_bar);
  report.initial_residual = assembler.dual_norm(F_bar);
  if (estimate_rho) {
    const SpectralEstimate est = smallest_singular_value(
        jac, assembler.dual().gram(), config.spectral_tolerance, config.spectral_iterations);
    report.rho_hat = est.value;
    report.rho_converged = est.converged;
  }

  const Vector u_bar_interior = layout.restrict(u_bar.values());
  Vector u = start ? layout.restrict(start->values()) : u_bar_interior;
  DiscreteField current = DiscreteField::from_interior(mesh, n, u);
  Vector F = start ? assembler.residual(diffusion, nl, current) : F_bar;
  double r = assembler.dual_norm(F);
  const double r0 = r;
  report.residuals.push_back(r);
  int expanding = 0;
  report.status = FrozenStatus::max_iterations;
  if (r <= config.tolerance) report.status = FrozenStatus::converged;
  for (int it = 0; it < config.max_iterations && report.status != FrozenStatus::converged; ++it) {
    const Vector step = jac.solve(F);
    u -= step;
    current = DiscreteField::from_interior(mesh, n, u);
    F = assembler.residual(diffusion, nl, current);
    r = assembler.dual_norm(F);
    report.iterations = it + 1;
    report.residuals.push_back(r);
    report.steps.push_back(step.cwiseAbs().maxCoeff());
    if (report.steps.size() >= 2) {
      const double prev = report.steps[report.steps.size() - 2];
      const double q = prev > 0.0 ? report.steps.back() / prev : 0.0;
      report.ratios.push_back(q);
      expanding = q >= 1.0 ? expanding + 1 : 0;
    }
    if (r <= config.tolerance) {
      report.status = FrozenStatus::converged;
    } else if (!std::isfinite(r) || expanding >= config.monitor_window ||
               r > config.growth_limit * r0) {
      report.status = FrozenStatus::non_contractive;
      break;
    }
  }
  // Out of iterations after an expanding step: the map was not a contraction on this path.
  if (report.status == FrozenStatus::max_iterations && report.max_ratio() >= 1.0) {
    report.status = FrozenStatus::non_contractive;
  }
  report.solution = current;
  report.h1_distance = assembler.h1_norm(u - u_bar_interior);
  if (report.rho_hat > 0.0) report.aposteriori_bound = 2.0 / report.rho_hat * report.initial_residual;
  return report;
}

ProbeReport local_uniqueness_probe(const Assembler& assembler, const Diffusion& diffusion,
                                   const Nonlinearity& nl, const DiscreteField& u_bar,
                                   const DiscreteField& reference, double radius, int trials,
                                   std::uint64_t seed, const SolverConfig& config) {
  if (radius < 0.0) throw ConfigError("probe radius must be nonnegative");
  if (trials < 1) throw ConfigError("probe needs at least one trial");
  ProbeReport report;
  report.radius = radius;
  report.trials = trials;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-radius, radius);
  const DofLayout& layout = assembler.layout();
  const int n = assembler.components();
  for (int t = 0; t < trials; ++t) {
    DiscreteField start = u_bar;
    for (int node = 0; node < start.mesh().num_nodes(); ++node) {
      if (layout.interior_index[node] < 0) continue;
      for (int c = 0; c < n; ++c) start(node, c) += noise(rng);
    }
    const FrozenNewtonReport run =
        frozen_newton_solve(assembler, diffusion, nl, u_bar, config, start, false);
    report.iterations.push_back(run.iterations);
    report.statuses.push_back(status_name(run.status));
    if (!run.converged()) {
      ++report.diverged;
      continue;
    }
    const double dist = (run.solution->values() - reference.values()).cwiseAbs().maxCoeff();
    report.spread = std::max(report.spread, dist);
  }
  return report;
}

}  // namespace homdef
