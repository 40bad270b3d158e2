#ifndef HOMDEF_SOLVER_HPP
#define HOMDEF_SOLVER_HPP

#include "homdef/assembly.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace homdef {

struct SolverConfig {
  /// Dual-norm surrogate of the residual at which an iterate is accepted.
  double tolerance = 1e-10;
  int max_iterations = 50;
  /// Backtracking (step halving) in full Newton.
  bool damping = true;
  /// Consecutive q_k >= 1 that declare the frozen iteration non-contractive.
  int monitor_window = 3;
  /// Residual growth factor over the initial residual that declares divergence.
  double growth_limit = 10.0;
  /// Relative stagnation tolerance of the singular value estimate.
  double spectral_tolerance = 1e-6;
  /// Operator applications allowed for the singular value estimate.
  int spectral_iterations = 4000;

  void validate() const;
};

struct NewtonResult {
  DiscreteField solution;
  int iterations = 0;
  std::vector<double> residuals;
  bool converged = false;
  /// Smallest singular value of the G-scaled Jacobian at the solution.
  double rho_hat = 0.0;
};

/// Damped Newton for F(u) = 0 with the Jacobian refactored every step.
NewtonResult newton_solve(const Assembler& assembler, const Diffusion& diffusion,
                          const Nonlinearity& nl, const DiscreteField& initial,
                          const SolverConfig& config = {}, bool estimate_rho = true);

/// Newton on the homogenized problem div(ahat grad u) = C(u). Throws DivergenceError when the
/// tolerance is not reached and NumericalError when the Jacobian is singular at the solution.
NewtonResult newton_homogenized(const Assembler& assembler, const TensorBlock& ahat,
                                const Nonlinearity& nl, const SolverConfig& config = {},
                                std::optional<DiscreteField> initial = std::nullopt);

/// non_contractive: q_k >= 1 for monitor_window steps in a row, residual growth beyond
/// growth_limit, a non-finite residual, or the iteration budget spent after some q_k >= 1.
enum class FrozenStatus { converged, non_contractive, max_iterations };
std::string status_name(FrozenStatus s);

struct FrozenNewtonReport {
  int iterations = 0;
  /// Residual surrogate of every iterate, starting with u_0.
  std::vector<double> residuals;
  /// Sup norm of every step u_{k+1} - u_k.
  std::vector<double> steps;
  /// q_k = step_k / step_{k-1}, k >= 2.
  std::vector<double> ratios;
  std::optional<DiscreteField> solution;
  FrozenStatus status = FrozenStatus::max_iterations;
  double rho_hat = 0.0;
  bool rho_converged = false;
  /// ||F(u_bar)|| surrogate.
  double initial_residual = 0.0;
  /// Discrete H^1 norm of u_final - u_bar.
  double h1_distance = 0.0;
  /// (2 / rho_hat) ||F(u_bar)||.
  double aposteriori_bound = 0.0;

  bool converged() const { return status == FrozenStatus::converged; }
  double max_ratio() const;
  double aposteriori_ratio() const {
    return aposteriori_bound > 0.0 ? h1_distance / aposteriori_bound : 0.0;
  }
};

/// u_{k+1} = u_k - J(u_bar)^{-1} F(u_k) with J factored once at u_bar, started from
/// `start` (u_bar when absent).
FrozenNewtonReport frozen_newton_solve(const Assembler& assembler, const Diffusion& diffusion,
                                       const Nonlinearity& nl, const DiscreteField& u_bar,
                                       const SolverConfig& config = {},
                                       std::optional<DiscreteField> start = std::nullopt,
                                       bool estimate_rho = true);

struct ProbeReport {
  double radius = 0.0;
  int trials = 0;
  int diverged = 0;
  /// Largest nodal distance between any converged restart and the reference solution.
  double spread = 0.0;
  std::vector<int> iterations;
  std::vector<std::string> statuses;
};

/// Restarts the frozen iteration from u_bar plus uniform nodal noise in [-radius, radius]
/// on interior dofs and compares the limits with `reference`.
ProbeReport local_uniqueness_probe(const Assembler& assembler, const Diffusion& diffusion,
                                   const Nonlinearity& nl, const DiscreteField& u_bar,
                                   const DiscreteField& reference, double radius, int trials,
                                   std::uint64_t seed, const SolverConfig& config = {});

}  // namespace homdef

#endif  // HOMDEF_SOLVER_HPP
