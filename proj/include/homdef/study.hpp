#ifndef HOMDEF_STUDY_HPP
#define HOMDEF_STUDY_HPP

#include "homdef/corrector.hpp"
#include "homdef/solver.hpp"

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace homdef {

/// Closed eps range used by a fit.
struct FitWindow {
  double eps_min = 0.0;
  double eps_max = std::numeric_limits<double>::infinity();

  bool contains(double eps) const { return eps >= eps_min && eps <= eps_max; }
};

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int points = 0;
};

/// Ordinary least squares of ln(value) against ln(eps) over the points inside the window.
LogLogFit fit_loglog(const std::vector<double>& eps, const std::vector<double>& values,
                     const FitWindow& window = {});

/// Rejects empty, non-positive or non-decreasing ladders.
void validate_ladder(const std::vector<double>& ladder);

/// Window that drops the largest eps of the ladder.
FitWindow default_window(const std::vector<double>& ladder);

/// A semilinear problem on a rectangle with eps-periodic coefficient and optional defect.
struct ProblemSpec {
  int dim;
  Box box;
  int mesh_subdivisions;
  int cell_subdivisions;
  PeriodicCoefficient a;
  std::optional<DefectCoefficient> b;
  Nonlinearity nl;
  Variant variant = Variant::plain_2d;
  AssemblyOptions assembly = {};
  SolverConfig solver = {};
  BallRule rule = {};
};

/// Everything that does not depend on eps: meshes, correctors, ahat and u0.
struct HomogenizedSetup {
  std::shared_ptr<const DomainMesh> mesh;
  std::shared_ptr<const Assembler> assembler;
  std::shared_ptr<const UnitCellGrid> grid;
  std::shared_ptr<const CorrectorSet> correctors;
  HomogenizedTensor ahat;
  std::shared_ptr<const NewtonResult> u0;
};

HomogenizedSetup prepare_homogenized(const ProblemSpec& spec);

struct RatePoint {
  double eps = 0.0;
  double err_sup = 0.0;
  double resid_dual = 0.0;
  double q_max = 0.0;
  int iters = 0;
  std::string status;
  double rho_hat = 0.0;
  double h1_distance = 0.0;
  double aposteriori_bound = 0.0;
  double approximation_gap = 0.0;  // sup |u_bar - u0|
  double cutoff_constant = 0.0;
  double seconds = 0.0;
  std::string message;

  bool converged() const { return status == "converged"; }
  double aposteriori_ratio() const {
    return aposteriori_bound > 0.0 ? h1_distance / aposteriori_bound : 0.0;
  }
};

struct StudyOptions {
  std::optional<FitWindow> window;  // default_window(ladder) when absent
  int threads = 1;
  /// Errors below this value everywhere mark the study as floor-limited (no fit).
  double floor = 1e-9;
  int min_fit_points = 4;
  /// Keep the eps-problem solutions (memory heavy on fine meshes).
  bool keep_solutions = false;
};

struct RateStudyResult {
  std::vector<RatePoint> points;
  std::optional<LogLogFit> fit;
  FitWindow window;
  bool floor_limited = false;
  std::vector<std::string> warnings;
  std::string variant;
  std::vector<DiscreteField> solutions;

  /// Steps where the error grew from eps to eps/2.
  int monotonicity_violations() const;
};

/// For each eps: cutoff, u_bar, frozen iteration, ||u_eps - u0||_inf.
RateStudyResult rate_study(const ProblemSpec& spec, const HomogenizedSetup& setup,
                           const std::vector<double>& ladder, const StudyOptions& options = {});

/// Rate from externally measured errors (same fit and floor logic as rate_study).
RateStudyResult rate_from_errors(const std::vector<double>& ladder, const std::vector<double>& errors,
                                 const StudyOptions& options = {});

struct DecayPoint {
  double eps = 0.0;
  double value = 0.0;
};

struct DecayResult {
  std::vector<DecayPoint> points;
  std::optional<LogLogFit> fit;
  FitWindow window;
  /// Reference slope for the measured quantity (d/2 for the compact defect surrogate).
  std::optional<double> expected_slope;
  std::vector<std::string> warnings;

  bool monotone_decreasing() const;
};

/// ||B_eps u|| surrogate for fixed interior field u.
DecayResult defect_decay_study(const Assembler& assembler, const DefectCoefficient& b,
                               const DiscreteField& u, const std::vector<double>& ladder,
                               const StudyOptions& options = {});

/// ||F_eps(u_bar_eps)|| surrogate for the configured variant.
DecayResult residual_decay_study(const ProblemSpec& spec, const HomogenizedSetup& setup,
                                 const std::vector<double>& ladder, const StudyOptions& options = {});

}  // namespace homdef

#endif  // HOMDEF_STUDY_HPP
