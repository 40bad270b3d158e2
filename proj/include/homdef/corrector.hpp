#ifndef HOMDEF_CORRECTOR_HPP
#define HOMDEF_CORRECTOR_HPP

#include "homdef/assembly.hpp"
#include "homdef/cell.hpp"

#include <optional>
#include <string>
#include <vector>

namespace homdef {

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int count, std::vector<double>& nodes, std::vector<double>& weights);

struct BallRule {
  int radial = 0;   // Gauss points in r (d = 2) or on [-1, 1] (d = 1); even
  int angular = 0;  // uniform angles, even, symmetric under x -> -x
};

/// Normalized bump rho(x) = exp(-1 / (1 - |x|^2)) / Z on the unit ball, with a
/// quadrature of rho whose weights sum to one.
class Mollifier {
 public:
  explicit Mollifier(int dim, BallRule rule = {});

  int dim() const { return dim_; }
  /// Normalized density.
  double operator()(const Point& x) const;
  /// Unnormalized radial profile.
  static double profile(double r);
  /// Z = int exp(-1 / (1 - |x|^2)) dx, computed to ~1e-13.
  double normalization() const { return normalization_; }
  /// Quadrature of the normalized density with the evaluation rule, before renormalization.
  double rule_mass() const { return rule_mass_; }

  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  int dim_;
  double normalization_ = 0.0;
  double rule_mass_ = 0.0;
  std::vector<Point> nodes_;
  std::vector<double> weights_;
};

/// [S_delta u](x) = int_Omega rho_delta(x - xi) u(xi) d xi, u extended by zero outside Omega.
class SteklovSmoother {
 public:
  SteklovSmoother(std::shared_ptr<const DomainMesh> mesh, double delta, const Mollifier& mollifier);

  double delta() const { return delta_; }
  /// Nodal P1 field (n components), evaluated at x: n values.
  SmallVector smooth_nodal(const Vector& values, int components, const Point& x) const;
  /// Elementwise constant data, one row per element.
  Eigen::RowVectorXd smooth_elemental(const Matrix& values, const Point& x) const;

 private:
  std::shared_ptr<const DomainMesh> mesh_;
  double delta_;
  const Mollifier* mollifier_;
};

/// delta^{d/r} max_x |S_delta u(x)| / ||u||_{L^r} for a scalar P1 field, the max taken
/// over `points` (all nodes when empty).
double steklov_bound_ratio(std::shared_ptr<const DomainMesh> mesh, const Vector& u, double delta,
                           double r, const Mollifier& mollifier,
                           const std::vector<Point>& points = {});

/// ||rho||_{L^{r'}}, 1/r + 1/r' = 1: the sharp constant in the scaled sup bound, since
/// the supremum over ||u||_r = 1 of |S_delta u(x)| is ||rho_delta(x - .)||_{r'}.
double steklov_bound_constant(const Mollifier& mollifier, double r);

/// rho((xi - x) / delta)^{r'-1} at the nodes: the field attaining that supremum at x.
Vector steklov_extremal_field(const DomainMesh& mesh, const Mollifier& mollifier, const Point& x,
                              double delta, double r);

/// L^r norm of a scalar P1 field (edge-midpoint rule on |u|^r).
double lr_norm(const DomainMesh& mesh, const Vector& u, double r);

struct CutoffFamily {
  double eps = 0.0;
  Vector values;  // per node
  /// eps * max |grad eta| over elements.
  double gradient_constant = 0.0;
};

/// eta = clamp((dist - eps) / eps, 0, 1), one neighbour-averaging pass, then eta = 0 on
/// the strip of width eps and eta = 1 beyond 2 eps. Rejects eps when no node lies beyond 2 eps.
CutoffFamily build_cutoff(const DomainMesh& mesh, double eps);

/// Volume-weighted average of element gradients at the nodes, row = node, column = a*d + k.
Matrix recover_gradient(const DiscreteField& u);

enum class Variant { smoothed_2d, plain_2d, plain_scalar };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

/// delta_eps = 1 / |ln eps|, or 0.3 when eps >= 1/e.
double smoothing_radius(double eps);

struct ApproximateSolution {
  DiscreteField field;
  Variant variant;
  double eps = 0.0;
  double delta = 0.0;  // zero for the plain variants
  double sup_difference = 0.0;
};

struct ApproximationOptions {
  double resolution_floor = 8.0;
  bool allow_underresolved = false;
  BallRule rule = {};
};

/// u_bar^a = u0^a + eps eta G_k^g v_k^{ag}(x / eps), G = S_delta grad u0 (smoothed) or the
/// recovered nodal gradient (plain).
ApproximateSolution build_approximate_solution(Variant variant, const DiscreteField& u0,
                                               const CorrectorSet& correctors, double eps,
                                               const CutoffFamily& cutoff,
                                               const ApproximationOptions& options = {});

}  // namespace homdef

#endif  // HOMDEF_CORRECTOR_HPP
