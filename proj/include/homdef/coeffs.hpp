#ifndef HOMDEF_COEFFS_HPP
#define HOMDEF_COEFFS_HPP

#include "homdef/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace homdef {

enum class CoefficientKind { constant, laminate, checkerboard, trig, coupled_laminate, table };

/// Z^d-periodic diffusion tensor y -> a_{ij}^{ab}(y), flattened as a TensorBlock.
class PeriodicCoefficient {
 public:
  /// Evaluator receives y already reduced to [0,1)^d.
  using Evaluator = std::function<TensorBlock(const Point&)>;

  PeriodicCoefficient(int components, int dim, Evaluator eval, CoefficientKind kind,
                      std::string name);

  TensorBlock operator()(const Point& y) const;

  int components() const { return components_; }
  int dim() const { return dim_; }
  int block_size() const { return components_ * dim_; }
  CoefficientKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  bool is_constant() const { return kind_ == CoefficientKind::constant; }

 private:
  int components_;
  int dim_;
  Evaluator eval_;
  CoefficientKind kind_;
  std::string name_;
};

PeriodicCoefficient constant_coefficient(const TensorBlock& value, int components, int dim);
/// Scalar isotropic identity tensor.
PeriodicCoefficient identity_coefficient(int components, int dim);
/// alpha(y_1) = mean + amplitude * sin(2 pi y_1); isotropic alpha*I unless a transverse
/// value beta_0 is given, in which case diag(alpha(y_1), beta_0).
PeriodicCoefficient laminate_coefficient(int dim, double mean, double amplitude,
                                         std::optional<double> transverse = std::nullopt);
/// Two-phase checkerboard on the half-cell lattice (layered two-phase medium when dim == 1).
PeriodicCoefficient checkerboard_coefficient(int dim, double phase0, double phase1);
/// mean + amplitude * sin(2 pi y_1) cos(2 pi y_2), isotropic.
PeriodicCoefficient trig_coefficient(int dim, double mean, double amplitude);
/// Two-component system: laminate diagonal blocks with constant cross diffusion.
PeriodicCoefficient coupled_laminate_coefficient(int dim, double mean, double amplitude,
                                                 double coupling);
/// Scalar isotropic coefficient from lattice samples (rows: y_2, cols: y_1),
/// periodic bilinear interpolation. For dim == 1 the table is a single row.
PeriodicCoefficient table_coefficient(int dim, const Matrix& samples);
Matrix load_coefficient_table(const std::string& csv_path);

/// Localized defect y -> b_{ij}^{ab}(y) on all of R^d.
class DefectCoefficient {
 public:
  using Evaluator = std::function<TensorBlock(const Point&)>;

  /// b must vanish outside the ball of radius truncation_radius; `compact` marks
  /// it as a genuine support bound rather than a numerical cut of decaying tails.
  DefectCoefficient(int components, int dim, Evaluator eval, std::string name,
                    double truncation_radius, bool compact, std::optional<double> declared_l1);

  TensorBlock operator()(const Point& y) const;

  int components() const { return components_; }
  int dim() const { return dim_; }
  const std::string& name() const { return name_; }
  /// b vanishes identically outside the ball of this radius.
  std::optional<double> support_radius() const {
    return compact_ ? std::optional<double>(truncation_radius_) : std::nullopt;
  }
  double truncation_radius() const { return truncation_radius_; }
  /// L^1 norm of the scalar profile for integrable (non compactly supported) defects.
  std::optional<double> declared_l1() const { return declared_l1_; }

 private:
  int components_;
  int dim_;
  Evaluator eval_;
  std::string name_;
  double truncation_radius_;
  bool compact_;
  std::optional<double> declared_l1_;
};

/// value * 1_{|y| < radius}.
DefectCoefficient ball_defect(const TensorBlock& value, int components, int dim, double radius);
/// factor * a(y) * 1_{|y| < radius}.
DefectCoefficient scaled_ball_defect(const PeriodicCoefficient& a, double factor, double radius);
/// amplitude * exp(-|y|^2 / width^2) * I, cut where the profile drops below 1e-17.
DefectCoefficient gaussian_defect(int components, int dim, double amplitude, double width);

/// Pointwise values of c_i^a, d^a and their u-derivatives at one (x, u).
struct NonlinearTerms {
  TensorBlock flux;       // n x d, (a, i) -> c_i^a
  SmallVector source;     // n, a -> d^a
  TensorBlock flux_du;    // (n*d) x n, (a*d + i, g) -> d c_i^a / d u^g
  TensorBlock source_du;  // n x n, (a, g) -> d d^a / d u^g
};

class Nonlinearity {
 public:
  using Evaluator = std::function<void(const Point& x, const SmallVector& u, NonlinearTerms&)>;

  Nonlinearity(int components, int dim, Evaluator eval, std::string name, bool linear,
               bool has_flux);

  NonlinearTerms operator()(const Point& x, const SmallVector& u) const;

  int components() const { return components_; }
  int dim() const { return dim_; }
  const std::string& name() const { return name_; }
  /// c and d are affine in u.
  bool is_linear() const { return linear_; }
  /// c depends on u (introduces first-order, generally nonsymmetric, terms).
  bool has_flux() const { return has_flux_; }

 private:
  int components_;
  int dim_;
  Evaluator eval_;
  std::string name_;
  bool linear_;
  bool has_flux_;
};

Nonlinearity zero_nonlinearity(int components, int dim);
/// d^a = u^a - forcing.
Nonlinearity linear_nonlinearity(int components, int dim, double forcing);
/// d^a = cubic * (u^a)^3 + linear * u^a - forcing.
Nonlinearity cubic_nonlinearity(int components, int dim, double forcing, double cubic = 1.0,
                                double linear = 1.0);
/// c_i^a = velocity_i (u^a)^2 / 2, d^a = u^a - forcing.
Nonlinearity convective_nonlinearity(int components, int dim, const std::vector<double>& velocity,
                                     double forcing);

/// Largest relative mismatch between supplied u-derivatives and centered finite
/// differences over the given sample points and states.
double derivative_mismatch(const Nonlinearity& nl, const std::vector<Point>& xs,
                           const std::vector<SmallVector>& us);

/// Minimum of the Legendre form over a y-lattice (sample_density per axis on the
/// unit cell) and all unit vectors. Throws NonCoerciveError if the estimate is <= 0.
double coercivity_constant(const PeriodicCoefficient& a, int sample_density = 64);

/// Same for a + b, sampled over a box covering supp b plus one period on each side
/// (sample_density points per unit length).
double combined_coercivity(const PeriodicCoefficient& a, const DefectCoefficient& b,
                           int sample_density = 64);

/// Minimum eigenvalue of the symmetric part of a tensor block.
double legendre_minimum(const TensorBlock& t);

}  // namespace homdef

#endif  // HOMDEF_COEFFS_HPP
