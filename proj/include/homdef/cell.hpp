#ifndef HOMDEF_CELL_HPP
#define HOMDEF_CELL_HPP

#include "homdef/coeffs.hpp"
#include "homdef/linalg.hpp"
#include "homdef/mesh.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace homdef {

/// Periodic P1 operator on the master dofs of a cell grid, dof = master * n + component.
SparseOperator periodic_stiffness(const UnitCellGrid& grid, const PeriodicCoefficient& a);
/// Identity stiffness plus consistent mass on the periodic space (n = 1).
SparseOperator periodic_gram(const UnitCellGrid& grid);

/// Solves K x = rhs for a periodic operator whose kernel is the constants: pins the
/// first master of every component, then removes the mean of each component.
class PeriodicSolver {
 public:
  PeriodicSolver(std::shared_ptr<const UnitCellGrid> grid, const SparseOperator& op, int components);

  Vector solve(const Vector& rhs) const;

 private:
  std::shared_ptr<const UnitCellGrid> grid_;
  int components_;
  std::vector<int> reduced_;  // full dof -> reduced dof, -1 when pinned
  std::unique_ptr<Factorization> factor_;
};

/// Mean over the cell of the P1 field with master values `values` (one component).
double periodic_mean(const UnitCellGrid& grid, const Vector& values, int components = 1,
                     int component = 0);

/// Correctors v_j^{gb}: column c = b * d + j holds the n-component field
/// (row = master * n + g) solving the cell problem for the unit gradient e_j of component b.
class CorrectorSet {
 public:
  CorrectorSet(std::shared_ptr<const UnitCellGrid> grid, int components, Matrix values);

  const UnitCellGrid& grid() const { return *grid_; }
  const std::shared_ptr<const UnitCellGrid>& grid_ptr() const { return grid_; }
  int components() const { return components_; }
  int dim() const { return grid_->dim; }
  const Matrix& values() const { return values_; }

  /// v_j^{gb} at a grid node (slave nodes read their master).
  double node_value(int node, int g, int b, int j) const;
  /// Dv on an element: (g*d + k, b*d + j) -> d/dy_k v_j^{gb}.
  const TensorBlock& gradient(int element) const { return gradients_[element]; }
  /// n x (n*d) block (g, b*d + j) -> v_j^{gb}(y), y reduced to the cell.
  TensorBlock value(const Point& y) const;
  TensorBlock gradient_at(const Point& y) const;

  double max_abs() const { return values_.cwiseAbs().maxCoeff(); }
  /// Largest |cell mean| over all fields and components.
  double max_mean() const;

 private:
  std::shared_ptr<const UnitCellGrid> grid_;
  int components_;
  Matrix values_;
  std::vector<TensorBlock> gradients_;
};

CorrectorSet solve_cell_problems(std::shared_ptr<const UnitCellGrid> grid,
                                 const PeriodicCoefficient& a);

struct HomogenizedTensor {
  TensorBlock value;  // (a*d + i, b*d + j) -> ahat_ij^ab
  int components = 1;
  int dim = 1;
  /// Minimum eigenvalue of the symmetric part of ahat.
  double coercivity = 0.0;
};

HomogenizedTensor homogenized_tensor(const UnitCellGrid& grid, const PeriodicCoefficient& a,
                                     const CorrectorSet& correctors);

/// f = a(I + Dv) - ahat (elementwise), g with Lap g = f, h_ijk = d_i g_jk - d_j g_ik.
class FluxCorrectorSet {
 public:
  int components = 1;
  int dim = 1;
  /// Per element: (n*d)^2 entries of f, column r * (n*d) + c for f[(a,i),(b,j)] at (r, c).
  Matrix f;
  /// Master nodal values of g, same column layout as f.
  Matrix g;
  /// Per element h_{ijk}^{ab}, column given by h_column.
  Matrix h;

  int f_column(int a, int i, int b, int j) const {
    return (a * dim + i) * components * dim + b * dim + j;
  }
  int h_column(int a, int b, int i, int j, int k) const {
    return (((a * components + b) * dim + i) * dim + j) * dim + k;
  }
  double h_value(int element, int a, int b, int i, int j, int k) const {
    return h(element, h_column(a, b, i, j, k));
  }

  /// max |h_ijk + h_jik| over all entries (zero by construction).
  double antisymmetry_defect() const;
};

struct WeakIdentityReport {
  /// max over (a, b, j, k) of the periodic dual-norm surrogate of d_i h_ijk - f_jk.
  double residual = 0.0;
  /// Same surrogate of f itself, for scale.
  double reference = 0.0;
};

/// Throws NumericalError when |int f| > 1e-8 (ahat not from these correctors).
FluxCorrectorSet flux_correctors(const UnitCellGrid& grid, const PeriodicCoefficient& a,
                                 const CorrectorSet& correctors, const HomogenizedTensor& ahat);

WeakIdentityReport flux_weak_identity(const UnitCellGrid& grid, const FluxCorrectorSet& flux);

/// Arithmetic and harmonic means of a (as (n*d) x (n*d) blocks) with the barycenter rule.
struct VoigtReussBounds {
  TensorBlock arithmetic;
  TensorBlock harmonic;
};

VoigtReussBounds voigt_reuss_bounds(const UnitCellGrid& grid, const PeriodicCoefficient& a);

/// Smallest eigenvalue of the symmetric parts of (ahat - harmonic) and (arithmetic - ahat);
/// both nonnegative when the bracketing holds.
std::pair<double, double> voigt_reuss_margins(const HomogenizedTensor& ahat,
                                              const VoigtReussBounds& bounds);

struct AverageBoundSample {
  double max_ratio = 0.0;
  /// 2^d times the cell integral of w.
  double bound = 0.0;
  double radius = 0.0;
  double eps = 0.0;
  Point center;
};

/// max over the given radii, scales and centers of (r + eps)^{-d} int_{|xi - x| < r} w(xi / eps).
AverageBoundSample periodic_average_bound_check(int dim, const std::function<double(const Point&)>& w,
                                                const std::vector<double>& radii,
                                                const std::vector<double>& scales,
                                                const std::vector<Point>& centers);

}  // namespace homdef

#endif  // HOMDEF_CELL_HPP
