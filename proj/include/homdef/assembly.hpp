#ifndef HOMDEF_ASSEMBLY_HPP
#define HOMDEF_ASSEMBLY_HPP

#include "homdef/coeffs.hpp"
#include "homdef/linalg.hpp"
#include "homdef/mesh.hpp"

#include <limits>
#include <memory>
#include <mutex>
#include <optional>

namespace homdef {

/// Dirichlet-eliminated numbering: interior nodes only, node-major, component-minor.
struct DofLayout {
  int components = 1;
  int interior_nodes = 0;
  std::vector<int> interior_index;  // node -> interior node index, -1 on the boundary

  int num_dofs() const { return interior_nodes * components; }
  int dof(int node, int component) const {
    const int idx = interior_index[node];
    return idx < 0 ? -1 : idx * components + component;
  }
  /// Full nodal vector (nodes * components) -> interior dofs.
  Vector restrict(const Vector& full) const;
  /// Interior dofs -> full nodal vector with zeros on the boundary.
  Vector extend(const Vector& interior) const;
};

DofLayout dirichlet_layout(const DomainMesh& mesh, int components);

/// Nodal vector field on a domain mesh, node-major and component-minor.
class DiscreteField {
 public:
  DiscreteField(std::shared_ptr<const DomainMesh> mesh, int components);
  DiscreteField(std::shared_ptr<const DomainMesh> mesh, int components, Vector values);

  const DomainMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const DomainMesh>& mesh_ptr() const { return mesh_; }
  int components() const { return components_; }
  const Vector& values() const { return values_; }
  Vector& values() { return values_; }

  double operator()(int node, int component) const { return values_(node * components_ + component); }
  double& operator()(int node, int component) { return values_(node * components_ + component); }
  SmallVector at_node(int node) const { return values_.segment(node * components_, components_); }

  /// All boundary entries are exactly zero.
  bool satisfies_dirichlet() const;
  /// sum over components of max_x |u^a(x)| at the nodes.
  double sup_norm() const;
  /// Per-element constant gradient, (component, axis).
  TensorBlock element_gradient(int element) const;

  static DiscreteField from_interior(std::shared_ptr<const DomainMesh> mesh, int components,
                                     const Vector& interior);

 private:
  std::shared_ptr<const DomainMesh> mesh_;
  int components_;
  Vector values_;
};

/// Diffusion tensor as a function of x: a(x/eps) + b(x/eps), b(x/eps) alone, or constant a-hat.
class Diffusion {
 public:
  static Diffusion oscillating(PeriodicCoefficient a, double eps,
                               std::optional<DefectCoefficient> b = std::nullopt);
  static Diffusion defect_only(DefectCoefficient b, double eps);
  /// Constant tensor; plays the role of eps = infinity.
  static Diffusion homogenized(const TensorBlock& ahat, int components, int dim);

  TensorBlock operator()(const Point& x) const;

  double eps() const { return eps_; }
  int components() const { return components_; }
  int dim() const { return dim_; }
  /// Whether the coefficient varies on the eps scale (subject to the resolution floor).
  bool oscillates() const;
  bool has_defect() const { return defect_.has_value(); }

 private:
  Diffusion() = default;

  std::optional<PeriodicCoefficient> periodic_;
  std::optional<DefectCoefficient> defect_;
  TensorBlock constant_;
  double eps_ = std::numeric_limits<double>::infinity();
  int components_ = 1;
  int dim_ = 1;
};

struct AssemblyOptions {
  /// Oscillating coefficients require h <= eps / resolution_floor.
  double resolution_floor = 8.0;
  bool allow_underresolved = false;
};

/// P1 Galerkin assembly on one mesh with one-point barycenter quadrature. Caches the
/// sparsity pattern of the interior block and the factored Gram operator.
class Assembler {
 public:
  Assembler(std::shared_ptr<const DomainMesh> mesh, int components, AssemblyOptions options = {});

  const DomainMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const DomainMesh>& mesh_ptr() const { return mesh_; }
  const DofLayout& layout() const { return layout_; }
  int components() const { return layout_.components; }
  const AssemblyOptions& options() const { return options_; }

  /// Interior block of the operator <A u, phi> = int A(x) grad u : grad phi.
  SparseOperator stiffness(const Diffusion& diffusion) const;
  /// F(u) = A u + C(u) tested against interior hat functions.
  Vector residual(const Diffusion& diffusion, const Nonlinearity& nl, const DiscreteField& u) const;
  /// Derivative of residual() at u.
  SparseOperator jacobian(const Diffusion& diffusion, const Nonlinearity& nl,
                          const DiscreteField& u) const;

  /// One-point (barycenter) mass matrix, the zero-order part of residual().
  SparseOperator barycentric_mass() const;
  /// Exactly integrated P1 mass matrix.
  SparseOperator consistent_mass() const;
  /// Discrete H^1 Gram operator: identity stiffness plus consistent mass.
  SparseOperator gram() const;

  /// sqrt(phi^T G^{-1} phi), G factored on first use.
  double dual_norm(const Vector& phi) const;
  /// sqrt(v^T G v) for interior dofs v.
  double h1_norm(const Vector& v) const;
  const DualNorm& dual() const;
  /// Nested-dissection order of the interior dofs, for direct factorizations.
  const Permutation& ordering() const { return ordering_; }

  /// Throws ConfigError when the diffusion oscillates below the resolution floor.
  void check_resolution(const Diffusion& diffusion) const;

 private:
  template <typename Kernel>
  SparseOperator assemble(Kernel&& kernel) const;

  std::shared_ptr<const DomainMesh> mesh_;
  DofLayout layout_;
  AssemblyOptions options_;
  CsrMatrix pattern_;
  Permutation ordering_;
  mutable std::once_flag dual_once_;
  mutable std::unique_ptr<DualNorm> dual_;
};

SparseOperator assemble_stiffness(std::shared_ptr<const DomainMesh> mesh,
                                  const Diffusion& diffusion, const AssemblyOptions& options = {});
Vector assemble_semilinear_residual(std::shared_ptr<const DomainMesh> mesh,
                                    const Diffusion& diffusion, const Nonlinearity& nl,
                                    const DiscreteField& u, const AssemblyOptions& options = {});
SparseOperator assemble_jacobian(std::shared_ptr<const DomainMesh> mesh, const Diffusion& diffusion,
                                 const Nonlinearity& nl, const DiscreteField& u,
                                 const AssemblyOptions& options = {});

/// Discrete W^{-1,2} norm of an interior functional, solved with conjugate gradients.
double dual_norm_surrogate(const Vector& phi, std::shared_ptr<const DomainMesh> mesh,
                           int components = 1);

}  // namespace homdef

#endif  // HOMDEF_ASSEMBLY_HPP
