#include "homdef/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace homdef {

namespace {

using LocalMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3 * 4, 3 * 4>;

// Adds value at (row, col) of a compressed row-major matrix whose pattern contains it.
void add_to(CsrMatrix& m, int row, int col, double value) {
  const auto* outer = m.outerIndexPtr();
  const auto* inner = m.innerIndexPtr();
  auto* values = m.valuePtr();
  for (auto k = outer[row]; k < outer[row + 1]; ++k) {
    if (inner[k] == col) {
      values[k] += value;
      return;
    }
  }
  throw NumericalError("assembly: entry outside the sparsity pattern");
}

// Geometric nested dissection of the s_x x s_y lattice [i0, i1) x [j0, j1), index i + s_x * j.
void dissect(int i0, int i1, int j0, int j1, int sx, std::vector<int>& order) {
  const int w = i1 - i0;
  const int h = j1 - j0;
  if (w <= 0 || h <= 0) return;
  if (w * h <= 64) {
    for (int j = j0; j < j1; ++j)
      for (int i = i0; i < i1; ++i) order.push_back(i + sx * j);
    return;
  }
  if (w >= h) {
    const int mid = (i0 + i1) / 2;
    dissect(i0, mid, j0, j1, sx, order);
    dissect(mid + 1, i1, j0, j1, sx, order);
    for (int j = j0; j < j1; ++j) order.push_back(mid + sx * j);
  } else {
    const int mid = (j0 + j1) / 2;
    dissect(i0, i1, j0, mid, sx, order);
    dissect(i0, i1, mid + 1, j1, sx, order);
    for (int i = i0; i < i1; ++i) order.push_back(i + sx * mid);
  }
}

}  // namespace

Vector DofLayout::restrict(const Vector& full) const {
  Vector out(num_dofs());
  for (std::size_t node = 0; node < interior_index.size(); ++node) {
    const int idx = interior_index[node];
    if (idx < 0) continue;
    out.segment(idx * components, components) = full.segment(node * components, components);
  }
  return out;
}

Vector DofLayout::extend(const Vector& interior) const {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(interior_index.size()) * components);
  for (std::size_t node = 0; node < interior_index.size(); ++node) {
    const int idx = interior_index[node];
    if (idx < 0) continue;
    out.segment(node * components, components) = interior.segment(idx * components, components);
  }
  return out;
}

DofLayout dirichlet_layout(const DomainMesh& mesh, int components) {
  DofLayout layout;
  layout.components = components;
  layout.interior_index.assign(mesh.num_nodes(), -1);
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    if (!mesh.on_boundary[n]) layout.interior_index[n] = layout.interior_nodes++;
  }
  return layout;
}

DiscreteField::DiscreteField(std::shared_ptr<const DomainMesh> mesh, int components)
    : DiscreteField(mesh, components, Vector::Zero(mesh->num_nodes() * components)) {}

DiscreteField::DiscreteField(std::shared_ptr<const DomainMesh> mesh, int components, Vector values)
    : mesh_(std::move(mesh)), components_(components), values_(std::move(values)) {
  if (values_.size() != static_cast<Eigen::Index>(mesh_->num_nodes()) * components_) {
    throw NumericalError("field length does not match nodes x components");
  }
}

bool DiscreteField::satisfies_dirichlet() const {
  for (int n = 0; n < mesh_->num_nodes(); ++n) {
    if (!mesh_->on_boundary[n]) continue;
    for (int c = 0; c < components_; ++c) {
      if ((*this)(n, c) != 0.0) return false;
    }
  }
  return true;
}

double DiscreteField::sup_norm() const {
  double sum = 0.0;
  for (int c = 0; c < components_; ++c) {
    double m = 0.0;
    for (int n = 0; n < mesh_->num_nodes(); ++n) m = std::max(m, std::abs((*this)(n, c)));
    sum += m;
  }
  return sum;
}

TensorBlock DiscreteField::element_gradient(int element) const {
  const auto g = mesh_->geometry(element);
  const int d = mesh_->dim;
  TensorBlock grad = TensorBlock::Zero(components_, d);
  for (int a = 0; a <= d; ++a) {
    const int node = mesh_->elements(a, element);
    for (int c = 0; c < components_; ++c) {
      grad.row(c) += (*this)(node, c) * g.gradients.col(a).transpose();
    }
  }
  return grad;
}

DiscreteField DiscreteField::from_interior(std::shared_ptr<const DomainMesh> mesh, int components,
                                           const Vector& interior) {
  const DofLayout layout = dirichlet_layout(*mesh, components);
  return DiscreteField(std::move(mesh), components, layout.extend(interior));
}

Diffusion Diffusion::oscillating(PeriodicCoefficient a, double eps,
                                 std::optional<DefectCoefficient> b) {
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (b && (b->components() != a.components() || b->dim() != a.dim())) {
    throw ConfigError("defect and periodic coefficient have different shapes");
  }
  Diffusion diff;
  diff.components_ = a.components();
  diff.dim_ = a.dim();
  diff.eps_ = eps;
  diff.periodic_ = std::move(a);
  diff.defect_ = std::move(b);
  return diff;
}

Diffusion Diffusion::defect_only(DefectCoefficient b, double eps) {
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  Diffusion diff;
  diff.components_ = b.components();
  diff.dim_ = b.dim();
  diff.eps_ = eps;
  diff.defect_ = std::move(b);
  return diff;
}

Diffusion Diffusion::homogenized(const TensorBlock& ahat, int components, int dim) {
  if (ahat.rows() != components * dim || ahat.cols() != components * dim) {
    throw ConfigError("homogenized tensor has wrong shape");
  }
  Diffusion diff;
  diff.components_ = components;
  diff.dim_ = dim;
  diff.constant_ = ahat;
  return diff;
}

TensorBlock Diffusion::operator()(const Point& x) const {
  if (!std::isfinite(eps_)) return constant_;
  const Point y = x / eps_;
  const int size = components_ * dim_;
  TensorBlock t = periodic_ ? (*periodic_)(y) : TensorBlock::Zero(size, size);
  if (defect_) t += (*defect_)(y);
  return t;
}

bool Diffusion::oscillates() const {
  if (!std::isfinite(eps_)) return false;
  return defect_.has_value() || (periodic_ && !periodic_->is_constant());
}

Assembler::Assembler(std::shared_ptr<const DomainMesh> mesh, int components,
                     AssemblyOptions options)
    : mesh_(std::move(mesh)), layout_(dirichlet_layout(*mesh_, components)),
      options_(options) {
  if (components < 1 || components * mesh_->dim > kMaxBlock) {
    throw ConfigError("unsupported number of components");
  }
  const int nv = mesh_->vertices_per_element();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh_->num_elements()) * nv * nv * components *
                   components);
  for (int e = 0; e < mesh_->num_elements(); ++e) {
    for (int a = 0; a < nv; ++a) {
      for (int b = 0; b < nv; ++b) {
        for (int ca = 0; ca < components; ++ca) {
          const int row = layout_.dof(mesh_->elements(a, e), ca);
          if (row < 0) continue;
          for (int cb = 0; cb < components; ++cb) {
            const int col = layout_.dof(mesh_->elements(b, e), cb);
            if (col >= 0) triplets.emplace_back(row, col, 0.0);
          }
        }
      }
    }
  }
  pattern_.resize(layout_.num_dofs(), layout_.num_dofs());
  pattern_.setFromTriplets(triplets.begin(), triplets.end());
  pattern_.makeCompressed();

  // Interior nodes of the structured mesh form an (m-1)^d lattice in node order.
  const int s = mesh_->subdivisions - 1;
  std::vector<int> order;
  order.reserve(layout_.interior_nodes);
  if (mesh_->dim == 1) {
    for (int i = 0; i < s; ++i) order.push_back(i);
  } else {
    dissect(0, s, 0, s, s, order);
  }
  ordering_.resize(layout_.num_dofs());
  for (std::size_t k = 0; k < order.size(); ++k)
    for (int c = 0; c < components; ++c)
      ordering_.indices()[order[k] * components + c] = static_cast<int>(k) * components + c;
}

template <typename Kernel>
SparseOperator Assembler::assemble(Kernel&& kernel) const {
  SparseOperator op{pattern_, false};
  const int nv = mesh_->vertices_per_element();
  const int n = layout_.components;
  const int nloc = nv * n;
  LocalMatrix local(nloc, nloc);
  std::vector<int> dofs(nloc);
  for (int e = 0; e < mesh_->num_elements(); ++e) {
    bool any = false;
    for (int a = 0; a < nv; ++a) {
      for (int c = 0; c < n; ++c) {
        dofs[a * n + c] = layout_.dof(mesh_->elements(a, e), c);
        any = any || dofs[a * n + c] >= 0;
      }
    }
    if (!any) continue;
    local.setZero();
    kernel(e, mesh_->geometry(e), local);
    for (int r = 0; r < nloc; ++r) {
      if (dofs[r] < 0) continue;
      for (int s = 0; s < nloc; ++s) {
        if (dofs[s] >= 0 && local(r, s) != 0.0) add_to(op.matrix, dofs[r], dofs[s], local(r, s));
      }
    }
  }
  op.refresh_symmetry();
  return op;
}

void Assembler::check_resolution(const Diffusion& diffusion) const {
  if (diffusion.components() != layout_.components || diffusion.dim() != mesh_->dim) {
    throw ConfigError("diffusion shape does not match mesh dimension / components");
  }
  if (!diffusion.oscillates() || options_.allow_underresolved) return;
  const double limit = diffusion.eps() / options_.resolution_floor;
  if (mesh_->max_diameter > limit * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "mesh too coarse for eps = " << diffusion.eps() << ": h = " << mesh_->max_diameter
        << " exceeds eps/resolution_floor = " << limit;
    throw ConfigError(msg.str());
  }
}

namespace {

// local(a*n + al, b*n + be) += vol * sum_ij dphi_a/dx_i A[(al,i),(be,j)] dphi_b/dx_j
void add_diffusion(const ElementGeometry& g, const TensorBlock& A, int n, LocalMatrix& local) {
  const int d = static_cast<int>(g.gradients.rows());
  const int nv = d + 1;
  for (int a = 0; a < nv; ++a) {
    for (int b = 0; b < nv; ++b) {
      for (int al = 0; al < n; ++al) {
        for (int be = 0; be < n; ++be) {
          double s = 0.0;
          for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
              s += g.gradients(i, a) * A(al * d + i, be * d + j) * g.gradients(j, b);
            }
          }
          local(a * n + al, b * n + be) += g.volume * s;
        }
      }
    }
  }
}

}  // namespace

SparseOperator Assembler::stiffness(const Diffusion& diffusion) const {
  check_resolution(diffusion);
  const int n = layout_.components;
  return assemble([&](int, const ElementGeometry& g, LocalMatrix& local) {
    add_diffusion(g, diffusion(g.barycenter), n, local);
  });
}

Vector Assembler::residual(const Diffusion& diffusion, const Nonlinearity& nl,
                           const DiscreteField& u) const {
  check_resolution(diffusion);
  if (u.components() != layout_.components || u.mesh().num_nodes() != mesh_->num_nodes()) {
    throw ConfigError("field does not match assembler layout");
  }
  const int n = layout_.components;
  const int d = mesh_->dim;
  const int nv = d + 1;
  const double w = 1.0 / nv;
  Vector res = Vector::Zero(layout_.num_dofs());
  SmallVector ubar(n);
  TensorBlock grad(n * d, 1);
  for (int e = 0; e < mesh_->num_elements(); ++e) {
    const auto g = mesh_->geometry(e);
    ubar.setZero();
    grad.setZero();
    for (int a = 0; a < nv; ++a) {
      const int node = mesh_->elements(a, e);
      for (int c = 0; c < n; ++c) {
        const double val = u(node, c);
        ubar(c) += w * val;
        for (int i = 0; i < d; ++i) grad(c * d + i, 0) += val * g.gradients(i, a);
      }
    }
    const TensorBlock flux = diffusion(g.barycenter) * grad;
    const NonlinearTerms t = nl(g.barycenter, ubar);
    for (int a = 0; a < nv; ++a) {
      const int node = mesh_->elements(a, e);
      for (int c = 0; c < n; ++c) {
        const int row = layout_.dof(node, c);
        if (row < 0) continue;
        double s = w * t.source(c);
        for (int i = 0; i < d; ++i) s += (flux(c * d + i, 0) + t.flux(c, i)) * g.gradients(i, a);
        res(row) += g.volume * s;
      }
    }
  }
  return res;
}

SparseOperator Assembler::jacobian(const Diffusion& diffusion, const Nonlinearity& nl,
                                   const DiscreteField& u) const {
  check_resolution(diffusion);
  const int n = layout_.components;
  const int d = mesh_->dim;
  const int nv = d + 1;
  const double w = 1.0 / nv;
  return assemble([&](int e, const ElementGeometry& g, LocalMatrix& local) {
    add_diffusion(g, diffusion(g.barycenter), n, local);
    SmallVector ubar = SmallVector::Zero(n);
    for (int a = 0; a < nv; ++a) ubar += w * u.at_node(mesh_->elements(a, e));
    const NonlinearTerms t = nl(g.barycenter, ubar);
    for (int a = 0; a < nv; ++a) {
      for (int b = 0; b < nv; ++b) {
        for (int al = 0; al < n; ++al) {
          for (int ga = 0; ga < n; ++ga) {
            double s = w * w * t.source_du(al, ga);
            for (int i = 0; i < d; ++i) s += w * t.flux_du(al * d + i, ga) * g.gradients(i, a);
            local(a * n + al, b * n + ga) += g.volume * s;
          }
        }
      }
    }
  });
}

SparseOperator Assembler::barycentric_mass() const {
  const int n = layout_.components;
  const int nv = mesh_->vertices_per_element();
  return assemble([&](int, const ElementGeometry& g, LocalMatrix& local) {
    const double v = g.volume / (nv * nv);
    for (int a = 0; a < nv; ++a)
      for (int b = 0; b < nv; ++b)
        for (int c = 0; c < n; ++c) local(a * n + c, b * n + c) += v;
  });
}

SparseOperator Assembler::consistent_mass() const {
  const int n = layout_.components;
  const int nv = mesh_->vertices_per_element();
  // int lambda_a lambda_b = vol (1 + delta_ab) d! / (d + 2)!
  const double base = mesh_->dim == 1 ? 1.0 / 6.0 : 1.0 / 12.0;
  return assemble([&](int, const ElementGeometry& g, LocalMatrix& local) {
    for (int a = 0; a < nv; ++a)
      for (int b = 0; b < nv; ++b)
        for (int c = 0; c < n; ++c) local(a * n + c, b * n + c) += g.volume * base * (a == b ? 2 : 1);
  });
}

SparseOperator Assembler::gram() const {
  const int n = layout_.components;
  const int d = mesh_->dim;
  const double base = d == 1 ? 1.0 / 6.0 : 1.0 / 12.0;
  const TensorBlock identity = TensorBlock::Identity(n * d, n * d);
  SparseOperator op = assemble([&](int, const ElementGeometry& g, LocalMatrix& local) {
    add_diffusion(g, identity, n, local);
    for (int a = 0; a <= d; ++a)
      for (int b = 0; b <= d; ++b)
        for (int c = 0; c < n; ++c) local(a * n + c, b * n + c) += g.volume * base * (a == b ? 2 : 1);
  });
  op.symmetric = true;
  return op;
}

const DualNorm& Assembler::dual() const {
  std::call_once(dual_once_, [this] { dual_ = std::make_unique<DualNorm>(gram().matrix, &ordering_); });
  return *dual_;
}

double Assembler::dual_norm(const Vector& phi) const { return dual()(phi); }

double Assembler::h1_norm(const Vector& v) const { return dual().primal(v); }

SparseOperator assemble_stiffness(std::shared_ptr<const DomainMesh> mesh,
                                  const Diffusion& diffusion, const AssemblyOptions& options) {
  return Assembler(std::move(mesh), diffusion.components(), options).stiffness(diffusion);
}

Vector assemble_semilinear_residual(std::shared_ptr<const DomainMesh> mesh,
                                    const Diffusion& diffusion, const Nonlinearity& nl,
                                    const DiscreteField& u, const AssemblyOptions& options) {
  return Assembler(std::move(mesh), diffusion.components(), options).residual(diffusion, nl, u);
}

SparseOperator assemble_jacobian(std::shared_ptr<const DomainMesh> mesh, const Diffusion& diffusion,
                                 const Nonlinearity& nl, const DiscreteField& u,
                                 const AssemblyOptions& options) {
  return Assembler(std::move(mesh), diffusion.components(), options).jacobian(diffusion, nl, u);
}

double dual_norm_surrogate(const Vector& phi, std::shared_ptr<const DomainMesh> mesh,
                           int components) {
  const SparseOperator g = Assembler(std::move(mesh), components).gram();
  if (phi.size() != g.rows()) throw NumericalError("dual_norm_surrogate: size mismatch");
  if (phi.squaredNorm() == 0.0) return 0.0;
  const Vector w = solve_spd(g, phi);
  return std::sqrt(std::max(0.0, phi.dot(w)));
}

}  // namespace homdef
