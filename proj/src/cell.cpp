#include "homdef/cell.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace homdef {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

CsrMatrix from_triplets(Eigen::Index size, const Triplets& t) {
  CsrMatrix m(size, size);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

void check_shapes(const UnitCellGrid& grid, const PeriodicCoefficient& a) {
  if (a.dim() != grid.dim) {
    throw ConfigError("coefficient dimension " + std::to_string(a.dim()) +
                      " does not match cell grid dimension " + std::to_string(grid.dim));
  }
}

}  // namespace

SparseOperator periodic_stiffness(const UnitCellGrid& grid, const PeriodicCoefficient& a) {
  check_shapes(grid, a);
  const int n = a.components();
  const int d = grid.dim;
  const int nv = d + 1;
  Triplets t;
  t.reserve(static_cast<std::size_t>(grid.num_elements()) * nv * nv * n * n);
  for (int e = 0; e < grid.num_elements(); ++e) {
    const auto g = grid.geometry(e);
    const TensorBlock A = a(g.barycenter);
    for (int p = 0; p < nv; ++p) {
      const int mp = grid.master[grid.elements(p, e)];
      for (int q = 0; q < nv; ++q) {
        const int mq = grid.master[grid.elements(q, e)];
        for (int al = 0; al < n; ++al) {
          for (int be = 0; be < n; ++be) {
            double s = 0.0;
            for (int i = 0; i < d; ++i)
              for (int j = 0; j < d; ++j)
                s += g.gradients(i, p) * A(al * d + i, be * d + j) * g.gradients(j, q);
            t.emplace_back(mp * n + al, mq * n + be, g.volume * s);
          }
        }
      }
    }
  }
  SparseOperator op{from_triplets(static_cast<Eigen::Index>(grid.num_masters()) * n, t), false};
  op.refresh_symmetry();
  return op;
}

SparseOperator periodic_gram(const UnitCellGrid& grid) {
  const int d = grid.dim;
  const int nv = d + 1;
  const double base = d == 1 ? 1.0 / 6.0 : 1.0 / 12.0;
  Triplets t;
  for (int e = 0; e < grid.num_elements(); ++e) {
    const auto g = grid.geometry(e);
    for (int p = 0; p < nv; ++p) {
      for (int q = 0; q < nv; ++q) {
        const double k = g.gradients.col(p).dot(g.gradients.col(q));
        const double m = base * (p == q ? 2.0 : 1.0);
        t.emplace_back(grid.master[grid.elements(p, e)], grid.master[grid.elements(q, e)],
                       g.volume * (k + m));
      }
    }
  }
  return SparseOperator{from_triplets(grid.num_masters(), t), true};
}

PeriodicSolver::PeriodicSolver(std::shared_ptr<const UnitCellGrid> grid, const SparseOperator& op,
                               int components)
    : grid_(std::move(grid)), components_(components) {
  const Eigen::Index size = op.rows();
  if (size != static_cast<Eigen::Index>(grid_->num_masters()) * components_) {
    throw NumericalError("periodic operator size does not match the cell grid");
  }
  // Master 0 of every component is pinned.
  reduced_.assign(size, -1);
  int next = 0;
  for (Eigen::Index k = components_; k < size; ++k) reduced_[k] = next++;
  Triplets t;
  t.reserve(op.matrix.nonZeros());
  for (Eigen::Index r = 0; r < size; ++r) {
    if (reduced_[r] < 0) continue;
    for (CsrMatrix::InnerIterator it(op.matrix, r); it; ++it) {
      const int c = reduced_[it.col()];
      if (c >= 0) t.emplace_back(reduced_[r], c, it.value());
    }
  }
  SparseOperator reduced{from_triplets(next, t), false};
  reduced.refresh_symmetry();
  try {
    factor_ = std::make_unique<Factorization>(reduced);
  } catch (const NumericalError& e) {
    throw NonCoerciveError(std::string("cell problem is singular beyond the constants: ") +
                           e.what());
  }
}

Vector PeriodicSolver::solve(const Vector& rhs) const {
  Vector reduced_rhs(factor_->size());
  for (std::size_t k = 0; k < reduced_.size(); ++k) {
    if (reduced_[k] >= 0) reduced_rhs(reduced_[k]) = rhs(k);
  }
  const Vector x = factor_->solve(reduced_rhs);
  Vector out = Vector::Zero(rhs.size());
  for (std::size_t k = 0; k < reduced_.size(); ++k) {
    if (reduced_[k] >= 0) out(k) = x(reduced_[k]);
  }
  for (int c = 0; c < components_; ++c) {
    const double mean = periodic_mean(*grid_, out, components_, c);
    for (int m = 0; m < grid_->num_masters(); ++m) out(m * components_ + c) -= mean;
  }
  return out;
}

double periodic_mean(const UnitCellGrid& grid, const Vector& values, int components,
                     int component) {
  const int nv = grid.vertices_per_element();
  double sum = 0.0;
  for (int e = 0; e < grid.num_elements(); ++e) {
    double avg = 0.0;
    for (int p = 0; p < nv; ++p) avg += values(grid.master[grid.elements(p, e)] * components + component);
    sum += grid.geometry(e).volume * avg / nv;
  }
  return sum;
}

CorrectorSet::CorrectorSet(std::shared_ptr<const UnitCellGrid> grid, int components, Matrix values)
    : grid_(std::move(grid)), components_(components), values_(std::move(values)) {
  const int d = grid_->dim;
  const int n = components_;
  if (values_.rows() != static_cast<Eigen::Index>(grid_->num_masters()) * n ||
      values_.cols() != n * d) {
    throw NumericalError("corrector values have the wrong shape");
  }
  gradients_.resize(grid_->num_elements());
  for (int e = 0; e < grid_->num_elements(); ++e) {
    const auto g = grid_->geometry(e);
    TensorBlock Dv = TensorBlock::Zero(n * d, n * d);
    for (int p = 0; p <= d; ++p) {
      const int m = grid_->master[grid_->elements(p, e)];
      for (int ga = 0; ga < n; ++ga)
        for (int k = 0; k < d; ++k)
          Dv.row(ga * d + k) += g.gradients(k, p) * values_.row(m * n + ga);
    }
    gradients_[e] = Dv;
  }
}

double CorrectorSet::node_value(int node, int g, int b, int j) const {
  return values_(grid_->master[node] * components_ + g, b * dim() + j);
}

TensorBlock CorrectorSet::value(const Point& y) const {
  const Location loc = grid_->locate(y);
  const int n = components_;
  TensorBlock v = TensorBlock::Zero(n, n * dim());
  for (int p = 0; p <= dim(); ++p) {
    const int m = grid_->master[grid_->elements(p, loc.element)];
    v += loc.weights(p) * values_.middleRows(m * n, n);
  }
  return v;
}

TensorBlock CorrectorSet::gradient_at(const Point& y) const {
  return gradients_[grid_->locate(y).element];
}

double CorrectorSet::max_mean() const {
  double worst = 0.0;
  for (Eigen::Index c = 0; c < values_.cols(); ++c) {
    const Vector col = values_.col(c);
    for (int g = 0; g < components_; ++g) {
      worst = std::max(worst, std::abs(periodic_mean(*grid_, col, components_, g)));
    }
  }
  return worst;
}

CorrectorSet solve_cell_problems(std::shared_ptr<const UnitCellGrid> grid,
                                 const PeriodicCoefficient& a) {
  check_shapes(*grid, a);
  coercivity_constant(a);  // throws NonCoerciveError
  const int n = a.components();
  const int d = grid->dim;
  const int nv = d + 1;
  const Eigen::Index size = static_cast<Eigen::Index>(grid->num_masters()) * n;

  // Load of column (b, j): -int a_{ij}^{ab} d_i phi^a.
  Matrix loads = Matrix::Zero(size, n * d);
  for (int e = 0; e < grid->num_elements(); ++e) {
    const auto g = grid->geometry(e);
    const TensorBlock A = a(g.barycenter);
    for (int p = 0; p < nv; ++p) {
      const int m = grid->master[grid->elements(p, e)];
      for (int al = 0; al < n; ++al)
        for (int col = 0; col < n * d; ++col) {
          double s = 0.0;
          for (int i = 0; i < d; ++i) s += g.gradients(i, p) * A(al * d + i, col);
          loads(m * n + al, col) -= g.volume * s;
        }
    }
  }
  Matrix values = Matrix::Zero(size, n * d);
  if (loads.cwiseAbs().maxCoeff() > 0.0) {
    const PeriodicSolver solver(grid, periodic_stiffness(*grid, a), n);
    for (int col = 0; col < n * d; ++col) values.col(col) = solver.solve(loads.col(col));
  }
  return CorrectorSet(std::move(grid), n, std::move(values));
}

HomogenizedTensor homogenized_tensor(const UnitCellGrid& grid, const PeriodicCoefficient& a,
                                     const CorrectorSet& correctors) {
  check_shapes(grid, a);
  const int size = a.block_size();
  HomogenizedTensor out;
  out.components = a.components();
  out.dim = grid.dim;
  out.value = TensorBlock::Zero(size, size);
  const TensorBlock identity = TensorBlock::Identity(size, size);
  for (int e = 0; e < grid.num_elements(); ++e) {
    const auto g = grid.geometry(e);
    out.value += g.volume * (a(g.barycenter) * (identity + correctors.gradient(e)));
  }
  out.coercivity = legendre_minimum(out.value);
  return out;
}

double FluxCorrectorSet::antisymmetry_defect() const {
  double worst = 0.0;
  for (int a = 0; a < components; ++a)
    for (int b = 0; b < components; ++b)
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
          for (int k = 0; k < dim; ++k) {
            const double s =
                (h.col(h_column(a, b, i, j, k)) + h.col(h_column(a, b, j, i, k))).cwiseAbs().maxCoeff();
            worst = std::max(worst, s);
          }
  return worst;
}

FluxCorrectorSet flux_correctors(const UnitCellGrid& grid, const PeriodicCoefficient& a,
                                 const CorrectorSet& correctors, const HomogenizedTensor& ahat) {
  check_shapes(grid, a);
  const int n = a.components();
  const int d = grid.dim;
  const int nv = d + 1;
  const int size = n * d;
  FluxCorrectorSet out;
  out.components = n;
  out.dim = d;
  out.f.resize(grid.num_elements(), size * size);
  const TensorBlock identity = TensorBlock::Identity(size, size);
  Vector integral = Vector::Zero(size * size);
  for (int e = 0; e < grid.num_elements(); ++e) {
    const auto g = grid.geometry(e);
    const TensorBlock fe = a(g.barycenter) * (identity + correctors.gradient(e)) - ahat.value;
    for (int r = 0; r < size; ++r)
      for (int c = 0; c < size; ++c) out.f(e, r * size + c) = fe(r, c);
    integral += g.volume * out.f.row(e).transpose();
  }
  if (integral.cwiseAbs().maxCoeff() > 1e-8) {
    throw NumericalError("flux correctors: |int f| = " +
                         std::to_string(integral.cwiseAbs().maxCoeff()) +
                         " exceeds 1e-8; ahat does not match the correctors");
  }

  // Lap g = f weakly: int grad g . grad phi = -int f phi.
  Matrix loads = Matrix::Zero(grid.num_masters(), size * size);
  for (int e = 0; e < grid.num_elements(); ++e) {
    const double w = grid.geometry(e).volume / nv;
    for (int p = 0; p < nv; ++p) loads.row(grid.master[grid.elements(p, e)]) -= w * out.f.row(e);
  }
  out.g = Matrix::Zero(grid.num_masters(), size * size);
  if (loads.cwiseAbs().maxCoeff() > 0.0) {
    auto shared = std::make_shared<const UnitCellGrid>(grid);
    const PeriodicSolver solver(shared, periodic_stiffness(grid, identity_coefficient(1, d)), 1);
    for (int c = 0; c < size * size; ++c) out.g.col(c) = solver.solve(loads.col(c));
  }

  out.h = Matrix::Zero(grid.num_elements(), n * n * d * d * d);
  for (int e = 0; e < grid.num_elements(); ++e) {
    const auto geo = grid.geometry(e);
    // grad_g(c, i): d_i of g column c on this element.
    Matrix grad_g = Matrix::Zero(size * size, d);
    for (int p = 0; p < nv; ++p) {
      const int m = grid.master[grid.elements(p, e)];
      grad_g += out.g.row(m).transpose() * geo.gradients.col(p).transpose();
    }
    for (int al = 0; al < n; ++al)
      for (int be = 0; be < n; ++be)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) {
              out.h(e, out.h_column(al, be, i, j, k)) =
                  grad_g(out.f_column(al, j, be, k), i) - grad_g(out.f_column(al, i, be, k), j);
            }
  }
  return out;
}

WeakIdentityReport flux_weak_identity(const UnitCellGrid& grid, const FluxCorrectorSet& flux) {
  const int n = flux.components;
  const int d = flux.dim;
  const int nv = d + 1;
  const DualNorm dual(periodic_gram(grid).matrix);
  WeakIdentityReport report;
  for (int al = 0; al < n; ++al)
    for (int be = 0; be < n; ++be)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          const int fc = flux.f_column(al, j, be, k);
          Vector res = Vector::Zero(grid.num_masters());
          Vector ref = Vector::Zero(grid.num_masters());
          for (int e = 0; e < grid.num_elements(); ++e) {
            const auto g = grid.geometry(e);
            for (int p = 0; p < nv; ++p) {
              double div = 0.0;
              for (int i = 0; i < d; ++i) div += flux.h_value(e, al, be, i, j, k) * g.gradients(i, p);
              const double fphi = flux.f(e, fc) / nv;
              const int m = grid.master[grid.elements(p, e)];
              // -int h_ijk d_i phi = int f_jk phi
              res(m) += g.volume * (div + fphi);
              ref(m) += g.volume * fphi;
            }
          }
          report.residual = std::max(report.residual, dual(res));
          report.reference = std::max(report.reference, dual(ref));
        }
  return report;
}

VoigtReussBounds voigt_reuss_bounds(const UnitCellGrid& grid, const PeriodicCoefficient& a) {
  check_shapes(grid, a);
  const int size = a.block_size();
  TensorBlock mean = TensorBlock::Zero(size, size);
  TensorBlock inverse_mean = TensorBlock::Zero(size, size);
  for (int e = 0; e < grid.num_elements(); ++e) {
    const auto g = grid.geometry(e);
    const TensorBlock A = a(g.barycenter);
    mean += g.volume * A;
    inverse_mean += g.volume * A.inverse();
  }
  return VoigtReussBounds{mean, inverse_mean.inverse()};
}

std::pair<double, double> voigt_reuss_margins(const HomogenizedTensor& ahat,
                                              const VoigtReussBounds& bounds) {
  return {legendre_minimum(ahat.value - bounds.harmonic),
          legendre_minimum(bounds.arithmetic - ahat.value)};
}

AverageBoundSample periodic_average_bound_check(int dim,
                                                const std::function<double(const Point&)>& w,
                                                const std::vector<double>& radii,
                                                const std::vector<double>& scales,
                                                const std::vector<Point>& centers) {
  if (dim != 1 && dim != 2) throw ConfigError("dimension must be 1 or 2");
  AverageBoundSample out;
  {
    const int k = dim == 1 ? 4096 : 256;
    double cell = 0.0;
    Point y(dim);
    for (int i = 0; i < k; ++i) {
      y(0) = (i + 0.5) / k;
      if (dim == 1) {
        cell += w(y) / k;
        continue;
      }
      for (int j = 0; j < k; ++j) {
        y(1) = (j + 0.5) / k;
        cell += w(y) / (static_cast<double>(k) * k);
      }
    }
    out.bound = std::pow(2.0, dim) * cell;
  }
  for (double r : radii) {
    for (double eps : scales) {
      const double step = std::min(r, eps) / 16.0;
      const int cap = dim == 1 ? 20000 : 600;
      const int k = std::min(cap, std::max(32, static_cast<int>(std::ceil(2.0 * r / step))));
      const double hstep = 2.0 * r / k;
      for (const Point& x : centers) {
        double integral = 0.0;
        Point xi(dim);
        for (int i = 0; i < k; ++i) {
          xi(0) = x(0) - r + (i + 0.5) * hstep;
          if (dim == 1) {
            integral += w(xi / eps) * hstep;
            continue;
          }
          for (int j = 0; j < k; ++j) {
            xi(1) = x(1) - r + (j + 0.5) * hstep;
            if ((xi - x).norm() < r) integral += w(xi / eps) * hstep * hstep;
          }
        }
        const double ratio = integral / std::pow(r + eps, dim);
        if (ratio > out.max_ratio) {
          out.max_ratio = ratio;
          out.radius = r;
          out.eps = eps;
          out.center = x;
        }
      }
    }
  }
  return out;
}

}  // namespace homdef
