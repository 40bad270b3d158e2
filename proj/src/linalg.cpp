#include "homdef/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/OrderingMethods>

namespace homdef {

double SparseOperator::max_asymmetry() const {
  const CsrMatrix transposed = matrix.transpose();
  const CsrMatrix diff = matrix - transposed;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < diff.nonZeros(); ++k) {
    worst = std::max(worst, std::abs(diff.valuePtr()[k]));
  }
  return worst;
}

void SparseOperator::refresh_symmetry() {
  double scale = 1.0;
  for (Eigen::Index k = 0; k < matrix.nonZeros(); ++k) {
    scale = std::max(scale, std::abs(matrix.valuePtr()[k]));
  }
  symmetric = matrix.rows() == matrix.cols() && max_asymmetry() <= 1e-12 * scale;
}

CgResult conjugate_gradient(const CsrMatrix& matrix, const Vector& rhs, const CgOptions& options) {
  const Eigen::Index n = matrix.rows();
  CgResult result;
  result.solution = Vector::Zero(n);
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) return result;

  Vector inv_diag(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = matrix.coeff(i, i);
    if (!(d > 0.0)) {
      throw NumericalError("conjugate gradients: non-positive diagonal entry at row " +
                           std::to_string(i));
    }
    inv_diag(i) = 1.0 / d;
  }
  const int max_it = options.max_iterations > 0 ? options.max_iterations
                                                : static_cast<int>(10 * n + 100);
  Vector& x = result.solution;
  Vector r = rhs;
  Vector z = inv_diag.cwiseProduct(r);
  Vector p = z;
  Vector q(n);
  double rz = r.dot(z);
  const double target = options.relative_tolerance * rhs_norm;
  for (int it = 1; it <= max_it; ++it) {
    q.noalias() = matrix * p;
    const double curvature = p.dot(q);
    if (!(curvature > 0.0)) {
      throw NumericalError("conjugate gradients: breakdown, operator is not positive definite");
    }
    const double alpha = rz / curvature;
    x += alpha * p;
    r -= alpha * q;
    result.iterations = it;
    if (r.norm() <= target) {
      // Guard against drift of the recursive residual.
      const double true_res = (rhs - matrix * x).norm();
      if (true_res <= target) {
        result.relative_residual = true_res / rhs_norm;
        return result;
      }
      r = rhs - matrix * x;
    }
    z = inv_diag.cwiseProduct(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  throw NumericalError("conjugate gradients: no convergence after " + std::to_string(max_it) +
                       " iterations (relative residual " +
                       std::to_string((rhs - matrix * x).norm() / rhs_norm) + ")");
}

Vector solve_spd(const SparseOperator& op, const Vector& rhs, const CgOptions& options) {
  if (op.matrix.rows() != rhs.size()) throw NumericalError("solve_spd: size mismatch");
  if (!op.symmetric) return Factorization(op).solve(rhs);
  return conjugate_gradient(op.matrix, rhs, options).solution;
}

Factorization::Factorization(const SparseOperator& op, const Permutation* order)
    : size_(op.matrix.rows()) {
  const CscMatrix csc = op.matrix;
  if (op.symmetric) {
    if (order) {
      if (order->size() != size_) throw NumericalError("ordering size does not match the operator");
      perm_ = *order;
    } else {
      Permutation inverse;
      Eigen::AMDOrdering<int> amd;
      const CscMatrix full = csc.selfadjointView<Eigen::Lower>();
      amd(full, inverse);
      perm_ = inverse.inverse();
    }
    CscMatrix permuted;
    permuted = csc.selfadjointView<Eigen::Lower>().twistedBy(perm_);
    ldlt_ = std::make_unique<Eigen::SimplicialLDLT<CscMatrix, Eigen::Lower, Eigen::NaturalOrdering<int>>>();
    ldlt_->compute(permuted);
    if (ldlt_->info() != Eigen::Success) {
      throw NumericalError("LDL^T factorization failed (singular operator)");
    }
    const Vector diag = ldlt_->vectorD();
    const double scale = diag.cwiseAbs().maxCoeff();
    if (!(diag.cwiseAbs().minCoeff() > 1e-14 * scale)) {
      throw NumericalError("LDL^T factorization: numerically singular operator");
    }
    return;
  }
  lu_ = std::make_unique<Eigen::SparseLU<CscMatrix>>();
  lu_->compute(csc);
  if (lu_->info() != Eigen::Success) {
    throw NumericalError("sparse LU factorization failed: " + lu_->lastErrorMessage());
  }
}

Vector Factorization::solve(const Vector& rhs) const {
  if (ldlt_) return perm_.transpose() * ldlt_->solve(perm_ * rhs);
  return lu_->solve(rhs);
}

Vector Factorization::solve_transpose(const Vector& rhs) const {
  if (ldlt_) return solve(rhs);
  return lu_->transpose().solve(rhs);
}

SpectralEstimate smallest_singular_value(const Factorization& jacobian, const CsrMatrix& gram,
                                         double relative_tolerance, int max_iterations) {
  // T = J^{-1} G J^{-T} G is G-self-adjoint and positive; its largest eigenvalue is
  // 1/sigma_min^2. Explicitly restarted Lanczos in the G inner product.
  constexpr int kKrylov = 20;
  const Eigen::Index n = gram.rows();
  SpectralEstimate est;
  if (n == 0) return est;
  auto apply = [&](const Vector& x) -> Vector {
    return jacobian.solve(gram * jacobian.solve_transpose(gram * x));
  };
  Vector start = Vector::Ones(n);
  double theta_prev = 0.0;
  while (est.iterations < max_iterations) {
    const int k = static_cast<int>(std::min<Eigen::Index>(kKrylov, n));
    Matrix V(n, k);
    Matrix GV(n, k);
    Vector alpha = Vector::Zero(k);
    Vector beta = Vector::Zero(k);
    Vector g = gram * start;
    double norm = std::sqrt(start.dot(g));
    V.col(0) = start / norm;
    GV.col(0) = g / norm;
    int steps = 0;
    for (int j = 0; j < k; ++j) {
      Vector w = apply(V.col(j));
      ++est.iterations;
      ++steps;
      alpha(j) = w.dot(GV.col(j));
      // Full reorthogonalization, twice.
      for (int pass = 0; pass < 2; ++pass) {
        const Vector c = GV.leftCols(j + 1).transpose() * w;
        w -= V.leftCols(j + 1) * c;
      }
      g = gram * w;
      beta(j) = std::sqrt(std::max(0.0, w.dot(g)));
      if (j + 1 == k || beta(j) <= 1e-14 * std::abs(alpha(j))) break;
      V.col(j + 1) = w / beta(j);
      GV.col(j + 1) = g / beta(j);
    }
    Matrix tri = Matrix::Zero(steps, steps);
    for (int j = 0; j < steps; ++j) {
      tri(j, j) = alpha(j);
      if (j + 1 < steps) tri(j, j + 1) = tri(j + 1, j) = beta(j);
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(tri);
    const double theta = eig.eigenvalues()(steps - 1);
    const Vector s = eig.eigenvectors().col(steps - 1);
    if (!(theta > 0.0)) throw NumericalError("singular value estimate: non-positive Ritz value");
    est.value = 1.0 / std::sqrt(theta);
    const double residual = std::abs(beta(steps - 1) * s(steps - 1));
    if (residual <= relative_tolerance * theta ||
        (theta_prev > 0.0 && std::abs(theta - theta_prev) <= relative_tolerance * theta)) {
      est.converged = true;
      break;
    }
    theta_prev = theta;
    start = V.leftCols(steps) * s;
  }
  return est;
}

DualNorm::DualNorm(CsrMatrix gram, const Permutation* order)
    : gram_(std::move(gram)), factor_(SparseOperator{gram_, true}, order) {}

double DualNorm::operator()(const Vector& phi) const {
  if (phi.size() == 0) return 0.0;
  const Vector w = factor_.solve(phi);
  return std::sqrt(std::max(0.0, phi.dot(w)));
}

double DualNorm::primal(const Vector& v) const {
  return std::sqrt(std::max(0.0, v.dot(gram_ * v)));
}

}  // namespace homdef
