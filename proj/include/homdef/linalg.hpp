#ifndef HOMDEF_LINALG_HPP
#define HOMDEF_LINALG_HPP

#include "homdef/types.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <memory>

namespace homdef {

/// Assembled Galerkin operator in compressed-row storage.
struct SparseOperator {
  CsrMatrix matrix;
  /// Set only when max |K - K^T| <= 1e-12 * max(1, max |K|).
  bool symmetric = false;

  Eigen::Index rows() const { return matrix.rows(); }
  double max_asymmetry() const;
  /// Recomputes the symmetric flag from the stored values.
  void refresh_symmetry();
};

struct CgOptions {
  double relative_tolerance = 1e-10;
  /// 0 selects 10 * n + 100.
  int max_iterations = 0;
};

struct CgResult {
  Vector solution;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients. Throws NumericalError on breakdown
/// (p^T K p <= 0, i.e. K not positive definite) or when max_iterations is exhausted.
CgResult conjugate_gradient(const CsrMatrix& matrix, const Vector& rhs, const CgOptions& options = {});

/// Solves K x = rhs: conjugate gradients for symmetric K, sparse LU otherwise.
Vector solve_spd(const SparseOperator& op, const Vector& rhs, const CgOptions& options = {});

/// Symmetric permutation, indices()[old] = new.
using Permutation = Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int>;

/// Direct factorization, LDL^T for symmetric operators and LU otherwise. The symmetric
/// path uses `order` as fill-reducing permutation when given, AMD otherwise.
class Factorization {
 public:
  explicit Factorization(const SparseOperator& op, const Permutation* order = nullptr);

  Vector solve(const Vector& rhs) const;
  Vector solve_transpose(const Vector& rhs) const;
  bool symmetric() const { return static_cast<bool>(ldlt_); }
  Eigen::Index size() const { return size_; }

 private:
  Eigen::Index size_ = 0;
  Permutation perm_;
  std::unique_ptr<Eigen::SimplicialLDLT<CscMatrix, Eigen::Lower, Eigen::NaturalOrdering<int>>> ldlt_;
  std::unique_ptr<Eigen::SparseLU<CscMatrix>> lu_;
};

struct SpectralEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Smallest singular value of G^{-1/2} J G^{-1/2} (the inf-sup constant of J from
/// the G-norm into its dual) from the largest eigenvalue of J^{-1} G J^{-T} G.
/// max_iterations bounds the number of operator applications.
SpectralEstimate smallest_singular_value(const Factorization& jacobian, const CsrMatrix& gram,
                                         double relative_tolerance = 1e-6,
                                         int max_iterations = 500);

/// Discrete W^{-1,2} norm sqrt(phi^T G^{-1} phi) with G factored once.
class DualNorm {
 public:
  explicit DualNorm(CsrMatrix gram, const Permutation* order = nullptr);

  double operator()(const Vector& phi) const;
  /// Discrete H^1 norm sqrt(v^T G v).
  double primal(const Vector& v) const;
  const CsrMatrix& gram() const { return gram_; }
  const Factorization& factorization() const { return factor_; }

 private:
  CsrMatrix gram_;
  Factorization factor_;
};

}  // namespace homdef

#endif  // HOMDEF_LINALG_HPP
