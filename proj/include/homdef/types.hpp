#ifndef HOMDEF_TYPES_HPP
#define HOMDEF_TYPES_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>

namespace homdef {

/// Largest supported (components * dimension); keeps small tensors off the heap.
inline constexpr int kMaxBlock = 8;

/// Point in R^d, d in {1,2}.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 2, 1>;

/// Tensor a_{ij}^{ab} flattened to a (n*d) x (n*d) block, row = a*d + i, col = b*d + j.
using TensorBlock =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxBlock, kMaxBlock>;

/// Small vector of length <= kMaxBlock (nodal component values, flux rows, ...).
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxBlock, 1>;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using CsrMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using CscMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: bad config, unknown coefficient name, h vs eps violation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: breakdown, singular system, non-coercive data.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NonCoerciveError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Iterative method failed to converge or iteration became non-contractive.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace homdef

#endif  // HOMDEF_TYPES_HPP
