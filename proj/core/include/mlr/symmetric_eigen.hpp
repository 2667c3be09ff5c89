#pragma once

#include <Eigen/Core>

namespace mlr::linalg {

/// Eigenpairs of a real symmetric matrix, eigenvalues sorted descending,
/// eigenvectors as the matching orthonormal columns.
struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

/// Householder tridiagonalization followed by implicit QL with Wilkinson-style
/// shifts. Only the lower triangle of `a` is trusted; it is symmetrized first.
/// Throws NumericalError when QL fails to converge.
SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& a);

}  // namespace mlr::linalg
