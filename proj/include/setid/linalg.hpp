#pragma once

#include <Eigen/Dense>

namespace setid::linalg {

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
Eigen::VectorXd jacobi_eigenvalues(const Eigen::MatrixXd& sym, double tol = 1e-12,
                                   int max_sweeps = 100);

/// Smallest eigenvalue of a symmetric matrix; closed form for 2x2.
double min_eigenvalue(const Eigen::MatrixXd& sym);

} // namespace setid::linalg
