#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "spdefield/splines.hpp"

namespace spdefield {

// Precision of the two-dimensional second-order random-walk prior on spline
// weights.  Q annihilates the coefficients of the constant function (the
// all-ones vector under partition of unity), so its rank is kl - 1.
struct Rw2Precision {
  Eigen::SparseMatrix<double> Q;  // kl x kl, symmetric PSD
  int rank = 0;                   // kl - 1
};

// Q = G2 (x) H0 + 2 G1 (x) H1 + G0 (x) H2, with G_n the x-spline derivative
// Gram matrices and H_n the y-spline ones.  Kronecker ordering matches the
// row-wise weight stacking (x index slowest).
Rw2Precision build_rw2(const TensorBasis2D& basis);

// Log-prior contribution -(tau/2) alpha^T Q alpha (additive constants
// dropped; tau is fixed before optimization).  Throws ParameterError for
// non-positive tau.
double prior_quadform(const Rw2Precision& prec, const Eigen::VectorXd& alpha,
                      double tau);

}  // namespace spdefield
