#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "spdefield/grid.hpp"
#include "spdefield/splines.hpp"

namespace spdefield {

enum class FieldTransform { Identity, Exp };

// Spline-weight representation of one scalar coefficient function.
struct CoefficientField {
  Eigen::VectorXd alpha;  // kl weights
  double tau = 1.0;       // smoothing hyperparameter (fixed before fitting)
  FieldTransform transform = FieldTransform::Identity;
};

// Per-cell values of kappa^2 and of H = gamma I + v v^T.
struct AnisotropyField {
  Eigen::VectorXd kappa2;
  Eigen::VectorXd gamma;
  Eigen::VectorXd vx;
  Eigen::VectorXd vy;
  Eigen::VectorXd H11;
  Eigen::VectorXd H12;
  Eigen::VectorXd H22;
};

// Evaluates the four coefficient functions at cell centers:
// kappa^2 = exp(F a1), gamma = exp(F a2), vx = F a3, vy = F a4.
// F is the basis evaluation matrix from eval_basis_matrix.
// Throws ParameterError on non-finite weights.
AnisotropyField materialize_fields(const Eigen::SparseMatrix<double>& F,
                                   const Eigen::VectorXd& alpha1,
                                   const Eigen::VectorXd& alpha2,
                                   const Eigen::VectorXd& alpha3,
                                   const Eigen::VectorXd& alpha4);

}  // namespace spdefield
