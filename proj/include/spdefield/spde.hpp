#pragma once

#include <Eigen/Sparse>

#include "spdefield/fields.hpp"
#include "spdefield/grid.hpp"

namespace spdefield {

// Finite-volume discretization of (kappa^2 - div H grad) with zero-flux
// boundary conditions.  A has a 9-point stencil; Q = A^T A V has at most 25
// non-zeros per row.
struct SpdeOperator {
  Eigen::SparseMatrix<double> A;
  Eigen::SparseMatrix<double> Q;
  double V = 0.0;
};

// Assembles A and Q from per-cell field values.  H at cell edges is the
// arithmetic mean of the two adjacent cells; tangential differences at the
// boundary ring use one-sided averages.  Throws ParameterError if any
// kappa^2 is not strictly positive.
SpdeOperator assemble(const RegularGrid& grid, const AnisotropyField& f);

// dA / d alpha_{field}[idx] for field 1..4 = (log kappa^2, log gamma, vx,
// vy).  F is the basis evaluation matrix used to materialize the fields.
// The result's support is restricted to cells where basis function idx is
// non-zero.
Eigen::SparseMatrix<double> assemble_dA(const RegularGrid& grid,
                                        const AnisotropyField& f,
                                        const Eigen::SparseMatrix<double>& F,
                                        int field, int idx);

// dQ = (dA^T A + A^T dA) V.
Eigen::SparseMatrix<double> precision_derivative(
    const SpdeOperator& op, const Eigen::SparseMatrix<double>& dA);

}  // namespace spdefield
