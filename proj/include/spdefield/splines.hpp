#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "spdefield/grid.hpp"

namespace spdefield {

// Quadratic B-spline basis on [a, b] with k functions, constrained so every
// basis function has zero derivative at both endpoints.  The construction
// uses k uniform knot intervals and folds the boundary-crossing standard
// B-splines onto their mirror images, which preserves partition of unity
// (the functions sum to 1) and keeps the basis local.  k = 1 degenerates to
// the constant function.
class Spline1D {
 public:
  Spline1D(double a, double b, int k);

  double a() const { return a_; }
  double b() const { return b_; }
  int size() const { return k_; }
  int num_intervals() const { return intervals_; }
  double knot_spacing() const { return delta_; }

  // Value / first / second derivative of basis function i at x in [a, b].
  double value(int i, double x) const { return eval(i, x, 0); }
  double deriv1(int i, double x) const { return eval(i, x, 1); }
  double deriv2(int i, double x) const { return eval(i, x, 2); }

  // Basis functions with support intersecting knot interval e (0-based).
  std::vector<int> active_on_interval(int e) const;

  // Gram matrix of n-th derivatives, order in {0, 1, 2}:
  // entry (i, j) = integral over [a, b] of g_i^(n) g_j^(n).
  // Computed with 3-point Gauss-Legendre per knot interval, exact for the
  // piecewise-polynomial integrands.
  Eigen::MatrixXd derivative_gram(int order) const;

 private:
  double eval(int i, double x, int order) const;

  double a_, b_;
  int k_;
  int intervals_;
  double delta_;
  // Each constrained function is a sum of standard B-splines; members_[i]
  // lists unconstrained indices r (spline with support [a+(r-2)d, a+(r+1)d]).
  std::vector<std::vector<int>> members_;
};

// Tensor product of an x-basis (k functions) and a y-basis (l functions).
// Function (i, j) is g_i(x) h_j(y); the flat index is i*l + j, so the
// x index varies slowest, matching row-wise stacking of the weights.
class TensorBasis2D {
 public:
  TensorBasis2D(Spline1D bx, Spline1D by)
      : bx_(std::move(bx)), by_(std::move(by)) {}

  const Spline1D& bx() const { return bx_; }
  const Spline1D& by() const { return by_; }
  int size() const { return bx_.size() * by_.size(); }
  int flat(int i, int j) const { return i * by_.size() + j; }

  double value(int i, int j, Point s) const {
    return bx_.value(i, s.x) * by_.value(j, s.y);
  }

 private:
  Spline1D bx_;
  Spline1D by_;
};

TensorBasis2D make_tensor_basis(double a1, double b1, double a2, double b2,
                                int k, int l);

// F (mn x kl): F[cell, fn] = basis function value at the cell center.
// At most 9 non-zeros per row.  Throws ConfigError if the basis and grid
// domains differ.
Eigen::SparseMatrix<double> eval_basis_matrix(const TensorBasis2D& basis,
                                              const RegularGrid& grid);

}  // namespace spdefield
