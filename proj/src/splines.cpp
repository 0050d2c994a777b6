#include "spdefield/splines.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "spdefield/errors.hpp"

namespace spdefield {

namespace {

// Standard quadratic B-spline Q on [0, 3] (uniform knots 0,1,2,3) and its
// derivatives.  Q is C^1; Q(0)=Q(3)=0, Q'(0)=Q'(3)=0.
double qspline(double t, int order) {
  if (t < 0.0 || t > 3.0) return 0.0;
  if (t < 1.0) {
    switch (order) {
      case 0: return 0.5 * t * t;
      case 1: return t;
      default: return 1.0;
    }
  }
  if (t < 2.0) {
    switch (order) {
      case 0: return 0.5 * (-2.0 * t * t + 6.0 * t - 3.0);
      case 1: return -2.0 * t + 3.0;
      default: return -2.0;
    }
  }
  switch (order) {
    case 0: return 0.5 * (3.0 - t) * (3.0 - t);
    case 1: return t - 3.0;
    default: return 1.0;
  }
}

// 3-point Gauss-Legendre nodes/weights on [-1, 1]; exact through degree 5.
constexpr std::array<double, 3> kGaussNodes = {
    -0.7745966692414834, 0.0, 0.7745966692414834};
constexpr std::array<double, 3> kGaussWeights = {
    5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

}  // namespace

Spline1D::Spline1D(double a, double b, int k) : a_(a), b_(b), k_(k) {
  if (!(b > a)) throw ParameterError("spline interval must have b > a");
  if (k < 1) throw ParameterError("spline basis needs at least one function");
  intervals_ = k;
  delta_ = (b - a) / intervals_;
  members_.resize(k);
  // Unconstrained splines r = 0 .. intervals_+1 cover [a, b]; zero endpoint
  // derivative forces c_0 = c_1 and c_{M} = c_{M+1}.
  if (k == 1) {
    members_[0] = {0, 1, 2};  // both constraints chain: the constant
  } else {
    members_[0] = {0, 1};
    for (int i = 1; i < k - 1; ++i) members_[i] = {i + 1};
    members_[k - 1] = {k, k + 1};
  }
}

double Spline1D::eval(int i, double x, int order) const {
  if (i < 0 || i >= k_) {
    throw BoundsError("spline index " + std::to_string(i) +
                      " out of range for basis of size " + std::to_string(k_));
  }
  const double u = (x - a_) / delta_;
  double acc = 0.0;
  for (int r : members_[i]) {
    acc += qspline(u - (r - 2), order);
  }
  const double scale = std::pow(1.0 / delta_, order);
  return acc * scale;
}

std::vector<int> Spline1D::active_on_interval(int e) const {
  std::vector<int> out;
  for (int i = 0; i < k_; ++i) {
    for (int r : members_[i]) {
      // Unconstrained spline r spans intervals r-2 .. r.
      if (e >= r - 2 && e <= r) {
        out.push_back(i);
        break;
      }
    }
  }
  return out;
}

Eigen::MatrixXd Spline1D::derivative_gram(int order) const {
  if (order < 0 || order > 2) {
    throw ParameterError("derivative order must be 0, 1 or 2");
  }
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(k_, k_);
  for (int e = 0; e < intervals_; ++e) {
    const double x0 = a_ + e * delta_;
    const std::vector<int> active = active_on_interval(e);
    for (int q = 0; q < 3; ++q) {
      const double x = x0 + 0.5 * delta_ * (1.0 + kGaussNodes[q]);
      const double w = 0.5 * delta_ * kGaussWeights[q];
      std::vector<double> vals(active.size());
      for (std::size_t s = 0; s < active.size(); ++s) {
        vals[s] = eval(active[s], x, order);
      }
      for (std::size_t s = 0; s < active.size(); ++s) {
        for (std::size_t t = 0; t < active.size(); ++t) {
          G(active[s], active[t]) += w * vals[s] * vals[t];
        }
      }
    }
  }
  return G;
}

TensorBasis2D make_tensor_basis(double a1, double b1, double a2, double b2,
                                int k, int l) {
  return TensorBasis2D(Spline1D(a1, b1, k), Spline1D(a2, b2, l));
}

Eigen::SparseMatrix<double> eval_basis_matrix(const TensorBasis2D& basis,
                                              const RegularGrid& grid) {
  if (!grid.same_domain(basis.bx().a(), basis.bx().b(), basis.by().a(),
                        basis.by().b())) {
    throw ConfigError("basis and grid domains differ");
  }
  const int kl = basis.size();
  Eigen::SparseMatrix<double> F(grid.num_cells(), kl);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(grid.num_cells()) * 9);
  for (int j = 0; j < grid.n(); ++j) {
    for (int i = 0; i < grid.m(); ++i) {
      const CellIndex c{i, j};
      const Point p = grid.cell_center(c);
      const int row = grid.flatten(c);
      const int ex = std::min(
          basis.bx().num_intervals() - 1,
          static_cast<int>((p.x - basis.bx().a()) / basis.bx().knot_spacing()));
      const int ey = std::min(
          basis.by().num_intervals() - 1,
          static_cast<int>((p.y - basis.by().a()) / basis.by().knot_spacing()));
      for (int bi : basis.bx().active_on_interval(ex)) {
        const double gx = basis.bx().value(bi, p.x);
        if (gx == 0.0) continue;
        for (int bj : basis.by().active_on_interval(ey)) {
          const double hy = basis.by().value(bj, p.y);
          if (hy == 0.0) continue;
          trips.emplace_back(row, basis.flat(bi, bj), gx * hy);
        }
      }
    }
  }
  F.setFromTriplets(trips.begin(), trips.end());
  return F;
}

}  // namespace spdefield
