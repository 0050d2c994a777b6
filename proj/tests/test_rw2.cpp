#include <doctest.h>

#include <Eigen/Dense>
#include <array>
#include <cmath>

#include "spdefield/errors.hpp"
#include "spdefield/rng.hpp"
#include "spdefield/rw2.hpp"

using namespace spdefield;

namespace {

// Brute-force assembly: numerically integrate
//   < Lap f_ij, Lap f_kl >  over D
// with high-order Gauss panels per knot cell (independent of the Kronecker
// identity used by build_rw2).
Eigen::MatrixXd brute_force_rw2(const TensorBasis2D& basis) {
  const Spline1D& bx = basis.bx();
  const Spline1D& by = basis.by();
  const int kl = basis.size();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(kl, kl);
  // 5-point Gauss-Legendre on [-1, 1]
  const std::array<double, 5> gp = {-0.9061798459386640, -0.5384693101056831,
                                    0.0, 0.5384693101056831,
                                    0.9061798459386640};
  const std::array<double, 5> gw = {0.2369268850561891, 0.4786286704993665,
                                    0.5688888888888889, 0.4786286704993665,
                                    0.2369268850561891};
  auto lap = [&](int i, int j, double x, double y) {
    return bx.deriv2(i, x) * by.value(j, y) +
           bx.value(i, x) * by.deriv2(j, y);
  };
  for (int ex = 0; ex < bx.num_intervals(); ++ex) {
    for (int ey = 0; ey < by.num_intervals(); ++ey) {
      const double x0 = bx.a() + ex * bx.knot_spacing();
      const double y0 = by.a() + ey * by.knot_spacing();
      for (int qx = 0; qx < 5; ++qx) {
        for (int qy = 0; qy < 5; ++qy) {
          const double x = x0 + 0.5 * bx.knot_spacing() * (1.0 + gp[qx]);
          const double y = y0 + 0.5 * by.knot_spacing() * (1.0 + gp[qy]);
          const double w = 0.25 * bx.knot_spacing() * by.knot_spacing() *
                           gw[qx] * gw[qy];
          for (int i = 0; i < bx.size(); ++i) {
            for (int j = 0; j < by.size(); ++j) {
              const double a = lap(i, j, x, y);
              if (a == 0.0) continue;
              for (int i2 = 0; i2 < bx.size(); ++i2) {
                for (int j2 = 0; j2 < by.size(); ++j2) {
                  const double b = lap(i2, j2, x, y);
                  if (b == 0.0) continue;
                  C(basis.flat(i, j), basis.flat(i2, j2)) += w * a * b;
                }
              }
            }
          }
        }
      }
    }
  }
  return C;
}

}  // namespace

TEST_SUITE("rw2") {

TEST_CASE("constant-function coefficients are in the null space") {
  for (auto [k, l] : {std::pair{2, 2}, {3, 2}, {4, 4}, {2, 5}}) {
    const TensorBasis2D basis = make_tensor_basis(0, 2, 0, 1, k, l);
    const Rw2Precision prec = build_rw2(basis);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(k * l);
    CHECK((prec.Q * ones).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("k = l = 1 degenerates to the 1x1 zero matrix") {
  const TensorBasis2D basis = make_tensor_basis(0, 1, 0, 1, 1, 1);
  const Rw2Precision prec = build_rw2(basis);
  CHECK(prec.Q.rows() == 1);
  CHECK(Eigen::MatrixXd(prec.Q)(0, 0) == doctest::Approx(0.0));
  CHECK(prec.rank == 0);
}

TEST_CASE("numerical rank is kl - 1") {
  for (auto [k, l] : {std::pair{2, 2}, {3, 3}, {4, 4}, {4, 2}}) {
    const TensorBasis2D basis = make_tensor_basis(0, 1, 0, 1, k, l);
    const Rw2Precision prec = build_rw2(basis);
    CHECK(prec.rank == k * l - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        Eigen::MatrixXd(prec.Q));
    const double lmax = es.eigenvalues().maxCoeff();
    int numerical_rank = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
      if (es.eigenvalues()[i] > 1e-10 * lmax) ++numerical_rank;
    }
    CHECK(numerical_rank == k * l - 1);
  }
}

TEST_CASE("prior quadratic form: null space, zero vector, tau linearity") {
  const TensorBasis2D basis = make_tensor_basis(0, 1, 0, 1, 3, 3);
  const Rw2Precision prec = build_rw2(basis);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(9);
  CHECK(prior_quadform(prec, 5.0 * ones, 3.7) == doctest::Approx(0.0));
  CHECK(prior_quadform(prec, Eigen::VectorXd::Zero(9), 1.0) == 0.0);

  Rng rng(8);
  Eigen::VectorXd alpha(9);
  for (int i = 0; i < 9; ++i) alpha[i] = rng.normal();
  const double q1 = prior_quadform(prec, alpha, 1.0);
  const double q2 = prior_quadform(prec, alpha, 2.0);
  CHECK(q2 == doctest::Approx(2.0 * q1).epsilon(1e-14));
  CHECK(q1 <= 0.0);  // -(tau/2) alpha^T Q alpha with Q PSD
}

TEST_CASE("quadratic form is PSD and vanishes only on constants") {
  const TensorBasis2D basis = make_tensor_basis(0, 1, 0, 2, 3, 4);
  const Rw2Precision prec = build_rw2(basis);
  const Eigen::MatrixXd Q = Eigen::MatrixXd(prec.Q);
  Rng rng(99);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(12);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd a(12);
    for (int i = 0; i < 12; ++i) a[i] = rng.normal();
    const double q = a.dot(Q * a);
    CHECK(q >= -1e-12);
    // remove the constant component; the residual must have q > 0
    const Eigen::VectorXd resid = a - (a.mean()) * ones;
    if (resid.norm() > 1e-10) {
      CHECK(resid.dot(Q * resid) > 0.0);
    }
  }
}

TEST_CASE("Kronecker assembly matches the brute-force integration oracle") {
  for (auto [k, l] : {std::pair{1, 1}, {2, 2}, {3, 2}, {3, 3}}) {
    const TensorBasis2D basis = make_tensor_basis(0, 2, -1, 1, k, l);
    const Rw2Precision prec = build_rw2(basis);
    const Eigen::MatrixXd oracle = brute_force_rw2(basis);
    CHECK((Eigen::MatrixXd(prec.Q) - oracle).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("invalid parameters") {
  const TensorBasis2D basis = make_tensor_basis(0, 1, 0, 1, 2, 2);
  const Rw2Precision prec = build_rw2(basis);
  CHECK_THROWS_AS(prior_quadform(prec, Eigen::VectorXd::Zero(4), 0.0),
                  ParameterError);
  CHECK_THROWS_AS(prior_quadform(prec, Eigen::VectorXd::Zero(3), 1.0),
                  DimensionError);
}

}  // TEST_SUITE
