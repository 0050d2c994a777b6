#include "spdefield/matern.hpp"

#include <cmath>
#include <numbers>

#include "spdefield/errors.hpp"

namespace spdefield {

double matern_correlation(double kappa, double d) {
  if (kappa <= 0.0) throw ParameterError("kappa must be positive");
  if (d < 0.0) throw ParameterError("distance must be non-negative");
  const double x = kappa * d;
  if (x == 0.0) return 1.0;
  // x K1(x) -> 1 as x -> 0; for large x cyl_bessel_k underflows to 0.
  return x * std::cyl_bessel_k(1.0, x);
}

double matern_marginal_variance(double kappa2, const Eigen::Matrix2d& H) {
  if (kappa2 <= 0.0) throw ParameterError("kappa2 must be positive");
  const double det = H.determinant();
  if (det <= 0.0) throw ParameterError("H must be positive definite");
  return 1.0 / (4.0 * std::numbers::pi * kappa2 * std::sqrt(det));
}

double matern_covariance(double kappa2, const Eigen::Matrix2d& H,
                         const Eigen::Vector2d& diff) {
  // kappa ||H^{-1/2} d|| = ||(H / kappa^2)^{-1/2} d||
  const Eigen::Matrix2d M = H / kappa2;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(M);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw ParameterError("H must be positive definite");
  }
  const Eigen::Vector2d w = es.eigenvectors().transpose() * diff;
  double s2 = 0.0;
  for (int k = 0; k < 2; ++k) s2 += w[k] * w[k] / es.eigenvalues()[k];
  const double x = std::sqrt(s2);
  const double corr = (x == 0.0) ? 1.0 : x * std::cyl_bessel_k(1.0, x);
  return matern_marginal_variance(kappa2, H) * corr;
}

Eigen::Matrix2d anisotropy_matrix(double gamma, double vx, double vy) {
  Eigen::Matrix2d H;
  H << gamma + vx * vx, vx * vy, vx * vy, gamma + vy * vy;
  return H;
}

double matern_range(double kappa) {
  if (kappa <= 0.0) throw ParameterError("kappa must be positive");
  return std::sqrt(8.0) / kappa;
}

double correlation_radius(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw ParameterError("correlation level must be in (0, 1)");
  }
  // x K1(x) is strictly decreasing from 1 to 0; bisect.
  double lo = 1e-12, hi = 1.0;
  auto f = [](double x) { return x * std::cyl_bessel_k(1.0, x); };
  while (f(hi) > level) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > level) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Eigen::MatrixX2d correlation_ellipse(double kappa2, const Eigen::Matrix2d& H,
                                     const Eigen::Vector2d& center,
                                     double level, int segments) {
  if (segments < 3) throw ParameterError("ellipse needs at least 3 segments");
  const double kappa = std::sqrt(kappa2);
  const double xstar = correlation_radius(level);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(H);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw ParameterError("H must be positive definite");
  }
  const Eigen::Matrix2d sqrtH =
      es.eigenvectors() *
      es.eigenvalues().cwiseSqrt().asDiagonal() *
      es.eigenvectors().transpose();
  Eigen::MatrixX2d out(segments, 2);
  for (int s = 0; s < segments; ++s) {
    const double t = 2.0 * std::numbers::pi * s / segments;
    const Eigen::Vector2d dir(std::cos(t), std::sin(t));
    const Eigen::Vector2d p = center + (xstar / kappa) * (sqrtH * dir);
    out(s, 0) = p.x();
    out(s, 1) = p.y();
  }
  return out;
}

}  // namespace spdefield
