#pragma once

#include <Eigen/Dense>

namespace spdefield {

// Whittle-Matern covariance of the field driven by
// (kappa^2 - div H grad) u = sigma W in 2-D (smoothness nu = 1), with
// sigma = 1 throughout.

// Correlation at Euclidean distance d for the isotropic field:
// rho(d) = (kappa d) K1(kappa d), rho(0) = 1.
double matern_correlation(double kappa, double d);

// Marginal variance 1 / (4 pi kappa^2 sqrt(det H)).
double matern_marginal_variance(double kappa2, const Eigen::Matrix2d& H);

// Covariance between locations separated by `diff` for constant kappa^2
// and anisotropy H: variance * rho(||(H/kappa^2)^{-1/2} diff||).
double matern_covariance(double kappa2, const Eigen::Matrix2d& H,
                         const Eigen::Vector2d& diff);

// H = gamma I + v v^T.
Eigen::Matrix2d anisotropy_matrix(double gamma, double vx, double vy);

// Effective range sqrt(8)/kappa (correlation ~ 0.14) of the isotropic field.
double matern_range(double kappa);

// Scaled distance x solving x K1(x) = level, 0 < level < 1; used for
// isocorrelation contours.
double correlation_radius(double level);

// Correlation ellipse at `level` for the local stationary model: points
// center + (x*/kappa) H^{1/2} (cos t, sin t), t in [0, 2pi), as a closed
// polyline with `segments` vertices.
Eigen::MatrixX2d correlation_ellipse(double kappa2, const Eigen::Matrix2d& H,
                                     const Eigen::Vector2d& center,
                                     double level, int segments = 128);

}  // namespace spdefield
