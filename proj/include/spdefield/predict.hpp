#pragma once

#include <Eigen/Dense>

#include "spdefield/inference.hpp"
#include "spdefield/posterior.hpp"

namespace spdefield {

// Posterior prediction of x(s)^T beta + u(s) at every cell center.
struct PredictionField {
  Eigen::VectorXd mean;  // mn
  Eigen::VectorXd sd;    // mn
  bool include_noise = false;
};

// Means and standard deviations from the conditional of z = (u, beta).
// Xstar supplies the covariate row for every cell; its column count must
// equal the number of covariates.  With include_noise the variance gains
// 1/tau_noise.
PredictionField predict_from_conditional(const LatentConditional& lat,
                                         const Eigen::MatrixXd& Xstar,
                                         bool include_noise);

// Convenience wrapper: rebuilds the model from the fit and conditions on
// the observations.
PredictionField predict(const FitResult& fit, const RegularGrid& grid,
                        const ObservationModel& obs,
                        const Eigen::MatrixXd& Xstar, bool include_noise);

}  // namespace spdefield
