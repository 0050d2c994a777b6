#pragma once

#include <Eigen/Dense>
#include <vector>

#include "spdefield/posterior.hpp"
#include "spdefield/rng.hpp"

namespace spdefield {

// One draw of u ~ N(0, Q(theta)^{-1}) on the grid cells.
Eigen::VectorXd sample_field(const SpdeGmrfModel& model,
                             const Eigen::VectorXd& theta, Rng& rng);

// n locations uniform over the grid domain.
std::vector<Point> random_locations(const RegularGrid& grid, int n, Rng& rng);

struct SimulatedObservations {
  std::vector<Point> locations;
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  Eigen::VectorXd field;  // the latent draw used
};

// y_i = x_i^T beta + u(cell(s_i)) + eps_i with eps ~ N(0, 1/tau_noise) from
// theta's last component.  X must have one row per location.
SimulatedObservations simulate_observations(const SpdeGmrfModel& model,
                                            const Eigen::VectorXd& theta,
                                            const Eigen::VectorXd& beta,
                                            const std::vector<Point>& locations,
                                            const Eigen::MatrixXd& X,
                                            Rng& rng);

}  // namespace spdefield
