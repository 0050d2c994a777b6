#include "spdefield/simulate.hpp"

#include <cmath>

#include "spdefield/errors.hpp"
#include "spdefield/sparse.hpp"
#include "spdefield/spde.hpp"

namespace spdefield {

Eigen::VectorXd sample_field(const SpdeGmrfModel& model,
                             const Eigen::VectorXd& theta, Rng& rng) {
  const AnisotropyField fields = materialize_fields(
      model.F, model.alpha(theta, 0), model.alpha(theta, 1),
      model.alpha(theta, 2), model.alpha(theta, 3));
  const SpdeOperator op = assemble(model.grid, fields);
  SparseCholesky chol("Q");
  chol.factorize(op.Q);
  Eigen::VectorXd z(model.grid.num_cells());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return chol.sample(z);
}

std::vector<Point> random_locations(const RegularGrid& grid, int n, Rng& rng) {
  std::vector<Point> out(n);
  for (int i = 0; i < n; ++i) {
    out[i] = {rng.uniform(grid.a1(), grid.b1()),
              rng.uniform(grid.a2(), grid.b2())};
  }
  return out;
}

SimulatedObservations simulate_observations(const SpdeGmrfModel& model,
                                            const Eigen::VectorXd& theta,
                                            const Eigen::VectorXd& beta,
                                            const std::vector<Point>& locations,
                                            const Eigen::MatrixXd& X,
                                            Rng& rng) {
  if (X.rows() != static_cast<Eigen::Index>(locations.size()) ||
      X.cols() != beta.size()) {
    throw DimensionError("simulate_observations: X shape must be "
                         "num_locations x len(beta)");
  }
  SimulatedObservations out;
  out.locations = locations;
  out.X = X;
  out.field = sample_field(model, theta, rng);
  const double tau = std::exp(model.log_tau_noise(theta));
  const double noise_sd = 1.0 / std::sqrt(tau);
  out.y.resize(locations.size());
  for (std::size_t i = 0; i < locations.size(); ++i) {
    const int cell = model.grid.flatten(model.grid.locate(locations[i]));
    out.y[i] = X.row(i).dot(beta) + out.field[cell] + noise_sd * rng.normal();
  }
  return out;
}

}  // namespace spdefield
