#pragma once

#include <cstdint>
#include <vector>

#include "spdefield/inference.hpp"
#include "spdefield/posterior.hpp"

namespace spdefield {

// Closed-form CRPS of a Gaussian N(mu, sigma^2) forecast against outcome y:
// sigma * [ z (2 Phi(z) - 1) + 2 phi(z) - 1/sqrt(pi) ] with z = (y-mu)/sigma;
// sigma = 0 degenerates to |y - mu|.  Throws ParameterError for sigma < 0.
double crps_gaussian(double mu, double sigma, double y);

struct ScoreReport {
  double crps = 0.0;      // average CRPS over the test points
  double logscore = 0.0;  // -log joint predictive density of the test set
  int n_test = 0;
};

// Joint log predictive density log pi(y_test | y_train, theta), computed
// through the factorized marginal likelihoods of the combined and training
// sets (exact; no dense predictive covariance is formed).
double log_predictive_density(const SpdeGmrfModel& model,
                              const Eigen::VectorXd& theta,
                              const ObservationModel& train,
                              const ObservationModel& test);

// Concatenation of two observation sets over the same grid/covariates.
ObservationModel concat(const ObservationModel& a, const ObservationModel& b);

// Scores one fitted model on a train/test split.  CRPS uses the marginal
// predictive distribution of each test observation (noise included);
// LogScore uses the joint predictive density.
ScoreReport score_split(const RegularGrid& grid, const FitConfig& config,
                        const Eigen::VectorXd& theta,
                        const ObservationModel& train,
                        const ObservationModel& test);

struct HoldoutRepetition {
  ScoreReport first;   // first arm (e.g. stationary)
  ScoreReport second;  // second arm (e.g. non-stationary)
  bool excluded = false;
};

struct HoldoutResult {
  std::vector<HoldoutRepetition> repetitions;
  int excluded_count = 0;
};

// Repeated random-holdout comparison of two model configurations: for each
// repetition a seeded random holdout_frac of the observations is held out,
// both models are fitted on the remainder and scored on the holdout.
// Repetitions where either fit fails are flagged and excluded.
HoldoutResult holdout_compare(const RegularGrid& grid,
                              const ObservationModel& obs,
                              const FitConfig& config_first,
                              const FitConfig& config_second, int repetitions,
                              double holdout_frac, std::uint64_t seed,
                              int threads = 1);

}  // namespace spdefield
