#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spdefield/lbfgs.hpp"
#include "spdefield/posterior.hpp"

namespace spdefield {

enum class ModelKind { Stationary, Nonstationary };

struct FitConfig {
  ModelKind kind = ModelKind::Nonstationary;
  int k = 1;  // basis size in x (stationary forces k = l = 1)
  int l = 1;
  std::array<double, 4> log_tau{4.0, 4.0, 4.0, 4.0};
  LbfgsOptions optimizer;
  std::uint64_t seed = 0;
  int threads = 1;

  // Cross-validation settings.
  std::vector<double> cv_log_tau_grid{2.0, 4.0, 6.0, 8.0};
  bool cv_full_factorial = false;  // default: coordinate-descent pass
  int cv_max_sweeps = 3;

  int basis_k() const { return kind == ModelKind::Stationary ? 1 : k; }
  int basis_l() const { return kind == ModelKind::Stationary ? 1 : l; }
};

struct FitResult {
  ModelKind kind = ModelKind::Nonstationary;
  int k = 1;
  int l = 1;
  std::array<double, 4> log_tau{};
  Eigen::VectorXd theta;
  double log_posterior = 0.0;
  std::optional<Eigen::VectorXd> sd;  // observed-information SDs
  int iterations = 0;
  bool converged = false;
  std::string message;
};

// MAP estimate of theta by quasi-Newton ascent with the analytic gradient.
// Initialization: alpha = 0 (constant fields kappa^2 = gamma = 1, v = 0)
// and log tau_noise = log(2 / var(y)).  When compute_sd is set the
// observed-information standard deviations are attached.
FitResult fit_map(const RegularGrid& grid, const ObservationModel& obs,
                  const FitConfig& config, bool compute_sd = true);

// Builds the model a FitConfig describes.
SpdeGmrfModel model_for(const RegularGrid& grid, const FitConfig& config);

// sqrt(diag((-H)^{-1})) with H the central-difference Hessian (step 1e-4)
// of an analytic gradient.  Returns nullopt when -H is not positive
// definite.
std::optional<Eigen::VectorXd> observed_information_sd(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad_fn,
    const Eigen::VectorXd& theta, double step = 1e-4);

struct CvRow {
  std::array<double, 4> log_tau{};
  double score = 0.0;  // mean negative log predictive density over folds
  bool failed = false;
};

struct CvResult {
  std::array<double, 4> best{};
  std::vector<CvRow> table;  // sorted lexicographically by tuple
  std::uint64_t seed = 0;
};

// All tuples of a grid of candidate values (full factorial, lexicographic).
std::vector<std::array<double, 4>> enumerate_tau_grid(
    const std::vector<double>& values);

// 5-fold cross-validation over the smoothing-hyperparameter grid with the
// log-predictive-density criterion.  The partition is a seeded random
// split.  Ties in the argmin break toward the lexicographically smallest
// tuple; tuples whose fold fits fail are excluded from the argmin.
CvResult cross_validate(const RegularGrid& grid, const ObservationModel& obs,
                        const FitConfig& config);

}  // namespace spdefield
