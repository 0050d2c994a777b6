#include "spdefield/score.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "spdefield/errors.hpp"
#include "spdefield/parallel.hpp"
#include "spdefield/rng.hpp"

namespace spdefield {

double crps_gaussian(double mu, double sigma, double y) {
  if (sigma < 0.0) {
    throw ParameterError("crps_gaussian requires sigma >= 0");
  }
  if (sigma == 0.0) return std::abs(y - mu);
  const double z = (y - mu) / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf =
      std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return sigma * (z * (2.0 * cdf - 1.0) + 2.0 * pdf -
                  1.0 / std::sqrt(std::numbers::pi));
}

ObservationModel concat(const ObservationModel& a, const ObservationModel& b) {
  if (a.num_cells() != b.num_cells() || a.p() != b.p()) {
    throw DimensionError("cannot concatenate observation sets with "
                         "different grids or covariates");
  }
  std::vector<int> cells = a.cells();
  cells.insert(cells.end(), b.cells().begin(), b.cells().end());
  Eigen::VectorXd y(a.N() + b.N());
  y << a.y(), b.y();
  Eigen::MatrixXd X(a.N() + b.N(), a.p());
  X << a.X(), b.X();
  return ObservationModel(a.num_cells(), std::move(cells), std::move(y),
                          std::move(X), a.tau_beta());
}

double log_predictive_density(const SpdeGmrfModel& model,
                              const Eigen::VectorXd& theta,
                              const ObservationModel& train,
                              const ObservationModel& test) {
  const ObservationModel joint = concat(train, test);
  PosteriorEvaluator joint_eval(model, joint);
  PosteriorEvaluator train_eval(model, train);
  return joint_eval.marginal_loglik(theta) -
         train_eval.marginal_loglik(theta);
}

ScoreReport score_split(const RegularGrid& grid, const FitConfig& config,
                        const Eigen::VectorXd& theta,
                        const ObservationModel& train,
                        const ObservationModel& test) {
  const SpdeGmrfModel model = model_for(grid, config);
  ScoreReport report;
  report.n_test = test.N();

  PosteriorEvaluator train_eval(model, train);
  const LatentConditional lat = train_eval.conditional_latent(theta);
  const SelectedInverse Z = lat.cholQc.selected_inverse();
  const Eigen::VectorXd diag = Z.diagonal();
  const int mn = lat.mn;
  const int p = lat.p;
  Eigen::MatrixXd W(mn + p, p);
  for (int q = 0; q < p; ++q) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(mn + p);
    e[mn + q] = 1.0;
    W.col(q) = lat.cholQc.solve(e);
  }
  const Eigen::MatrixXd Wbb = W.bottomRows(p);
  const Eigen::VectorXd mu_b = lat.muC.tail(p);

  double crps_acc = 0.0;
  for (int i = 0; i < test.N(); ++i) {
    const int c = test.cells()[i];
    const Eigen::VectorXd x = test.X().row(i).transpose();
    const double mean = lat.muC[c] + x.dot(mu_b);
    double var = diag[c] + 1.0 / lat.tau_noise;
    if (p > 0) {
      var += 2.0 * x.dot(W.row(c).transpose()) + x.dot(Wbb * x);
    }
    crps_acc += crps_gaussian(mean, std::sqrt(std::max(var, 0.0)),
                              test.y()[i]);
  }
  report.crps = test.N() > 0 ? crps_acc / test.N() : 0.0;
  report.logscore = -log_predictive_density(model, theta, train, test);
  return report;
}

HoldoutResult holdout_compare(const RegularGrid& grid,
                              const ObservationModel& obs,
                              const FitConfig& config_first,
                              const FitConfig& config_second, int repetitions,
                              double holdout_frac, std::uint64_t seed,
                              int threads) {
  if (repetitions < 1) {
    throw ParameterError("holdout comparison needs at least one repetition");
  }
  const int n_test = static_cast<int>(std::floor(obs.N() * holdout_frac));
  if (n_test < 1 || n_test >= obs.N()) {
    throw ParameterError("holdout fraction leaves no test or train data");
  }

  HoldoutResult result;
  result.repetitions.resize(repetitions);
  parallel_for(repetitions, threads, [&](std::size_t r) {
    HoldoutRepetition rep;
    std::vector<int> order(obs.N());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed, /*stream=*/1000 + r);
    rng.shuffle(order);
    std::vector<int> test_rows(order.begin(), order.begin() + n_test);
    std::vector<int> train_rows(order.begin() + n_test, order.end());
    std::sort(test_rows.begin(), test_rows.end());
    std::sort(train_rows.begin(), train_rows.end());
    const ObservationModel train = obs.subset(train_rows);
    const ObservationModel test = obs.subset(test_rows);
    try {
      const FitResult f1 =
          fit_map(grid, train, config_first, /*compute_sd=*/false);
      const FitResult f2 =
          fit_map(grid, train, config_second, /*compute_sd=*/false);
      if (!f1.converged || !f2.converged) {
        rep.excluded = true;
      } else {
        rep.first = score_split(grid, config_first, f1.theta, train, test);
        rep.second = score_split(grid, config_second, f2.theta, train, test);
      }
    } catch (const std::exception&) {
      rep.excluded = true;
    }
    result.repetitions[r] = std::move(rep);
  });
  for (const auto& rep : result.repetitions) {
    if (rep.excluded) ++result.excluded_count;
  }
  return result;
}

}  // namespace spdefield
