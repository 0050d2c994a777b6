#include "spdefield/predict.hpp"

#include <cmath>

#include "spdefield/errors.hpp"

namespace spdefield {

PredictionField predict_from_conditional(const LatentConditional& lat,
                                         const Eigen::MatrixXd& Xstar,
                                         bool include_noise) {
  const int mn = lat.mn;
  const int p = lat.p;
  if (Xstar.rows() != mn || Xstar.cols() != p) {
    throw DimensionError("cell covariate matrix must be mn x p");
  }

  const SelectedInverse Z = lat.cholQc.selected_inverse();
  const Eigen::VectorXd diag = Z.diagonal();

  // Columns of Q_C^{-1} for the beta block: the cross and beta-beta terms
  // of the per-cell variance come from p exact solves.
  Eigen::MatrixXd W(mn + p, p);
  for (int q = 0; q < p; ++q) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(mn + p);
    e[mn + q] = 1.0;
    W.col(q) = lat.cholQc.solve(e);
  }
  const Eigen::MatrixXd Wbb = W.bottomRows(p);

  PredictionField out;
  out.include_noise = include_noise;
  out.mean.resize(mn);
  out.sd.resize(mn);
  const Eigen::VectorXd mu_b = lat.muC.tail(p);
  const double noise_var = include_noise ? 1.0 / lat.tau_noise : 0.0;
  for (int c = 0; c < mn; ++c) {
    const Eigen::VectorXd x = Xstar.row(c).transpose();
    out.mean[c] = lat.muC[c] + x.dot(mu_b);
    double var = diag[c] + noise_var;
    if (p > 0) {
      var += 2.0 * x.dot(W.row(c).transpose()) + x.dot(Wbb * x);
    }
    out.sd[c] = std::sqrt(std::max(var, 0.0));
  }
  return out;
}

PredictionField predict(const FitResult& fit, const RegularGrid& grid,
                        const ObservationModel& obs,
                        const Eigen::MatrixXd& Xstar, bool include_noise) {
  FitConfig config;
  config.kind = fit.kind;
  config.k = fit.k;
  config.l = fit.l;
  config.log_tau = fit.log_tau;
  const SpdeGmrfModel model = model_for(grid, config);
  PosteriorEvaluator eval(model, obs);
  const LatentConditional lat = eval.conditional_latent(fit.theta);
  return predict_from_conditional(lat, Xstar, include_noise);
}

}  // namespace spdefield
