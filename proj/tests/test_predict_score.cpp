#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "spdefield/errors.hpp"
#include "spdefield/predict.hpp"
#include "spdefield/rng.hpp"
#include "spdefield/score.hpp"
#include "spdefield/simulate.hpp"

using namespace spdefield;

namespace {

// Numerical CRPS oracle: integrate (F(t) - 1(y <= t))^2 dt for the
// Gaussian cdf F.  The indicator kinks the integrand at t = y, so the
// integral is split there and each smooth piece uses composite Simpson.
double crps_numeric(double mu, double sigma, double y) {
  auto cdf = [&](double t) {
    return 0.5 * std::erfc(-(t - mu) / (sigma * std::numbers::sqrt2));
  };
  auto simpson = [](auto f, double a, double b) {
    const int n = 20000;  // even
    const double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * ((i % 2) ? 4.0 : 2.0);
    return acc * h / 3.0;
  };
  const double lo = std::min(mu, y) - 14.0 * sigma;
  const double hi = std::max(mu, y) + 14.0 * sigma;
  auto below = [&](double t) { return cdf(t) * cdf(t); };
  auto above = [&](double t) { return (1.0 - cdf(t)) * (1.0 - cdf(t)); };
  return simpson(below, lo, y) + simpson(above, y, hi);
}

ObservationModel simulate_dataset(const RegularGrid& grid,
                                  const SpdeGmrfModel& model,
                                  const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& beta, int n_obs,
                                  std::uint64_t seed) {
  Rng rng(seed);
  const auto locs = random_locations(grid, n_obs, rng);
  Eigen::MatrixXd X(n_obs, beta.size());
  if (beta.size() > 0) X.col(0).setOnes();
  for (int q = 1; q < beta.size(); ++q) {
    for (int i = 0; i < n_obs; ++i) X(i, q) = rng.normal();
  }
  const auto sim = simulate_observations(model, theta, beta, locs, X, rng);
  return ObservationModel(grid, sim.locations, sim.y, sim.X, 1e-4);
}

}  // namespace

TEST_SUITE("predict_score") {

TEST_CASE("CRPS closed form: perfect forecast and standard normal") {
  CHECK(crps_gaussian(1.3, 0.0, 1.3) == 0.0);
  CHECK(crps_gaussian(0.0, 1.0, 0.0) ==
        doctest::Approx(0.23370).epsilon(1e-4));
  CHECK(std::abs(crps_gaussian(0.0, 1.0, 0.0) - 0.2336949767) < 1e-5);
  CHECK_THROWS_AS(crps_gaussian(0.0, -1.0, 0.0), ParameterError);
}

TEST_CASE("CRPS translation invariance is exact for representable shifts") {
  const double mu = 0.25, sigma = 1.5, y = 0.75, c = 2.0;
  CHECK(crps_gaussian(mu + c, sigma, y + c) == crps_gaussian(mu, sigma, y));
}

TEST_CASE("CRPS closed form vs numerical integration over a grid") {
  for (double sigma : {0.1, 1.0, 10.0}) {
    for (double z = -4.0; z <= 4.0; z += 1.0) {
      const double y = z * sigma;
      const double closed = crps_gaussian(0.0, sigma, y);
      const double numeric = crps_numeric(0.0, sigma, y);
      CHECK(std::abs(closed - numeric) < 1e-6 * std::max(1.0, sigma));
    }
  }
}

TEST_CASE("prediction with no observations is the prior") {
  const RegularGrid grid(0, 3, 0, 2, 6, 4);
  const SpdeGmrfModel model = make_model(grid, 1, 1, {0, 0, 0, 0}, true);
  const int mn = grid.num_cells();
  const ObservationModel obs(mn, {}, Eigen::VectorXd(), Eigen::MatrixXd(0, 1),
                             1e-4);
  PosteriorEvaluator eval(model, obs);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(5);
  theta[4] = 2.0;
  const LatentConditional lat = eval.conditional_latent(theta);
  const Eigen::MatrixXd Xstar = Eigen::MatrixXd::Ones(mn, 1);
  const PredictionField pf = predict_from_conditional(lat, Xstar, false);
  CHECK(pf.mean.cwiseAbs().maxCoeff() == 0.0);

  // prior sd: field variance + intercept prior variance
  const AnisotropyField f = materialize_fields(
      model.F, model.alpha(theta, 0), model.alpha(theta, 1),
      model.alpha(theta, 2), model.alpha(theta, 3));
  SparseCholesky ch("Q");
  ch.factorize(assemble(grid, f).Q);
  const Eigen::VectorXd prior_var = ch.selected_inverse().diagonal();
  for (int c = 0; c < mn; ++c) {
    const double expect = std::sqrt(prior_var[c] + 1.0 / 1e-4);
    CHECK(pf.sd[c] == doctest::Approx(expect).epsilon(1e-8));
  }
}

TEST_CASE("interpolation limit: huge tau_noise pins predictions") {
  const RegularGrid grid(0, 2, 0, 1, 4, 2);
  const SpdeGmrfModel model = make_model(grid, 1, 1, {0, 0, 0, 0}, true);
  const int mn = grid.num_cells();
  std::vector<int> cells(mn);
  Eigen::VectorXd y(mn);
  Rng rng(4);
  for (int c = 0; c < mn; ++c) {
    cells[c] = c;
    y[c] = rng.normal();
  }
  const ObservationModel obs(mn, cells, y, Eigen::MatrixXd(mn, 0), 1e-4);
  PosteriorEvaluator eval(model, obs);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(5);
  theta[4] = std::log(1e8);
  const LatentConditional lat = eval.conditional_latent(theta);
  const PredictionField pf =
      predict_from_conditional(lat, Eigen::MatrixXd(mn, 0), false);
  CHECK((pf.mean - y).cwiseAbs().maxCoeff() < 1e-3);
  CHECK(pf.sd.maxCoeff() < 1e-3);
}

TEST_CASE("dense conditional-Gaussian oracle on a 6x4 grid") {
  const RegularGrid grid(0, 3, 0, 2, 6, 4);
  const SpdeGmrfModel model = make_model(grid, 2, 2, {2, 2, 2, 2}, false);
  Eigen::VectorXd theta_true = Eigen::VectorXd::Zero(model.dim());
  theta_true[model.dim() - 1] = 2.0;
  Eigen::VectorXd beta(2);
  beta << 0.6, -0.4;
  const ObservationModel obs =
      simulate_dataset(grid, model, theta_true, beta, 35, 21);
  PosteriorEvaluator eval(model, obs);
  Rng rng(3);
  Eigen::VectorXd theta(model.dim());
  for (int i = 0; i < theta.size(); ++i) theta[i] = 0.2 * rng.normal();
  const LatentConditional lat = eval.conditional_latent(theta);
  const int mn = grid.num_cells();
  const int p = obs.p();
  Eigen::MatrixXd Xstar(mn, p);
  Xstar.col(0).setOnes();
  for (int c = 0; c < mn; ++c) Xstar(c, 1) = 0.1 * c;
  for (bool noise : {false, true}) {
    const PredictionField pf = predict_from_conditional(lat, Xstar, noise);

    // dense covariance of z and the row map [E* X*]
    const double tau = lat.tau_noise;
    const AnisotropyField f = materialize_fields(
        model.F, model.alpha(theta, 0), model.alpha(theta, 1),
        model.alpha(theta, 2), model.alpha(theta, 3));
    Eigen::MatrixXd Qz = Eigen::MatrixXd::Zero(mn + p, mn + p);
    Qz.topLeftCorner(mn, mn) = Eigen::MatrixXd(assemble(grid, f).Q);
    Qz.bottomRightCorner(p, p) =
        obs.tau_beta() * Eigen::MatrixXd::Identity(p, p);
    Eigen::MatrixXd S(obs.N(), mn + p);
    S.setZero();
    for (int i = 0; i < obs.N(); ++i) {
      S(i, obs.cells()[i]) = 1.0;
      for (int q = 0; q < p; ++q) S(i, mn + q) = obs.X()(i, q);
    }
    const Eigen::MatrixXd Qc = Qz + tau * S.transpose() * S;
    const Eigen::MatrixXd cov =
        Qc.ldlt().solve(Eigen::MatrixXd::Identity(mn + p, mn + p));
    const Eigen::VectorXd muC =
        Qc.ldlt().solve(tau * S.transpose() * obs.y());
    for (int c = 0; c < mn; ++c) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(mn + p);
      row[c] = 1.0;
      for (int q = 0; q < p; ++q) row[mn + q] = Xstar(c, q);
      const double mean = row.dot(muC);
      double var = row.dot(cov * row);
      if (noise) var += 1.0 / tau;
      CHECK(pf.mean[c] == doctest::Approx(mean).epsilon(1e-8));
      CHECK(pf.sd[c] == doctest::Approx(std::sqrt(var)).epsilon(1e-8));
    }
  }
}

TEST_CASE("noise-free sd is smaller by exactly 1/tau in variance") {
  const RegularGrid grid(0, 3, 0, 2, 6, 4);
  const SpdeGmrfModel model = make_model(grid, 1, 1, {0, 0, 0, 0}, true);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(5);
  theta[4] = 1.3;
  Eigen::VectorXd beta(1);
  beta << 0.5;
  const ObservationModel obs =
      simulate_dataset(grid, model, theta, beta, 30, 8);
  PosteriorEvaluator eval(model, obs);
  const LatentConditional lat = eval.conditional_latent(theta);
  const Eigen::MatrixXd Xstar = Eigen::MatrixXd::Ones(grid.num_cells(), 1);
  const PredictionField without = predict_from_conditional(lat, Xstar, false);
  const PredictionField with = predict_from_conditional(lat, Xstar, true);
  for (int c = 0; c < grid.num_cells(); ++c) {
    CHECK(with.sd[c] > without.sd[c]);
    const double diff2 =
        with.sd[c] * with.sd[c] - without.sd[c] * without.sd[c];
    CHECK(diff2 == doctest::Approx(1.0 / lat.tau_noise).epsilon(1e-12));
  }
}

TEST_CASE("joint log-predictive density equals the dense MVN density") {
  const RegularGrid grid(0, 3, 0, 2, 6, 4);
  const SpdeGmrfModel model = make_model(grid, 1, 1, {0, 0, 0, 0}, true);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(5);
  theta[0] = -0.3;
  theta[4] = 1.7;
  Eigen::VectorXd beta(1);
  beta << 0.4;
  const ObservationModel all =
      simulate_dataset(grid, model, theta, beta, 70, 5);
  std::vector<int> train_rows, test_rows;
  for (int i = 0; i < all.N(); ++i) {
    (i % 3 == 0 ? test_rows : train_rows).push_back(i);
  }
  const ObservationModel train = all.subset(train_rows);
  const ObservationModel test = all.subset(test_rows);

  const double log_pred = log_predictive_density(model, theta, train, test);

  // dense oracle: y* | y ~ N(S* muC, S* Qc^{-1} S*^T + I/tau)
  const int mn = grid.num_cells();
  const int p = all.p();
  const double tau = std::exp(theta[4]);
  const AnisotropyField f = materialize_fields(
      model.F, model.alpha(theta, 0), model.alpha(theta, 1),
      model.alpha(theta, 2), model.alpha(theta, 3));
  Eigen::MatrixXd Qz = Eigen::MatrixXd::Zero(mn + p, mn + p);
  Qz.topLeftCorner(mn, mn) = Eigen::MatrixXd(assemble(grid, f).Q);
  Qz.bottomRightCorner(p, p) =
      all.tau_beta() * Eigen::MatrixXd::Identity(p, p);
  auto smat = [&](const ObservationModel& o) {
    Eigen::MatrixXd S(o.N(), mn + p);
    S.setZero();
    for (int i = 0; i < o.N(); ++i) {
      S(i, o.cells()[i]) = 1.0;
      for (int q = 0; q < p; ++q) S(i, mn + q) = o.X()(i, q);
    }
    return S;
  };
  const Eigen::MatrixXd St = smat(train);
  const Eigen::MatrixXd Ss = smat(test);
  const Eigen::MatrixXd Qc = Qz + tau * St.transpose() * St;
  const Eigen::VectorXd muC =
      Qc.ldlt().solve(tau * St.transpose() * train.y());
  const Eigen::MatrixXd cov =
      Ss * Qc.ldlt().solve(Ss.transpose()) +
      (1.0 / tau) * Eigen::MatrixXd::Identity(test.N(), test.N());
  const Eigen::VectorXd mean = Ss * muC;
  const Eigen::VectorXd resid = test.y() - mean;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  const double logdet =
      2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  const double dense = -0.5 * test.N() * std::log(2.0 * std::numbers::pi) -
                       0.5 * logdet - 0.5 * resid.dot(llt.solve(resid));
  CHECK(log_pred == doctest::Approx(dense).epsilon(1e-8));
}

TEST_CASE("identical arms produce identical holdout scores") {
  const RegularGrid grid(0, 6, 0, 3, 12, 6);
  FitConfig config;
  config.kind = ModelKind::Stationary;
  config.optimizer.max_iter = 60;
  const SpdeGmrfModel model = model_for(grid, config);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(5);
  theta[0] = std::log(0.5);
  theta[4] = std::log(40.0);
  Eigen::VectorXd beta(1);
  beta << 1.0;
  const ObservationModel obs =
      simulate_dataset(grid, model, theta, beta, 150, 17);
  const HoldoutResult res =
      holdout_compare(grid, obs, config, config, 3, 0.2, 99, 2);
  CHECK(res.excluded_count == 0);
  for (const auto& rep : res.repetitions) {
    CHECK(rep.first.crps == rep.second.crps);          // bitwise
    CHECK(rep.first.logscore == rep.second.logscore);  // bitwise
    CHECK(rep.first.n_test == 30);
  }
}

TEST_CASE("holdout fraction validation") {
  const RegularGrid grid(0, 1, 0, 1, 3, 3);
  const SpdeGmrfModel model = make_model(grid, 1, 1, {0, 0, 0, 0}, true);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(5);
  Eigen::VectorXd beta(1);
  beta << 0.0;
  const ObservationModel obs = simulate_dataset(grid, model, theta, beta, 3, 1);
  FitConfig config;
  CHECK_THROWS_AS(holdout_compare(grid, obs, config, config, 2, 0.05, 1, 1),
                  ParameterError);
}

}  // TEST_SUITE
