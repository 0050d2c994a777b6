#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "spdefield/errors.hpp"
#include "spdefield/posterior.hpp"
#include "spdefield/rng.hpp"
#include "spdefield/simulate.hpp"

using namespace spdefield;

namespace {

// Dense evaluation of the marginalized log posterior (oracle).
double dense_log_posterior(const SpdeGmrfModel& model,
                           const ObservationModel& obs,
                           const Eigen::VectorXd& theta) {
  const int mn = model.grid.num_cells();
  const int p = obs.p();
  const AnisotropyField f = materialize_fields(
      model.F, model.alpha(theta, 0), model.alpha(theta, 1),
      model.alpha(theta, 2), model.alpha(theta, 3));
  const Eigen::MatrixXd Q = Eigen::MatrixXd(assemble(model.grid, f).Q);
  const double tau = std::exp(model.log_tau_noise(theta));

  Eigen::MatrixXd Qz = Eigen::MatrixXd::Zero(mn + p, mn + p);
  Qz.topLeftCorner(mn, mn) = Q;
  Qz.bottomRightCorner(p, p) =
      obs.tau_beta() * Eigen::MatrixXd::Identity(p, p);

  Eigen::MatrixXd S(obs.N(), mn + p);
  S.setZero();
  for (int i = 0; i < obs.N(); ++i) {
    S(i, obs.cells()[i]) = 1.0;
    for (int q = 0; q < p; ++q) S(i, mn + q) = obs.X()(i, q);
  }
  const Eigen::MatrixXd Qc = Qz + tau * S.transpose() * S;
  const Eigen::VectorXd muC =
      Qc.ldlt().solve(tau * S.transpose() * obs.y());
  const Eigen::VectorXd resid = obs.y() - S * muC;

  double prior = 0.0;
  if (!model.stationary) {
    for (int fl = 0; fl < 4; ++fl) {
      const Eigen::VectorXd a = model.alpha(theta, fl);
      prior += -0.5 * model.tau[fl] *
               a.dot(Eigen::MatrixXd(model.rw2.Q) * a);
    }
  }
  auto logdet = [](const Eigen::MatrixXd& M) {
    return 2.0 *
           Eigen::MatrixXd(M.llt().matrixL()).diagonal().array().log().sum();
  };
  return prior + 0.5 * logdet(Qz) + 0.5 * obs.N() * std::log(tau) -
         0.5 * logdet(Qc) - 0.5 * muC.dot(Qz * muC) -
         0.5 * tau * resid.squaredNorm();
}

ObservationModel simulated_obs(const SpdeGmrfModel& model, int n_obs,
                               const Eigen::VectorXd& theta_true,
                               const Eigen::VectorXd& beta, int p,
                               std::uint64_t seed, double tau_beta = 1e-4) {
  Rng rng(seed);
  const auto locs = random_locations(model.grid, n_obs, rng);
  Eigen::MatrixXd X(n_obs, p);
  if (p > 0) X.col(0).setOnes();
  for (int q = 1; q < p; ++q) {
    for (int i = 0; i < n_obs; ++i) X(i, q) = rng.normal();
  }
  const auto sim =
      simulate_observations(model, theta_true, beta, locs, X, rng);
  return ObservationModel(model.grid, sim.locations, sim.y, sim.X, tau_beta);
}

}  // namespace

TEST_SUITE("posterior") {

TEST_CASE("no observations reduce the posterior to its prior terms") {
  const RegularGrid grid(0, 2, 0, 1, 6, 4);
  const SpdeGmrfModel model = make_model(grid, 2, 2, {2, 2, 2, 2}, false);
  const ObservationModel obs(grid.num_cells(), {}, Eigen::VectorXd(),
                             Eigen::MatrixXd(0, 0), 1e-4);
  PosteriorEvaluator eval(model, obs);
  Rng rng(2);
  Eigen::VectorXd theta(model.dim());
  for (int i = 0; i < theta.size(); ++i) theta[i] = 0.3 * rng.normal();
  const PosteriorBreakdown b = eval.breakdown(theta);
  // Q_C = Q_z when S is empty, so the determinant terms cancel exactly.
  CHECK(b.logdet_Qc == doctest::Approx(b.logdet_Qz).epsilon(1e-12));
  CHECK(b.value == doctest::Approx(b.prior).epsilon(1e-9));
  const LatentConditional lat = eval.conditional_latent(theta);
  CHECK(lat.muC.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single-cell closed form matches the 1-D marginal density") {
  // 1x1 grid, p = 0, one observation: y ~ N(0, 1/q + 1/tau).
  const RegularGrid grid(0, 1, 0, 1, 1, 1);
  const SpdeGmrfModel model = make_model(grid, 1, 1, {0, 0, 0, 0}, true);
  const double y1 = 0.83;
  Eigen::VectorXd y(1);
  y << y1;
  const ObservationModel obs(1, {0}, y, Eigen::MatrixXd(1, 0), 1e-4);
  PosteriorEvaluator eval(model, obs);

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(5);
  theta[0] = 0.41;   // log kappa^2; on one cell Q = [q]
  theta[4] = -0.37;  // log tau_noise
  const double tau = std::exp(theta[4]);

  const AnisotropyField f = materialize_fields(
      model.F, model.alpha(theta, 0), model.alpha(theta, 1),
      model.alpha(theta, 2), model.alpha(theta, 3));
  const double q = Eigen::MatrixXd(assemble(grid, f).Q)(0, 0);

  // direct conditional quantities
  const LatentConditional lat = eval.conditional_latent(theta);
  CHECK(lat.muC[0] == doctest::Approx(tau * y1 / (q + tau)).epsilon(1e-12));

  // marginal density of y1
  const double var = 1.0 / q + 1.0 / tau;
  const double expect =
      -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * y1 * y1 / var;
  CHECK(eval.marginal_loglik(theta) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("dense oracle equivalence on a 6x4 grid") {
  const RegularGrid grid(0, 3, 0, 2, 6, 4);
  const SpdeGmrfModel model = make_model(grid, 2, 2, {1.5, 2, 1, 2.5}, false);
  Eigen::VectorXd theta_true = Eigen::VectorXd::Zero(model.dim());
  theta_true[model.dim() - 1] = 2.0;
  Eigen::VectorXd beta(2);
  beta << 1.0, -0.5;
  const ObservationModel obs =
      simulated_obs(model, 40, theta_true, beta, 2, 77);
  PosteriorEvaluator eval(model, obs);

  Rng rng(5);
  for (int rep = 0; rep < 3; ++rep) {
    Eigen::VectorXd theta(model.dim());
    for (int i = 0; i < theta.size(); ++i) theta[i] = 0.25 * rng.normal();
    const double value = eval.log_posterior(theta);
    const double oracle = dense_log_posterior(model, obs, theta);
    CHECK(value == doctest::Approx(oracle).epsilon(1e-8));

    // muC against the dense normal-equations solve
    const LatentConditional lat = eval.conditional_latent(theta);
    const int mn = grid.num_cells();
    const int p = obs.p();
    const double tau = std::exp(theta[theta.size() - 1]);
    Eigen::MatrixXd S(obs.N(), mn + p);
    S.setZero();
    for (int i = 0; i < obs.N(); ++i) {
      S(i, obs.cells()[i]) = 1.0;
      for (int q = 0; q < p; ++q) S(i, mn + q) = obs.X()(i, q);
    }
    const AnisotropyField f = materialize_fields(
        model.F, model.alpha(theta, 0), model.alpha(theta, 1),
        model.alpha(theta, 2), model.alpha(theta, 3));
    Eigen::MatrixXd Qz = Eigen::MatrixXd::Zero(mn + p, mn + p);
    Qz.topLeftCorner(mn, mn) = Eigen::MatrixXd(assemble(grid, f).Q);
    Qz.bottomRightCorner(p, p) =
        obs.tau_beta() * Eigen::MatrixXd::Identity(p, p);
    const Eigen::MatrixXd Qc = Qz + tau * S.transpose() * S;
    const Eigen::VectorXd muC_dense =
        Qc.ldlt().solve(tau * S.transpose() * obs.y());
    CHECK((lat.muC - muC_dense).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("the two algebraic forms of the data terms agree") {
  const RegularGrid grid(0, 3, 0, 2, 6, 4);
  const SpdeGmrfModel model = make_model(grid, 2, 2, {2, 2, 2, 2}, false);
  Eigen::VectorXd theta_true = Eigen::VectorXd::Zero(model.dim());
  theta_true[model.dim() - 1] = 1.5;
  Eigen::VectorXd beta(1);
  beta << 0.7;
  const ObservationModel obs =
      simulated_obs(model, 30, theta_true, beta, 1, 13);
  PosteriorEvaluator eval(model, obs);
  Rng rng(6);
  Eigen::VectorXd theta(model.dim());
  for (int i = 0; i < theta.size(); ++i) theta[i] = 0.2 * rng.normal();
  const PosteriorBreakdown b = eval.breakdown(theta);
  const double form1 = -0.5 * b.quad_z - 0.5 * b.tau_noise * b.ssr;
  const double form2 =
      -0.5 * b.tau_noise * obs.yty() + 0.5 * b.mu_Qc_mu;
  CHECK(form1 == doctest::Approx(form2).epsilon(1e-9));
}

TEST_CASE("analytic gradient matches central finite differences") {
  const RegularGrid grid(0, 5, 0, 3, 10, 6);
  const SpdeGmrfModel model = make_model(grid, 2, 2, {2, 3, 2, 3}, false);
  Eigen::VectorXd theta_true = Eigen::VectorXd::Zero(model.dim());
  theta_true[model.dim() - 1] = 2.0;
  Eigen::VectorXd beta(2);
  beta << 0.4, 0.2;
  const ObservationModel obs =
      simulated_obs(model, 120, theta_true, beta, 2, 99);
  PosteriorEvaluator eval(model, obs);

  Rng rng(11);
  Eigen::VectorXd theta(model.dim());
  for (int i = 0; i < theta.size(); ++i) theta[i] = 0.3 * rng.normal();

  const Eigen::VectorXd g = eval.gradient(theta);
  const double eps = 1e-4;
  double max_rel = 0.0;
  for (int i = 0; i < theta.size(); ++i) {
    Eigen::VectorXd tp = theta, tm = theta;
    tp[i] += eps;
    tm[i] -= eps;
    const double fd =
        (eval.log_posterior(tp) - eval.log_posterior(tm)) / (2.0 * eps);
    const double denom = std::max(std::abs(fd), 1e-6);
    max_rel = std::max(max_rel, std::abs(g[i] - fd) / denom);
  }
  CHECK(max_rel < 1e-5);
}

TEST_CASE("prior-only gradient (no data) matches finite differences") {
  const RegularGrid grid(0, 4, 0, 2, 8, 4);
  const SpdeGmrfModel model = make_model(grid, 2, 2, {2, 2, 2, 2}, false);
  const ObservationModel obs(grid.num_cells(), {}, Eigen::VectorXd(),
                             Eigen::MatrixXd(0, 0), 1e-4);
  PosteriorEvaluator eval(model, obs);
  Rng rng(21);
  Eigen::VectorXd theta(model.dim());
  for (int i = 0; i < theta.size(); ++i) theta[i] = 0.25 * rng.normal();

  const Eigen::VectorXd g = eval.gradient(theta);
  const double eps = 1e-4;
  for (int i = 0; i < theta.size() - 1; ++i) {
    Eigen::VectorXd tp = theta, tm = theta;
    tp[i] += eps;
    tm[i] -= eps;
    const double fd =
        (eval.log_posterior(tp) - eval.log_posterior(tm)) / (2.0 * eps);
    CHECK(g[i] == doctest::Approx(fd).epsilon(2e-5));
  }
}

TEST_CASE("log posterior is exactly invariant to observation reordering") {
  const RegularGrid grid(0, 2, 0, 2, 5, 5);
  const SpdeGmrfModel model = make_model(grid, 2, 2, {2, 2, 2, 2}, false);
  Rng rng(303);
  const int N = 60;
  std::vector<int> cells(N);
  Eigen::VectorXd y(N);
  Eigen::MatrixXd X(N, 2);
  for (int i = 0; i < N; ++i) {
    cells[i] = static_cast<int>(rng.below(grid.num_cells()));
    y[i] = rng.normal();
    X(i, 0) = 1.0;
    X(i, 1) = rng.normal();
  }
  const ObservationModel obs1(grid.num_cells(), cells, y, X, 1e-4);

  std::vector<int> perm(N);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  std::vector<int> cells2(N);
  Eigen::VectorXd y2(N);
  Eigen::MatrixXd X2(N, 2);
  for (int i = 0; i < N; ++i) {
    cells2[i] = cells[perm[i]];
    y2[i] = y[perm[i]];
    X2.row(i) = X.row(perm[i]);
  }
  const ObservationModel obs2(grid.num_cells(), cells2, y2, X2, 1e-4);

  PosteriorEvaluator e1(model, obs1);
  PosteriorEvaluator e2(model, obs2);
  Eigen::VectorXd theta(model.dim());
  for (int i = 0; i < theta.size(); ++i) theta[i] = 0.2 * rng.normal();
  // bitwise identical, not approximately
  CHECK(e1.log_posterior(theta) == e2.log_posterior(theta));
}

TEST_CASE("large tau_noise pins the conditional mean to the data") {
  // One observation per cell (S = E = I), no covariates.
  const RegularGrid grid(0, 2, 0, 1, 4, 2);
  const SpdeGmrfModel model = make_model(grid, 1, 1, {0, 0, 0, 0}, true);
  const int mn = grid.num_cells();
  std::vector<int> cells(mn);
  Eigen::VectorXd y(mn);
  Rng rng(7);
  for (int c = 0; c < mn; ++c) {
    cells[c] = c;
    y[c] = rng.normal();
  }
  const ObservationModel obs(mn, cells, y, Eigen::MatrixXd(mn, 0), 1e-4);
  PosteriorEvaluator eval(model, obs);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(5);
  theta[4] = std::log(1e8);
  const LatentConditional lat = eval.conditional_latent(theta);
  CHECK((lat.muC.head(mn) - y).cwiseAbs().maxCoeff() < 1e-3);

  // y = 0 gives muC = 0
  const ObservationModel obs0(mn, cells, Eigen::VectorXd::Zero(mn),
                              Eigen::MatrixXd(mn, 0), 1e-4);
  PosteriorEvaluator eval0(model, obs0);
  const LatentConditional lat0 = eval0.conditional_latent(theta);
  CHECK(lat0.muC.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("shifting y by a constant moves only the intercept") {
  const RegularGrid grid(0, 2, 0, 2, 5, 5);
  const SpdeGmrfModel model = make_model(grid, 1, 1, {0, 0, 0, 0}, true);
  Rng rng(55);
  const int N = 40;
  std::vector<int> cells(N);
  Eigen::VectorXd y(N);
  Eigen::MatrixXd X(N, 1);
  for (int i = 0; i < N; ++i) {
    cells[i] = static_cast<int>(rng.below(grid.num_cells()));
    y[i] = rng.normal();
    X(i, 0) = 1.0;
  }
  const double tau_beta = 1e-8;  // nearly flat prior on the intercept
  const ObservationModel obs(grid.num_cells(), cells, y, X, tau_beta);
  const ObservationModel obs_shift(grid.num_cells(), cells,
                                   Eigen::VectorXd(y.array() + 5.0), X,
                                   tau_beta);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(5);
  theta[4] = 1.0;
  PosteriorEvaluator e1(model, obs);
  PosteriorEvaluator e2(model, obs_shift);
  const LatentConditional l1 = e1.conditional_latent(theta);
  const LatentConditional l2 = e2.conditional_latent(theta);
  // residuals are unchanged in the flat-prior limit
  const Eigen::VectorXd r1 = obs.y() - obs.apply_S(l1.muC);
  const Eigen::VectorXd r2 = obs_shift.y() - obs_shift.apply_S(l2.muC);
  CHECK((r1 - r2).cwiseAbs().maxCoeff() < 1e-5);
  CHECK(l2.muC[grid.num_cells()] - l1.muC[grid.num_cells()] ==
        doctest::Approx(5.0).epsilon(1e-4));
}

TEST_CASE("Cholesky failures report the stage") {
  const RegularGrid grid(0, 1, 0, 1, 3, 3);
  const SpdeGmrfModel model = make_model(grid, 1, 1, {0, 0, 0, 0}, true);
  const ObservationModel obs(grid.num_cells(), {0}, Eigen::VectorXd::Ones(1),
                             Eigen::MatrixXd(1, 0), 1e-4);
  PosteriorEvaluator eval(model, obs);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(5);
  theta[0] = 1e9;  // overflows exp(F alpha)
  double out;
  CHECK(!eval.value(theta, out));
  Eigen::VectorXd bad = theta;
  bad[0] = std::nan("");
  CHECK_THROWS_AS(eval.log_posterior(bad), ParameterError);
}

}  // TEST_SUITE
