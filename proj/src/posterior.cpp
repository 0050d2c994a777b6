#include "spdefield/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "spdefield/errors.hpp"

namespace spdefield {

namespace {

// Largest |log field| before exp overflow is treated as a failed point.
constexpr double kLogFieldLimit = 300.0;

}  // namespace

ObservationModel::ObservationModel(const RegularGrid& grid,
                                   const std::vector<Point>& locs,
                                   Eigen::VectorXd y, Eigen::MatrixXd X,
                                   double tau_beta)
    : num_cells_(grid.num_cells()), tau_beta_(tau_beta) {
  if (static_cast<Eigen::Index>(locs.size()) != y.size() ||
      X.rows() != y.size()) {
    throw DimensionError("locations, y and X must have matching row counts");
  }
  cells_.resize(locs.size());
  for (std::size_t i = 0; i < locs.size(); ++i) {
    cells_[i] = grid.flatten(grid.locate(locs[i]));
  }
  y_ = std::move(y);
  X_ = std::move(X);
  canonicalize_and_build();
}

ObservationModel::ObservationModel(int num_cells, std::vector<int> cells,
                                   Eigen::VectorXd y, Eigen::MatrixXd X,
                                   double tau_beta)
    : num_cells_(num_cells),
      tau_beta_(tau_beta),
      cells_(std::move(cells)),
      y_(std::move(y)),
      X_(std::move(X)) {
  if (static_cast<Eigen::Index>(cells_.size()) != y_.size() ||
      X_.rows() != y_.size()) {
    throw DimensionError("cells, y and X must have matching row counts");
  }
  for (int c : cells_) {
    if (c < 0 || c >= num_cells_) {
      throw BoundsError("observation cell index out of range");
    }
  }
  canonicalize_and_build();
}

void ObservationModel::canonicalize_and_build() {
  const int N = this->N();
  const int p = this->p();
  if (!(tau_beta_ > 0.0)) {
    throw ParameterError("tau_beta must be positive");
  }

  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (cells_[a] != cells_[b]) return cells_[a] < cells_[b];
    if (y_[a] != y_[b]) return y_[a] < y_[b];
    for (int q = 0; q < p; ++q) {
      if (X_(a, q) != X_(b, q)) return X_(a, q) < X_(b, q);
    }
    return false;
  });
  {
    std::vector<int> cells(N);
    Eigen::VectorXd y(N);
    Eigen::MatrixXd X(N, p);
    for (int i = 0; i < N; ++i) {
      cells[i] = cells_[order[i]];
      y[i] = y_[order[i]];
      X.row(i) = X_.row(order[i]);
    }
    cells_ = std::move(cells);
    y_ = std::move(y);
    X_ = std::move(X);
  }

  const int dim = num_cells_ + p;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(N) * (1 + 2 * p) + p * p);
  for (int i = 0; i < N; ++i) {
    trips.emplace_back(cells_[i], cells_[i], 1.0);
    for (int q = 0; q < p; ++q) {
      trips.emplace_back(cells_[i], num_cells_ + q, X_(i, q));
      trips.emplace_back(num_cells_ + q, cells_[i], X_(i, q));
    }
  }
  for (int q = 0; q < p; ++q) {
    for (int r = 0; r < p; ++r) {
      double acc = 0.0;
      for (int i = 0; i < N; ++i) acc += X_(i, q) * X_(i, r);
      trips.emplace_back(num_cells_ + q, num_cells_ + r, acc);
    }
  }
  StS_.resize(dim, dim);
  StS_.setFromTriplets(trips.begin(), trips.end());
  StS_.makeCompressed();

  Sty_ = Eigen::VectorXd::Zero(dim);
  yty_ = 0.0;
  for (int i = 0; i < N; ++i) {
    Sty_[cells_[i]] += y_[i];
    yty_ += y_[i] * y_[i];
  }
  for (int q = 0; q < p; ++q) {
    double acc = 0.0;
    for (int i = 0; i < N; ++i) acc += X_(i, q) * y_[i];
    Sty_[num_cells_ + q] = acc;
  }
}

Eigen::VectorXd ObservationModel::apply_S(const Eigen::VectorXd& z) const {
  if (z.size() != num_cells_ + p()) {
    throw DimensionError("latent vector length mismatch in apply_S");
  }
  Eigen::VectorXd out(N());
  const auto beta = z.tail(p());
  for (int i = 0; i < N(); ++i) {
    out[i] = z[cells_[i]] + X_.row(i).dot(beta);
  }
  return out;
}

ObservationModel ObservationModel::subset(const std::vector<int>& rows) const {
  std::vector<int> cells(rows.size());
  Eigen::VectorXd y(rows.size());
  Eigen::MatrixXd X(rows.size(), p());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int r = rows[i];
    if (r < 0 || r >= N()) throw BoundsError("subset row index out of range");
    cells[i] = cells_[r];
    y[i] = y_[r];
    X.row(i) = X_.row(r);
  }
  return ObservationModel(num_cells_, std::move(cells), std::move(y),
                          std::move(X), tau_beta_);
}

SpdeGmrfModel make_model(const RegularGrid& grid, int k, int l,
                         const std::array<double, 4>& log_tau,
                         bool stationary) {
  TensorBasis2D basis = make_tensor_basis(grid.a1(), grid.b1(), grid.a2(),
                                          grid.b2(), k, l);
  SpMat F = eval_basis_matrix(basis, grid);
  Rw2Precision rw2 = build_rw2(basis);
  SpdeGmrfModel model{grid, std::move(basis), std::move(F), std::move(rw2),
                      {}, stationary};
  for (int i = 0; i < 4; ++i) model.tau[i] = std::exp(log_tau[i]);
  return model;
}

PosteriorEvaluator::PosteriorEvaluator(const SpdeGmrfModel& model,
                                       const ObservationModel& obs)
    : model_(model), obs_(obs), cholQ_("Q"), cholQc_("Q_C") {
  if (obs_.num_cells() != model_.grid.num_cells()) {
    throw DimensionError("observation model grid size does not match model");
  }
}

double PosteriorEvaluator::prior_value(const Eigen::VectorXd& theta) const {
  if (model_.stationary) return 0.0;
  double acc = 0.0;
  for (int f = 0; f < 4; ++f) {
    acc += prior_quadform(model_.rw2, model_.alpha(theta, f), model_.tau[f]);
  }
  return acc;
}

bool PosteriorEvaluator::compute_parts(const Eigen::VectorXd& theta,
                                       Parts& parts, std::string* stage_out) {
  if (theta.size() != model_.dim()) {
    throw DimensionError("theta length " + std::to_string(theta.size()) +
                         " does not match model dimension " +
                         std::to_string(model_.dim()));
  }
  if (!theta.allFinite()) {
    throw ParameterError("theta must be finite");
  }
  const int kl = model_.kl();
  const int mn = model_.grid.num_cells();
  const int p = obs_.p();

  const Eigen::VectorXd log_k2 = model_.F * model_.alpha(theta, 0);
  const Eigen::VectorXd log_g = model_.F * model_.alpha(theta, 1);
  if (log_k2.cwiseAbs().maxCoeff() > kLogFieldLimit ||
      log_g.cwiseAbs().maxCoeff() > kLogFieldLimit) {
    if (stage_out) *stage_out = "field overflow";
    return false;
  }
  parts.fields =
      materialize_fields(model_.F, model_.alpha(theta, 0),
                         model_.alpha(theta, 1), model_.alpha(theta, 2),
                         model_.alpha(theta, 3));
  parts.op = assemble(model_.grid, parts.fields);
  if (!cholQ_.try_factorize(parts.op.Q)) {
    if (stage_out) *stage_out = "Q";
    return false;
  }

  parts.tau_noise = std::exp(model_.log_tau_noise(theta));
  if (!std::isfinite(parts.tau_noise) || parts.tau_noise <= 0.0) {
    if (stage_out) *stage_out = "tau_noise overflow";
    return false;
  }

  // Q_C = [Q 0; 0 tau_beta I] + tau_noise S^T S.
  if (Qz_template_.rows() != mn + p) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(parts.op.Q.nonZeros() + p);
    for (int c = 0; c < parts.op.Q.outerSize(); ++c) {
      for (SpMat::InnerIterator it(parts.op.Q, c); it; ++it) {
        trips.emplace_back(static_cast<int>(it.row()), c, it.value());
      }
    }
    for (int q = 0; q < p; ++q) {
      trips.emplace_back(mn + q, mn + q, obs_.tau_beta());
    }
    Qz_template_.resize(mn + p, mn + p);
    Qz_template_.setFromTriplets(trips.begin(), trips.end());
    Qz_template_.makeCompressed();
  } else {
    // Refresh the u block in place; the pattern is unchanged across theta.
    // Column c of Qz holds exactly Q's column c for c < mn.
    double* dst = Qz_template_.valuePtr();
    const double* src = parts.op.Q.valuePtr();
    std::copy(src, src + parts.op.Q.nonZeros(), dst);
  }
  parts.Qc = Qz_template_ + parts.tau_noise * obs_.StS();
  if (!cholQc_.try_factorize(parts.Qc)) {
    if (stage_out) *stage_out = "Q_C";
    return false;
  }

  parts.muC = (obs_.N() > 0)
                  ? Eigen::VectorXd(cholQc_.solve(
                        Eigen::VectorXd(obs_.Sty() * parts.tau_noise)))
                  : Eigen::VectorXd::Zero(mn + p);

  const Eigen::VectorXd mu_u = parts.muC.head(mn);
  const Eigen::VectorXd mu_b = parts.muC.tail(p);
  parts.quad_z = mu_u.dot(parts.op.Q * mu_u) +
                 obs_.tau_beta() * mu_b.squaredNorm();
  if (obs_.N() > 0) {
    const Eigen::VectorXd fitted = obs_.apply_S(parts.muC);
    parts.ssr = (obs_.y() - fitted).squaredNorm();
  } else {
    parts.ssr = 0.0;
  }
  (void)kl;
  return true;
}

double PosteriorEvaluator::assemble_value(const Parts& parts) const {
  const int p = obs_.p();
  const double logdet_Qz =
      cholQ_.log_det() + p * std::log(obs_.tau_beta());
  return 0.5 * logdet_Qz + 0.5 * obs_.N() * std::log(parts.tau_noise) -
         0.5 * cholQc_.log_det() - 0.5 * parts.quad_z -
         0.5 * parts.tau_noise * parts.ssr;
}

bool PosteriorEvaluator::value(const Eigen::VectorXd& theta, double& out) {
  Parts parts;
  if (!compute_parts(theta, parts, nullptr)) return false;
  out = prior_value(theta) + assemble_value(parts);
  return true;
}

double PosteriorEvaluator::log_posterior(const Eigen::VectorXd& theta) {
  Parts parts;
  std::string stage;
  if (!compute_parts(theta, parts, &stage)) {
    if (stage == "Q" || stage == "Q_C") {
      throw NotPositiveDefiniteError(stage, stage == "Q"
                                                ? cholQ_.failed_pivot()
                                                : cholQc_.failed_pivot());
    }
    throw ParameterError("log posterior not evaluable: " + stage);
  }
  return prior_value(theta) + assemble_value(parts);
}

PosteriorBreakdown PosteriorEvaluator::breakdown(const Eigen::VectorXd& theta) {
  Parts parts;
  std::string stage;
  if (!compute_parts(theta, parts, &stage)) {
    throw ParameterError("log posterior not evaluable: " + stage);
  }
  PosteriorBreakdown b;
  b.prior = prior_value(theta);
  b.logdet_Qz = cholQ_.log_det() + obs_.p() * std::log(obs_.tau_beta());
  b.logdet_Qc = cholQc_.log_det();
  b.quad_z = parts.quad_z;
  b.ssr = parts.ssr;
  b.mu_Qc_mu = parts.muC.dot(obs_.Sty()) * parts.tau_noise;
  b.tau_noise = parts.tau_noise;
  b.value = prior_value(theta) + assemble_value(parts);
  return b;
}

bool PosteriorEvaluator::value_and_gradient(const Eigen::VectorXd& theta,
                                            double& val,
                                            Eigen::VectorXd& grad) {
  Parts parts;
  if (!compute_parts(theta, parts, nullptr)) return false;
  val = prior_value(theta) + assemble_value(parts);

  const int kl = model_.kl();
  const int mn = model_.grid.num_cells();
  grad.resize(model_.dim());

  const SelectedInverse Zq = cholQ_.selected_inverse();
  const SelectedInverse Zqc = cholQc_.selected_inverse();
  const Eigen::VectorXd mu_u = parts.muC.head(mn);

  for (int f = 0; f < 4; ++f) {
    const Eigen::VectorXd alpha_f = model_.alpha(theta, f);
    Eigen::VectorXd prior_grad = Eigen::VectorXd::Zero(kl);
    if (!model_.stationary) {
      prior_grad = -model_.tau[f] * (model_.rw2.Q * alpha_f);
    }
    for (int idx = 0; idx < kl; ++idx) {
      const SpMat dA = assemble_dA(model_.grid, parts.fields, model_.F,
                                   f + 1, idx);
      const SpMat dQ = precision_derivative(parts.op, dA);
      const double tr = Zq.trace_product(dQ) - Zqc.trace_product(dQ);
      const double quad = mu_u.dot(dQ * mu_u);
      grad[f * kl + idx] = prior_grad[idx] + 0.5 * tr - 0.5 * quad;
    }
  }
  const double tr_c = Zqc.trace_product(obs_.StS()) * parts.tau_noise;
  grad[4 * kl] = 0.5 * obs_.N() - 0.5 * tr_c -
                 0.5 * parts.tau_noise * parts.ssr;
  return true;
}

Eigen::VectorXd PosteriorEvaluator::gradient(const Eigen::VectorXd& theta) {
  double val = 0.0;
  Eigen::VectorXd grad;
  if (!value_and_gradient(theta, val, grad)) {
    throw ParameterError("gradient not evaluable at this theta");
  }
  return grad;
}

LatentConditional PosteriorEvaluator::conditional_latent(
    const Eigen::VectorXd& theta) {
  Parts parts;
  std::string stage;
  if (!compute_parts(theta, parts, &stage)) {
    if (stage == "Q" || stage == "Q_C") {
      throw NotPositiveDefiniteError(stage, stage == "Q"
                                                ? cholQ_.failed_pivot()
                                                : cholQc_.failed_pivot());
    }
    throw ParameterError("conditional not evaluable: " + stage);
  }
  LatentConditional out;
  out.muC = parts.muC;
  out.tau_noise = parts.tau_noise;
  out.mn = model_.grid.num_cells();
  out.p = obs_.p();
  SparseCholesky chol("Q_C");
  chol.factorize(parts.Qc);
  out.cholQc = std::move(chol);
  return out;
}

double PosteriorEvaluator::marginal_loglik(const Eigen::VectorXd& theta) {
  Parts parts;
  std::string stage;
  if (!compute_parts(theta, parts, &stage)) {
    throw ParameterError("marginal likelihood not evaluable: " + stage);
  }
  const int N = obs_.N();
  const double logdet_Qz =
      cholQ_.log_det() + obs_.p() * std::log(obs_.tau_beta());
  const double mu_Qc_mu = parts.muC.dot(obs_.Sty()) * parts.tau_noise;
  return -0.5 * N * std::log(2.0 * std::numbers::pi) +
         0.5 * N * std::log(parts.tau_noise) + 0.5 * logdet_Qz -
         0.5 * cholQc_.log_det() - 0.5 * parts.tau_noise * obs_.yty() +
         0.5 * mu_Qc_mu;
}

double log_posterior(const Eigen::VectorXd& theta, const ObservationModel& obs,
                     const SpdeGmrfModel& model) {
  PosteriorEvaluator eval(model, obs);
  return eval.log_posterior(theta);
}

Eigen::VectorXd gradient(const Eigen::VectorXd& theta,
                         const ObservationModel& obs,
                         const SpdeGmrfModel& model) {
  PosteriorEvaluator eval(model, obs);
  return eval.gradient(theta);
}

LatentConditional conditional_latent(const Eigen::VectorXd& theta,
                                     const ObservationModel& obs,
                                     const SpdeGmrfModel& model) {
  PosteriorEvaluator eval(model, obs);
  return eval.conditional_latent(theta);
}

}  // namespace spdefield
