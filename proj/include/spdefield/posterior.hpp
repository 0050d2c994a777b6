#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <optional>
#include <vector>

#include "spdefield/fields.hpp"
#include "spdefield/grid.hpp"
#include "spdefield/rw2.hpp"
#include "spdefield/sparse.hpp"
#include "spdefield/spde.hpp"
#include "spdefield/splines.hpp"

namespace spdefield {

// Observations y = X beta + E u + eps with E the cell selector.  Rows are
// stored in a canonical order (by cell, then value, then covariates) so all
// reductions are invariant, bitwise, to the order observations arrive in.
class ObservationModel {
 public:
  // locs are mapped to cells through the grid.  X may have zero columns.
  ObservationModel(const RegularGrid& grid, const std::vector<Point>& locs,
                   Eigen::VectorXd y, Eigen::MatrixXd X, double tau_beta);
  // Direct construction from flat cell indices (tests, subsetting).
  ObservationModel(int num_cells, std::vector<int> cells, Eigen::VectorXd y,
                   Eigen::MatrixXd X, double tau_beta);

  int N() const { return static_cast<int>(y_.size()); }
  int p() const { return static_cast<int>(X_.cols()); }
  int num_cells() const { return num_cells_; }
  double tau_beta() const { return tau_beta_; }
  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::MatrixXd& X() const { return X_; }
  const std::vector<int>& cells() const { return cells_; }

  // S^T S (unscaled) over the stacked S = [E X]; dimension (mn+p)^2.
  const SpMat& StS() const { return StS_; }
  // S^T y.
  const Eigen::VectorXd& Sty() const { return Sty_; }
  double yty() const { return yty_; }

  // S z for z = (u, beta).
  Eigen::VectorXd apply_S(const Eigen::VectorXd& z) const;

  // Sub-model from canonical row indices (cross validation, holdouts).
  ObservationModel subset(const std::vector<int>& rows) const;

 private:
  void canonicalize_and_build();

  int num_cells_;
  double tau_beta_;
  std::vector<int> cells_;
  Eigen::VectorXd y_;
  Eigen::MatrixXd X_;
  SpMat StS_;
  Eigen::VectorXd Sty_;
  double yty_ = 0.0;
};

// Model structure shared across evaluations: grid, basis, RW2 prior and the
// fixed smoothing precisions.  theta = (alpha1, alpha2, alpha3, alpha4,
// log tau_noise), length 4 kl + 1.  The stationary model is the kl = 1 case
// with the prior term dropped (uniform priors on the five scalars).
struct SpdeGmrfModel {
  RegularGrid grid;
  TensorBasis2D basis;
  SpMat F;
  Rw2Precision rw2;
  std::array<double, 4> tau{1.0, 1.0, 1.0, 1.0};
  bool stationary = false;

  int kl() const { return basis.size(); }
  int dim() const { return 4 * kl() + 1; }

  Eigen::VectorXd alpha(const Eigen::VectorXd& theta, int field) const {
    return theta.segment(field * kl(), kl());
  }
  double log_tau_noise(const Eigen::VectorXd& theta) const {
    return theta[4 * kl()];
  }
};

SpdeGmrfModel make_model(const RegularGrid& grid, int k, int l,
                         const std::array<double, 4>& log_tau,
                         bool stationary);

// Additive terms of the marginalized log posterior (diagnostics/tests).
struct PosteriorBreakdown {
  double prior = 0.0;
  double logdet_Qz = 0.0;
  double logdet_Qc = 0.0;
  double quad_z = 0.0;   // muC^T Qz muC
  double ssr = 0.0;      // (y - S muC)^T (y - S muC)
  double mu_Qc_mu = 0.0;
  double tau_noise = 0.0;
  double value = 0.0;
};

// Conditional distribution of z = (u, beta) given theta and y: mean muC and
// the Cholesky factor of Q_C (kept for prediction).
struct LatentConditional {
  Eigen::VectorXd muC;
  SparseCholesky cholQc;
  double tau_noise = 0.0;
  int mn = 0;
  int p = 0;
};

// Evaluates the marginalized log posterior, its analytic gradient, and the
// conditional of the latent block.  Symbolic factorizations are cached
// across calls (the sparsity patterns do not depend on theta).
class PosteriorEvaluator {
 public:
  PosteriorEvaluator(const SpdeGmrfModel& model, const ObservationModel& obs);

  int dim() const { return model_.dim(); }
  const SpdeGmrfModel& model() const { return model_; }
  const ObservationModel& obs() const { return obs_; }

  // Log posterior up to an additive constant.  Returns false when the point
  // is not evaluable (field overflow or a Cholesky failure); used by line
  // searches.
  bool value(const Eigen::VectorXd& theta, double& out);

  // Throwing variants.
  double log_posterior(const Eigen::VectorXd& theta);
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta);
  bool value_and_gradient(const Eigen::VectorXd& theta, double& val,
                          Eigen::VectorXd& grad);

  PosteriorBreakdown breakdown(const Eigen::VectorXd& theta);

  LatentConditional conditional_latent(const Eigen::VectorXd& theta);

  // Full Gaussian marginal log density log pi(y | theta), constants
  // included (scoring and cross validation).
  double marginal_loglik(const Eigen::VectorXd& theta);

 private:
  struct Parts {
    AnisotropyField fields;
    SpdeOperator op;
    SpMat Qc;
    Eigen::VectorXd muC;
    double tau_noise = 0.0;
    double ssr = 0.0;
    double quad_z = 0.0;
  };

  // Factorizes and fills parts; returns false on failure (optionally
  // recording the failing stage in stage_out).
  bool compute_parts(const Eigen::VectorXd& theta, Parts& parts,
                     std::string* stage_out);
  double assemble_value(const Parts& parts) const;
  double prior_value(const Eigen::VectorXd& theta) const;

  SpdeGmrfModel model_;
  const ObservationModel& obs_;
  SpMat Qz_template_;  // block-diagonal pattern [Q 0; 0 tau_beta I]
  SparseCholesky cholQ_;
  SparseCholesky cholQc_;
};

// One-shot convenience wrappers.
double log_posterior(const Eigen::VectorXd& theta, const ObservationModel& obs,
                     const SpdeGmrfModel& model);
Eigen::VectorXd gradient(const Eigen::VectorXd& theta,
                         const ObservationModel& obs,
                         const SpdeGmrfModel& model);
LatentConditional conditional_latent(const Eigen::VectorXd& theta,
                                     const ObservationModel& obs,
                                     const SpdeGmrfModel& model);

}  // namespace spdefield
