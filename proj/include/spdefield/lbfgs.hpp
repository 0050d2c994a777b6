#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace spdefield {

struct LbfgsOptions {
  int max_iter = 200;
  double grad_tol = 1e-5;  // ||g||_inf < grad_tol * max(1, ||x||_inf)
  double obj_tol = 1e-9;   // relative objective change
  int memory = 10;
  int max_linesearch = 40;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd grad;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

// Evaluates value and gradient at x; returns false when the point is not
// evaluable (the line search treats that as a rejected step).
using ValueGradFn =
    std::function<bool(const Eigen::VectorXd&, double&, Eigen::VectorXd&)>;
// Value only (cheaper, used inside the line search).
using ValueFn = std::function<bool(const Eigen::VectorXd&, double&)>;

// Limited-memory quasi-Newton ascent with backtracking (Armijo) line
// search.  The starting point must be evaluable.
LbfgsResult lbfgs_maximize(const ValueGradFn& value_grad, const ValueFn& value,
                           Eigen::VectorXd x0, const LbfgsOptions& opts);

}  // namespace spdefield
