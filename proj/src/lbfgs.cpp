#include "spdefield/lbfgs.hpp"

#include <cmath>
#include <deque>

#include "spdefield/errors.hpp"

namespace spdefield {

namespace {

struct Pair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;  // gradient difference of the minimized objective
  double rho;
};

}  // namespace

LbfgsResult lbfgs_maximize(const ValueGradFn& value_grad, const ValueFn& value,
                           Eigen::VectorXd x0, const LbfgsOptions& opts) {
  // Internally minimize phi = -f.
  const auto phi_grad = [&](const Eigen::VectorXd& x, double& v,
                            Eigen::VectorXd& g) {
    if (!value_grad(x, v, g)) return false;
    v = -v;
    g = -g;
    return true;
  };
  const auto phi = [&](const Eigen::VectorXd& x, double& v) {
    if (!value(x, v)) return false;
    v = -v;
    return true;
  };

  LbfgsResult res;
  Eigen::VectorXd x = std::move(x0);
  double fx = 0.0;
  Eigen::VectorXd g;
  if (!phi_grad(x, fx, g)) {
    throw ParameterError("optimizer starting point is not evaluable");
  }

  std::deque<Pair> mem;
  int flat_steps = 0;
  const double c1 = 1e-4;

  auto grad_converged = [&](const Eigen::VectorXd& grad,
                            const Eigen::VectorXd& at) {
    const double scale = std::max(1.0, at.cwiseAbs().maxCoeff());
    return grad.cwiseAbs().maxCoeff() < opts.grad_tol * scale;
  };

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    res.iterations = iter;
    if (grad_converged(g, x)) {
      res.converged = true;
      res.message = "gradient tolerance reached";
      break;
    }

    // Two-loop recursion for d = -H g (descent direction for phi).
    Eigen::VectorXd d = -g;
    std::vector<double> alpha(mem.size());
    for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
      alpha[i] = mem[i].rho * mem[i].s.dot(d);
      d -= alpha[i] * mem[i].y;
    }
    if (!mem.empty()) {
      const auto& last = mem.back();
      d *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t i = 0; i < mem.size(); ++i) {
      const double beta = mem[i].rho * mem[i].y.dot(d);
      d += (alpha[i] - beta) * mem[i].s;
    }
    double dg = d.dot(g);
    if (!(dg < 0.0)) {
      // Not a descent direction (stale curvature); fall back to steepest.
      d = -g;
      dg = d.dot(g);
      mem.clear();
    }

    double step = mem.empty()
                      ? 1.0 / std::max(1.0, g.cwiseAbs().maxCoeff())
                      : 1.0;
    double fnew = fx;
    Eigen::VectorXd xnew;
    bool accepted = false;
    for (int ls = 0; ls < opts.max_linesearch; ++ls) {
      xnew = x + step * d;
      double v;
      if (phi(xnew, v) && v <= fx + c1 * step * dg) {
        fnew = v;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.converged = grad_converged(g, x);
      res.message = res.converged ? "gradient tolerance reached"
                                  : "line search failed";
      break;
    }

    double fcheck;
    Eigen::VectorXd gnew;
    if (!phi_grad(xnew, fcheck, gnew)) {
      res.message = "gradient not evaluable at accepted point";
      break;
    }

    const Eigen::VectorXd s = xnew - x;
    const Eigen::VectorXd yv = gnew - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      mem.push_back({s, yv, 1.0 / sy});
      if (static_cast<int>(mem.size()) > opts.memory) mem.pop_front();
    }

    const double change = std::abs(fx - fnew) / std::max(1.0, std::abs(fnew));
    x = std::move(xnew);
    fx = fnew;
    g = std::move(gnew);
    res.iterations = iter + 1;
    // Two consecutive sub-tolerance changes, so a single short
    // backtracked step does not end the ascent early.
    if (change < opts.obj_tol) {
      if (++flat_steps >= 2) {
        res.converged = true;
        res.message = "objective change below tolerance";
        break;
      }
    } else {
      flat_steps = 0;
    }
  }
  if (res.message.empty()) {
    res.converged = grad_converged(g, x);
    res.message = res.converged ? "gradient tolerance reached"
                                : "iteration limit reached";
  }

  res.x = std::move(x);
  res.f = -fx;
  res.grad = -g;
  return res;
}

}  // namespace spdefield
