#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <optional>
#include <vector>

#include "spdefield/data_io.hpp"
#include "spdefield/errors.hpp"
#include "spdefield/grid.hpp"
#include "spdefield/inference.hpp"
#include "spdefield/matern.hpp"
#include "spdefield/posterior.hpp"
#include "spdefield/predict.hpp"
#include "spdefield/rng.hpp"
#include "spdefield/score.hpp"
#include "spdefield/simulate.hpp"
#include "spdefield/sparse.hpp"
#include "spdefield/spde.hpp"

namespace py = pybind11;
using namespace spdefield;

namespace {

SpdeGmrfModel build_model(const RegularGrid& grid, int k, int l,
                          const std::array<double, 4>& log_tau,
                          bool stationary) {
  return make_model(grid, k, l, log_tau, stationary);
}

ObservationModel build_obs(const RegularGrid& grid,
                           const Eigen::MatrixXd& locations,
                           const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                           double tau_beta) {
  if (locations.cols() != 2) {
    throw DimensionError("locations must be an N x 2 array");
  }
  std::vector<Point> pts(locations.rows());
  for (Eigen::Index i = 0; i < locations.rows(); ++i) {
    pts[i] = {locations(i, 0), locations(i, 1)};
  }
  return ObservationModel(grid, pts, y, X, tau_beta);
}

FitConfig build_config(const std::string& kind, int k, int l,
                       const std::array<double, 4>& log_tau, int max_iter,
                       double grad_tol) {
  FitConfig cfg;
  cfg.kind = (kind == "stationary") ? ModelKind::Stationary
                                    : ModelKind::Nonstationary;
  cfg.k = k;
  cfg.l = l;
  cfg.log_tau = log_tau;
  cfg.optimizer.max_iter = max_iter;
  cfg.optimizer.grad_tol = grad_tol;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Non-stationary spatial Gaussian fields via SPDE-driven GMRFs";

  py::register_exception<DomainError>(m, "DomainError");
  py::register_exception<NotPositiveDefiniteError>(m, "NotPositiveDefinite");

  py::class_<RegularGrid>(m, "RegularGrid")
      .def(py::init<double, double, double, double, int, int>(),
           py::arg("a1"), py::arg("b1"), py::arg("a2"), py::arg("b2"),
           py::arg("m"), py::arg("n"))
      .def_property_readonly("m", &RegularGrid::m)
      .def_property_readonly("n", &RegularGrid::n)
      .def_property_readonly("hx", &RegularGrid::hx)
      .def_property_readonly("hy", &RegularGrid::hy)
      .def_property_readonly("num_cells", &RegularGrid::num_cells)
      .def_property_readonly("cell_area", &RegularGrid::cell_area)
      .def("locate",
           [](const RegularGrid& g, double x, double y) {
             const CellIndex c = g.locate({x, y});
             return py::make_tuple(c.i, c.j);
           })
      .def("cell_center",
           [](const RegularGrid& g, int i, int j) {
             const Point p = g.cell_center({i, j});
             return py::make_tuple(p.x, p.y);
           })
      .def("flatten",
           [](const RegularGrid& g, int i, int j) {
             return g.flatten({i, j});
           })
      .def("unflatten", [](const RegularGrid& g, int flat) {
        const CellIndex c = g.unflatten(flat);
        return py::make_tuple(c.i, c.j);
      });

  m.def(
      "basis_matrix",
      [](const RegularGrid& grid, int k, int l) {
        const TensorBasis2D basis = make_tensor_basis(
            grid.a1(), grid.b1(), grid.a2(), grid.b2(), k, l);
        return eval_basis_matrix(basis, grid);
      },
      py::arg("grid"), py::arg("k"), py::arg("l"),
      "Spline basis values at cell centers (sparse, mn x kl).");

  m.def(
      "rw2_precision",
      [](double a1, double b1, double a2, double b2, int k, int l) {
        return build_rw2(make_tensor_basis(a1, b1, a2, b2, k, l)).Q;
      },
      py::arg("a1"), py::arg("b1"), py::arg("a2"), py::arg("b2"), py::arg("k"),
      py::arg("l"), "Second-order random-walk prior precision (kl x kl).");

  m.def(
      "precision_matrix",
      [](const RegularGrid& grid, int k, int l,
         const Eigen::VectorXd& theta) {
        const SpdeGmrfModel model =
            build_model(grid, k, l, {0, 0, 0, 0}, false);
        const AnisotropyField f = materialize_fields(
            model.F, model.alpha(theta, 0), model.alpha(theta, 1),
            model.alpha(theta, 2), model.alpha(theta, 3));
        return assemble(grid, f).Q;
      },
      py::arg("grid"), py::arg("k"), py::arg("l"), py::arg("theta"),
      "GMRF precision Q = A^T A V for theta = (a1, a2, a3, a4, log_tau).");

  m.def(
      "simulate_field",
      [](const RegularGrid& grid, int k, int l, const Eigen::VectorXd& theta,
         std::uint64_t seed) {
        const SpdeGmrfModel model =
            build_model(grid, k, l, {0, 0, 0, 0}, false);
        Rng rng(seed);
        return sample_field(model, theta, rng);
      },
      py::arg("grid"), py::arg("k"), py::arg("l"), py::arg("theta"),
      py::arg("seed"), "One draw of u ~ N(0, Q^{-1}) on the grid cells.");

  m.def(
      "log_posterior",
      [](const RegularGrid& grid, const std::string& kind, int k, int l,
         const std::array<double, 4>& log_tau, const Eigen::MatrixXd& locs,
         const Eigen::VectorXd& y, const Eigen::MatrixXd& X, double tau_beta,
         const Eigen::VectorXd& theta) {
        FitConfig cfg = build_config(kind, k, l, log_tau, 200, 1e-5);
        const SpdeGmrfModel model = model_for(grid, cfg);
        const ObservationModel obs = build_obs(grid, locs, y, X, tau_beta);
        PosteriorEvaluator eval(model, obs);
        return eval.log_posterior(theta);
      },
      py::arg("grid"), py::arg("kind"), py::arg("k"), py::arg("l"),
      py::arg("log_tau"), py::arg("locations"), py::arg("y"), py::arg("X"),
      py::arg("tau_beta"), py::arg("theta"));

  m.def(
      "gradient",
      [](const RegularGrid& grid, const std::string& kind, int k, int l,
         const std::array<double, 4>& log_tau, const Eigen::MatrixXd& locs,
         const Eigen::VectorXd& y, const Eigen::MatrixXd& X, double tau_beta,
         const Eigen::VectorXd& theta) {
        FitConfig cfg = build_config(kind, k, l, log_tau, 200, 1e-5);
        const SpdeGmrfModel model = model_for(grid, cfg);
        const ObservationModel obs = build_obs(grid, locs, y, X, tau_beta);
        PosteriorEvaluator eval(model, obs);
        return eval.gradient(theta);
      },
      py::arg("grid"), py::arg("kind"), py::arg("k"), py::arg("l"),
      py::arg("log_tau"), py::arg("locations"), py::arg("y"), py::arg("X"),
      py::arg("tau_beta"), py::arg("theta"));

  m.def(
      "fit",
      [](const RegularGrid& grid, const std::string& kind, int k, int l,
         const std::array<double, 4>& log_tau, const Eigen::MatrixXd& locs,
         const Eigen::VectorXd& y, const Eigen::MatrixXd& X, double tau_beta,
         int max_iter, double grad_tol, bool compute_sd) {
        FitConfig cfg = build_config(kind, k, l, log_tau, max_iter, grad_tol);
        const ObservationModel obs = build_obs(grid, locs, y, X, tau_beta);
        const FitResult fit = fit_map(grid, obs, cfg, compute_sd);
        py::dict out;
        out["theta"] = fit.theta;
        out["log_posterior"] = fit.log_posterior;
        out["converged"] = fit.converged;
        out["iterations"] = fit.iterations;
        out["message"] = fit.message;
        if (fit.sd) {
          out["sd"] = *fit.sd;
        } else {
          out["sd"] = py::none();
        }
        return out;
      },
      py::arg("grid"), py::arg("kind"), py::arg("k"), py::arg("l"),
      py::arg("log_tau"), py::arg("locations"), py::arg("y"), py::arg("X"),
      py::arg("tau_beta") = 1e-4, py::arg("max_iter") = 200,
      py::arg("grad_tol") = 1e-5, py::arg("compute_sd") = true,
      "MAP estimate of theta; returns a dict with theta, sd, diagnostics.");

  m.def(
      "predict",
      [](const RegularGrid& grid, const std::string& kind, int k, int l,
         const std::array<double, 4>& log_tau, const Eigen::MatrixXd& locs,
         const Eigen::VectorXd& y, const Eigen::MatrixXd& X, double tau_beta,
         const Eigen::VectorXd& theta, const Eigen::MatrixXd& Xstar,
         bool include_noise) {
        FitConfig cfg = build_config(kind, k, l, log_tau, 200, 1e-5);
        const SpdeGmrfModel model = model_for(grid, cfg);
        const ObservationModel obs = build_obs(grid, locs, y, X, tau_beta);
        PosteriorEvaluator eval(model, obs);
        const LatentConditional lat = eval.conditional_latent(theta);
        const PredictionField pf =
            predict_from_conditional(lat, Xstar, include_noise);
        return py::make_tuple(pf.mean, pf.sd);
      },
      py::arg("grid"), py::arg("kind"), py::arg("k"), py::arg("l"),
      py::arg("log_tau"), py::arg("locations"), py::arg("y"), py::arg("X"),
      py::arg("tau_beta"), py::arg("theta"), py::arg("Xstar"),
      py::arg("include_noise") = false,
      "Per-cell predictive mean and standard deviation.");

  m.def("crps_gaussian", &crps_gaussian, py::arg("mu"), py::arg("sigma"),
        py::arg("y"), "Closed-form CRPS of a Gaussian forecast.");

  m.def("matern_correlation", &matern_correlation, py::arg("kappa"),
        py::arg("d"));
  m.def(
      "matern_marginal_variance",
      [](double kappa2, double gamma, double vx, double vy) {
        return matern_marginal_variance(kappa2,
                                        anisotropy_matrix(gamma, vx, vy));
      },
      py::arg("kappa2"), py::arg("gamma"), py::arg("vx"), py::arg("vy"));

  m.def(
      "chol_logdet",
      [](const SpMat& Q) {
        SparseCholesky ch("Q");
        ch.factorize(Q);
        return ch.log_det();
      },
      py::arg("Q"), "log det of a sparse SPD matrix.");

  m.def(
      "chol_solve",
      [](const SpMat& Q, const Eigen::VectorXd& b) {
        SparseCholesky ch("Q");
        ch.factorize(Q);
        return ch.solve(b);
      },
      py::arg("Q"), py::arg("b"));

  m.def(
      "selected_inverse",
      [](const SpMat& Q) {
        SparseCholesky ch("Q");
        ch.factorize(Q);
        return ch.selected_inverse().to_sparse();
      },
      py::arg("Q"),
      "Entries of Q^{-1} on the Cholesky factor pattern (sparse).");
}
