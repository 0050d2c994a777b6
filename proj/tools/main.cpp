#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "spdefield/config.hpp"
#include "spdefield/data_io.hpp"
#include "spdefield/errors.hpp"
#include "spdefield/inference.hpp"
#include "spdefield/matern.hpp"
#include "spdefield/posterior.hpp"
#include "spdefield/predict.hpp"
#include "spdefield/rng.hpp"
#include "spdefield/score.hpp"
#include "spdefield/simulate.hpp"
#include "spdefield/sparse.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spdefield;

namespace {

// Serializes one run: exclusive lockfile in the output directory, written
// files tracked so failures leave no partial outputs behind.
class OutputDir {
 public:
  explicit OutputDir(const std::string& dir) : dir_(dir) {
    fs::create_directories(dir_);
    lock_ = dir_ / ".lock";
    std::FILE* f = std::fopen(lock_.c_str(), "wx");
    if (!f) {
      throw IoError("output directory " + dir +
                    " is locked by another run (remove .lock if stale)");
    }
    std::fclose(f);
  }
  ~OutputDir() {
    if (failed_) {
      for (const auto& p : written_) {
        std::error_code ec;
        fs::remove(p, ec);
      }
    }
    std::error_code ec;
    fs::remove(lock_, ec);
  }
  std::string path(const std::string& name) {
    const fs::path p = dir_ / name;
    written_.push_back(p);
    return p.string();
  }
  void mark_failed() { failed_ = true; }

 private:
  fs::path dir_;
  fs::path lock_;
  std::vector<fs::path> written_;
  bool failed_ = false;
};

Raster field_to_raster(const RegularGrid& grid, const Eigen::VectorXd& v) {
  Raster r;
  r.ncols = grid.m();
  r.nrows = grid.n();
  r.xll = grid.a1();
  r.yll = grid.a2();
  r.dx = grid.hx();
  r.dy = grid.hy();
  r.values.resize(static_cast<std::size_t>(r.ncols) * r.nrows);
  for (int j = 0; j < grid.n(); ++j) {
    for (int i = 0; i < grid.m(); ++i) {
      r.values[static_cast<std::size_t>(r.nrows - 1 - j) * r.ncols + i] =
          v[grid.flatten({i, j})];
    }
  }
  return r;
}

Dataset load_dataset(const RunConfig& cfg) {
  if (!cfg.has_data) {
    throw ConfigError("this command needs a 'data' section in the config");
  }
  if (cfg.data.format == "stations") {
    return ingest_stations(cfg.data.path);
  }
  return read_observations(cfg.data.path);
}

ObservationModel make_obs(const RunConfig& cfg, const RegularGrid& grid,
                          const Dataset& data) {
  return ObservationModel(grid, data.locations, data.y, data.X, cfg.tau_beta);
}

Eigen::VectorXd simulate_theta(const RunConfig& cfg, const SpdeGmrfModel& m) {
  const int kl = m.kl();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(m.dim());
  auto fill = [&](const std::vector<double>& src, int block,
                  const char* name) {
    if (src.empty()) return;
    if (static_cast<int>(src.size()) != kl) {
      throw ConfigError(std::string("simulate.") + name + " must have k*l = " +
                        std::to_string(kl) + " entries");
    }
    for (int i = 0; i < kl; ++i) theta[block * kl + i] = src[i];
  };
  fill(cfg.simulate.alpha1, 0, "alpha1");
  fill(cfg.simulate.alpha2, 1, "alpha2");
  fill(cfg.simulate.alpha3, 2, "alpha3");
  fill(cfg.simulate.alpha4, 3, "alpha4");
  theta[m.dim() - 1] = cfg.simulate.log_tau_noise;
  return theta;
}

void write_csv_header(std::ofstream& out, const std::string& header) {
  out << header << "\n";
}

std::string kind_name(ModelKind k) {
  return k == ModelKind::Stationary ? "stationary" : "nonstationary";
}

std::vector<std::string> theta_names(const FitResult& fit) {
  std::vector<std::string> names;
  const int kl = fit.k * fit.l;
  if (fit.kind == ModelKind::Stationary) {
    names = {"log_kappa2", "log_gamma", "vx", "vy"};
  } else {
    const char* fields[] = {"alpha_log_kappa2", "alpha_log_gamma", "alpha_vx",
                            "alpha_vy"};
    for (const char* f : fields) {
      for (int i = 0; i < fit.k; ++i) {
        for (int j = 0; j < fit.l; ++j) {
          names.push_back(std::string(f) + "_" + std::to_string(i) + "_" +
                          std::to_string(j));
        }
      }
    }
    (void)kl;
  }
  names.push_back("log_tau_noise");
  return names;
}

void write_parameter_table(const std::string& path, const FitResult& fit) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_csv_header(out, "parameter,estimate,sd");
  const auto names = theta_names(fit);
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << names[i] << "," << format_double(fit.theta[i]) << ",";
    if (fit.sd) out << format_double((*fit.sd)[i]);
    out << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

ModelRecord make_record(const RunConfig& cfg, const FitResult& fit, int p) {
  ModelRecord rec;
  rec.fit = fit;
  rec.a1 = cfg.a1;
  rec.b1 = cfg.b1;
  rec.a2 = cfg.a2;
  rec.b2 = cfg.b2;
  rec.m = cfg.m;
  rec.n = cfg.n;
  rec.p = p;
  rec.tau_beta = cfg.tau_beta;
  rec.seed = cfg.seed;
  return rec;
}

// Cell covariate matrix for prediction: intercept plus one column per
// raster, sampled at cell centers.
Eigen::MatrixXd cell_covariates(const RunConfig& cfg, const RegularGrid& grid,
                                int p) {
  const auto& rasters = cfg.predict.covariate_rasters;
  if (1 + static_cast<int>(rasters.size()) != p) {
    throw ConfigError("predict.covariate_rasters must supply " +
                      std::to_string(p - 1) + " rasters for the model's " +
                      std::to_string(p) + " covariates");
  }
  Eigen::MatrixXd Xstar(grid.num_cells(), p);
  Xstar.col(0).setOnes();
  for (std::size_t r = 0; r < rasters.size(); ++r) {
    const Raster raster = read_esri_ascii(rasters[r]);
    for (int j = 0; j < grid.n(); ++j) {
      for (int i = 0; i < grid.m(); ++i) {
        const Point s = grid.cell_center({i, j});
        Xstar(grid.flatten({i, j}), 1 + static_cast<int>(r)) =
            bilinear(raster, s);
      }
    }
  }
  return Xstar;
}

// Mask: 1 for cells whose center lies within `radius` of any observation.
Eigen::VectorXd observation_mask(const RegularGrid& grid,
                                 const std::vector<Point>& locs,
                                 double radius) {
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(grid.num_cells());
  const int rx = static_cast<int>(std::ceil(radius / grid.hx())) + 1;
  const int ry = static_cast<int>(std::ceil(radius / grid.hy())) + 1;
  for (const Point& s : locs) {
    const CellIndex c = grid.locate(s);
    for (int dj = -ry; dj <= ry; ++dj) {
      for (int di = -rx; di <= rx; ++di) {
        const int i = c.i + di;
        const int j = c.j + dj;
        if (i < 0 || i >= grid.m() || j < 0 || j >= grid.n()) continue;
        const Point center = grid.cell_center({i, j});
        const double dx = center.x - s.x;
        const double dy = center.y - s.y;
        if (dx * dx + dy * dy <= radius * radius) {
          mask[grid.flatten({i, j})] = 1.0;
        }
      }
    }
  }
  return mask;
}

// Marching-squares segments of the level contour of a cell-center field.
struct Segment {
  double x1, y1, x2, y2;
};

std::vector<Segment> contour_segments(const RegularGrid& grid,
                                      const Eigen::VectorXd& v, double level) {
  std::vector<Segment> segs;
  auto at = [&](int i, int j) { return v[grid.flatten({i, j})]; };
  auto interp = [level](double a, double b) { return (level - a) / (b - a); };
  for (int j = 0; j + 1 < grid.n(); ++j) {
    for (int i = 0; i + 1 < grid.m(); ++i) {
      const Point p00 = grid.cell_center({i, j});
      const Point p11 = grid.cell_center({i + 1, j + 1});
      const double v00 = at(i, j), v10 = at(i + 1, j);
      const double v01 = at(i, j + 1), v11 = at(i + 1, j + 1);
      int code = 0;
      if (v00 > level) code |= 1;
      if (v10 > level) code |= 2;
      if (v11 > level) code |= 4;
      if (v01 > level) code |= 8;
      if (code == 0 || code == 15) continue;
      // edge crossing points (bottom, right, top, left)
      Point eb{p00.x + interp(v00, v10) * (p11.x - p00.x), p00.y};
      Point er{p11.x, p00.y + interp(v10, v11) * (p11.y - p00.y)};
      Point et{p00.x + interp(v01, v11) * (p11.x - p00.x), p11.y};
      Point el{p00.x, p00.y + interp(v00, v01) * (p11.y - p00.y)};
      auto add = [&](Point a, Point b) {
        segs.push_back({a.x, a.y, b.x, b.y});
      };
      switch (code) {
        case 1: case 14: add(el, eb); break;
        case 2: case 13: add(eb, er); break;
        case 3: case 12: add(el, er); break;
        case 4: case 11: add(er, et); break;
        case 5: add(el, et); add(eb, er); break;
        case 6: case 9: add(eb, et); break;
        case 7: case 8: add(el, et); break;
        case 10: add(el, eb); add(er, et); break;
      }
    }
  }
  return segs;
}

void write_summaries(const RunConfig& cfg, OutputDir& out,
                     const RegularGrid& grid, const ModelRecord& rec,
                     const std::vector<Point>& locations, double level,
                     bool approximate, bool exact) {
  FitConfig fc;
  fc.kind = rec.fit.kind;
  fc.k = rec.fit.k;
  fc.l = rec.fit.l;
  fc.log_tau = rec.fit.log_tau;
  const SpdeGmrfModel model = model_for(grid, fc);
  const Eigen::VectorXd& theta = rec.fit.theta;
  const AnisotropyField f = materialize_fields(
      model.F, model.alpha(theta, 0), model.alpha(theta, 1),
      model.alpha(theta, 2), model.alpha(theta, 3));

  if (approximate) {
    // per-cell marginal SD of the local stationary model
    Eigen::VectorXd sd(grid.num_cells());
    for (int c = 0; c < grid.num_cells(); ++c) {
      Eigen::Matrix2d H;
      H << f.H11[c], f.H12[c], f.H12[c], f.H22[c];
      sd[c] = std::sqrt(matern_marginal_variance(f.kappa2[c], H));
    }
    write_esri_ascii(out.path("approx_sd.asc"), field_to_raster(grid, sd));

    std::ofstream ell(out.path("approx_contours.csv"));
    write_csv_header(ell, "location,vertex,x,y");
    for (std::size_t li = 0; li < locations.size(); ++li) {
      const int c = grid.flatten(grid.locate(locations[li]));
      Eigen::Matrix2d H;
      H << f.H11[c], f.H12[c], f.H12[c], f.H22[c];
      const auto poly = correlation_ellipse(
          f.kappa2[c], H, {locations[li].x, locations[li].y}, level, 128);
      for (int vtx = 0; vtx < poly.rows(); ++vtx) {
        ell << li << "," << vtx << "," << format_double(poly(vtx, 0)) << ","
            << format_double(poly(vtx, 1)) << "\n";
      }
    }
  }

  if (exact) {
    const SpdeOperator op = assemble(grid, f);
    SparseCholesky chol("Q");
    chol.factorize(op.Q);
    const Eigen::VectorXd var = chol.selected_inverse().diagonal();
    write_esri_ascii(out.path("exact_sd.asc"),
                     field_to_raster(grid, var.cwiseSqrt()));

    std::ofstream ctr(out.path("exact_contours.csv"));
    write_csv_header(ctr, "location,x1,y1,x2,y2");
    for (std::size_t li = 0; li < locations.size(); ++li) {
      const int c = grid.flatten(grid.locate(locations[li]));
      Eigen::VectorXd e = Eigen::VectorXd::Zero(grid.num_cells());
      e[c] = 1.0;
      const Eigen::VectorXd cov = chol.solve(e);
      Eigen::VectorXd corr(grid.num_cells());
      for (int t = 0; t < grid.num_cells(); ++t) {
        corr[t] = cov[t] / std::sqrt(var[c] * var[t]);
      }
      for (const Segment& s : contour_segments(grid, corr, level)) {
        ctr << li << "," << format_double(s.x1) << "," << format_double(s.y1)
            << "," << format_double(s.x2) << "," << format_double(s.y2)
            << "\n";
      }
    }
  }
}

int cmd_simulate(const RunConfig& cfg, OutputDir& out) {
  const RegularGrid grid = cfg.make_grid();
  if (!cfg.has_simulate) {
    throw ConfigError("simulate needs a 'simulate' section");
  }
  FitConfig fc = cfg.model;
  const SpdeGmrfModel model = model_for(grid, fc);
  const Eigen::VectorXd theta = simulate_theta(cfg, model);
  Rng rng(cfg.seed);

  const Eigen::VectorXd field = sample_field(model, theta, rng);
  write_esri_ascii(out.path("field.asc"), field_to_raster(grid, field));

  json truth;
  truth["seed"] = cfg.seed;
  truth["theta"] = std::vector<double>(theta.data(),
                                       theta.data() + theta.size());
  truth["beta"] = cfg.simulate.beta;
  truth["kind"] = kind_name(fc.kind);
  truth["basis"] = {{"k", fc.basis_k()}, {"l", fc.basis_l()}};
  truth["grid"] = {{"m", cfg.m}, {"n", cfg.n}};
  truth["domain"] = {{"a1", cfg.a1}, {"b1", cfg.b1}, {"a2", cfg.a2},
                     {"b2", cfg.b2}};
  {
    std::ofstream tf(out.path("truth.json"));
    tf << truth.dump(2) << "\n";
  }

  std::vector<Point> locs = cfg.simulate.locations;
  if (cfg.simulate.n_obs > 0) {
    const auto extra = random_locations(grid, cfg.simulate.n_obs, rng);
    locs.insert(locs.end(), extra.begin(), extra.end());
  }
  if (!locs.empty()) {
    const int p = static_cast<int>(cfg.simulate.beta.size());
    Eigen::VectorXd beta(p);
    for (int q = 0; q < p; ++q) beta[q] = cfg.simulate.beta[q];
    Eigen::MatrixXd X(locs.size(), p);
    if (p > 0) X.col(0).setOnes();
    if (p > 1) {
      if (cfg.data.elevation_raster.empty()) {
        throw ConfigError(
            "simulate with more than an intercept needs "
            "data.elevation_raster for the covariate values");
      }
      const Raster elev = read_esri_ascii(cfg.data.elevation_raster);
      for (std::size_t i = 0; i < locs.size(); ++i) {
        X(i, 1) = bilinear(elev, locs[i]);
      }
      if (p > 2) {
        throw ConfigError("simulate supports at most intercept + elevation");
      }
    }
    // noise is drawn inside simulate_observations from theta's last entry;
    // the field is re-used so observations match field.asc
    const double tau = std::exp(model.log_tau_noise(theta));
    const double noise_sd = 1.0 / std::sqrt(tau);
    Dataset ds;
    ds.locations = locs;
    ds.y.resize(locs.size());
    ds.X = X;
    ds.covariate_names = {"intercept"};
    if (p > 1) ds.covariate_names.push_back("elev");
    for (std::size_t i = 0; i < locs.size(); ++i) {
      const int cell = grid.flatten(grid.locate(locs[i]));
      ds.y[i] = X.row(i).dot(beta) + field[cell] + noise_sd * rng.normal();
    }
    write_observations(out.path("observations.csv"), ds);
  }
  return 0;
}

int cmd_fit(const RunConfig& cfg, OutputDir& out) {
  const RegularGrid grid = cfg.make_grid();
  const Dataset data = load_dataset(cfg);
  const ObservationModel obs = make_obs(cfg, grid, data);
  const FitResult fit = fit_map(grid, obs, cfg.model, /*compute_sd=*/true);
  save_model(out.path("model.txt"), make_record(cfg, fit, obs.p()));
  write_parameter_table(out.path("parameters.csv"), fit);
  json info;
  info["converged"] = fit.converged;
  info["iterations"] = fit.iterations;
  info["message"] = fit.message;
  info["log_posterior"] = fit.log_posterior;
  info["n_observations"] = obs.N();
  info["excluded_missing"] = data.excluded_missing;
  info["excluded_zero"] = data.excluded_zero;
  {
    std::ofstream jf(out.path("fit.json"));
    jf << info.dump(2) << "\n";
  }
  if (!fit.converged) {
    std::cerr << "fit did not converge: " << fit.message << "\n";
    return 2;
  }
  return 0;
}

int cmd_cv(const RunConfig& cfg, OutputDir& out) {
  const RegularGrid grid = cfg.make_grid();
  const Dataset data = load_dataset(cfg);
  const ObservationModel obs = make_obs(cfg, grid, data);
  const CvResult cv = cross_validate(grid, obs, cfg.model);
  {
    std::ofstream tf(out.path("cv_table.csv"));
    write_csv_header(tf, "log_tau1,log_tau2,log_tau3,log_tau4,score,status");
    for (const CvRow& row : cv.table) {
      for (double t : row.log_tau) tf << format_double(t) << ",";
      if (row.failed) {
        tf << ",failed\n";
      } else {
        tf << format_double(row.score) << ",ok\n";
      }
    }
  }
  json best;
  best["log_tau"] = cv.best;
  best["seed"] = cv.seed;
  {
    std::ofstream jf(out.path("cv_selected.json"));
    jf << best.dump(2) << "\n";
  }
  return 0;
}

int cmd_predict(const RunConfig& cfg, OutputDir& out) {
  const RegularGrid grid = cfg.make_grid();
  if (!cfg.has_predict) {
    throw ConfigError("predict needs a 'predict' section");
  }
  const ModelRecord rec = load_model(cfg.predict.model_file);
  require_grid_match(rec, grid);

  Eigen::MatrixXd Xstar;
  std::vector<Point> obs_locations;
  PredictionField pf;
  if (cfg.has_data) {
    const Dataset data = load_dataset(cfg);
    const ObservationModel obs = make_obs(cfg, grid, data);
    if (obs.p() != rec.p) {
      throw DimensionError("data covariates (" + std::to_string(obs.p()) +
                           ") do not match the model file (" +
                           std::to_string(rec.p) + ")");
    }
    Xstar = cell_covariates(cfg, grid, rec.p);
    pf = predict(rec.fit, grid, obs, Xstar, cfg.predict.include_noise);
    obs_locations = data.locations;
  } else {
    // no data: prior predictive
    Xstar = cell_covariates(cfg, grid, rec.p);
    const ObservationModel empty(grid.num_cells(), {}, Eigen::VectorXd(),
                                 Eigen::MatrixXd(0, rec.p), cfg.tau_beta);
    pf = predict(rec.fit, grid, empty, Xstar, cfg.predict.include_noise);
  }
  write_esri_ascii(out.path("pred_mean.asc"), field_to_raster(grid, pf.mean));
  write_esri_ascii(out.path("pred_sd.asc"), field_to_raster(grid, pf.sd));
  if (cfg.predict.mask_enabled) {
    write_esri_ascii(
        out.path("mask.asc"),
        field_to_raster(grid, observation_mask(grid, obs_locations,
                                               cfg.predict.mask_radius)));
  }
  if (cfg.predict.summaries) {
    write_summaries(cfg, out, grid, rec, cfg.predict.locations,
                    cfg.predict.level, true, true);
  }
  return 0;
}

int cmd_score(const RunConfig& cfg, OutputDir& out) {
  const RegularGrid grid = cfg.make_grid();
  if (!cfg.has_score) {
    throw ConfigError("score needs a 'score' section");
  }
  const Dataset data = load_dataset(cfg);
  const ObservationModel obs = make_obs(cfg, grid, data);
  const HoldoutResult res =
      holdout_compare(grid, obs, cfg.score.first, cfg.score.second,
                      cfg.score.repetitions, cfg.score.holdout_frac, cfg.seed,
                      cfg.threads);
  {
    std::ofstream sf(out.path("scores.csv"));
    write_csv_header(sf,
                     "repetition,status,n_test,crps_first,logscore_first,"
                     "crps_second,logscore_second");
    for (std::size_t r = 0; r < res.repetitions.size(); ++r) {
      const auto& rep = res.repetitions[r];
      sf << r << ",";
      if (rep.excluded) {
        sf << "excluded,,,,,\n";
        continue;
      }
      sf << "ok," << rep.first.n_test << ","
         << format_double(rep.first.crps) << ","
         << format_double(rep.first.logscore) << ","
         << format_double(rep.second.crps) << ","
         << format_double(rep.second.logscore) << "\n";
    }
  }
  json summary;
  summary["excluded"] = res.excluded_count;
  double c1 = 0, l1 = 0, c2 = 0, l2 = 0;
  int used = 0;
  for (const auto& rep : res.repetitions) {
    if (rep.excluded) continue;
    c1 += rep.first.crps;
    l1 += rep.first.logscore;
    c2 += rep.second.crps;
    l2 += rep.second.logscore;
    ++used;
  }
  if (used > 0) {
    summary["mean_crps_first"] = c1 / used;
    summary["mean_logscore_first"] = l1 / used;
    summary["mean_crps_second"] = c2 / used;
    summary["mean_logscore_second"] = l2 / used;
  }
  summary["repetitions_used"] = used;
  {
    std::ofstream jf(out.path("scores_summary.json"));
    jf << summary.dump(2) << "\n";
  }
  return 0;
}

int cmd_summarize(const RunConfig& cfg, OutputDir& out) {
  const RegularGrid grid = cfg.make_grid();
  if (!cfg.has_summarize) {
    throw ConfigError("summarize needs a 'summarize' section");
  }
  const ModelRecord rec = load_model(cfg.summarize.model_file);
  require_grid_match(rec, grid);
  write_summaries(cfg, out, grid, rec, cfg.summarize.locations,
                  cfg.summarize.level, cfg.summarize.approximate,
                  cfg.summarize.exact);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-stationary spatial field modelling on SPDE-driven "
               "Gaussian Markov random fields"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> threads_override;

  const std::vector<std::string> names = {"simulate", "fit",   "cv",
                                          "predict",  "score", "summarize"};
  std::vector<CLI::App*> subs;
  for (const auto& name : names) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "config file (JSON)")
        ->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    std::uint64_t* seed_slot = nullptr;
    (void)seed_slot;
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { seed_override = s; },
        "override the config seed");
    sub->add_option_function<int>(
        "--threads", [&](int t) { threads_override = t; },
        "override the config thread count");
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = load_config(config_path);
    if (seed_override) cfg.seed = *seed_override;
    if (threads_override) cfg.threads = *threads_override;
    cfg.model.seed = cfg.seed;
    cfg.model.threads = cfg.threads;
    cfg.score.first.seed = cfg.seed;
    cfg.score.second.seed = cfg.seed;
    cfg.score.first.threads = cfg.threads;
    cfg.score.second.threads = cfg.threads;

    OutputDir out(out_dir);
    int rc = 1;
    try {
      if (subs[0]->parsed()) rc = cmd_simulate(cfg, out);
      if (subs[1]->parsed()) rc = cmd_fit(cfg, out);
      if (subs[2]->parsed()) rc = cmd_cv(cfg, out);
      if (subs[3]->parsed()) rc = cmd_predict(cfg, out);
      if (subs[4]->parsed()) rc = cmd_score(cfg, out);
      if (subs[5]->parsed()) rc = cmd_summarize(cfg, out);
    } catch (...) {
      out.mark_failed();
      throw;
    }
    if (rc != 0) out.mark_failed();
    return rc;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
