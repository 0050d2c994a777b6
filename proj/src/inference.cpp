#include "spdefield/inference.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "spdefield/errors.hpp"
#include "spdefield/parallel.hpp"
#include "spdefield/rng.hpp"

namespace spdefield {

SpdeGmrfModel model_for(const RegularGrid& grid, const FitConfig& config) {
  const bool stationary = config.kind == ModelKind::Stationary;
  return make_model(grid, config.basis_k(), config.basis_l(), config.log_tau,
                    stationary);
}

FitResult fit_map(const RegularGrid& grid, const ObservationModel& obs,
                  const FitConfig& config, bool compute_sd) {
  if (obs.N() == 0) {
    throw ParameterError("fit_map requires at least one observation");
  }
  const SpdeGmrfModel model = model_for(grid, config);
  PosteriorEvaluator eval(model, obs);

  Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(model.dim());
  // v = 0 is a critical point of the likelihood (H is even in v), so the
  // anisotropy weights start at a small constant offset instead of zero.
  const int kl = model.kl();
  theta0.segment(2 * kl, 2 * kl).setConstant(0.01);
  const double var_y =
      (obs.y().array() - obs.y().mean()).square().sum() /
      std::max(1, obs.N() - 1);
  theta0[model.dim() - 1] = var_y > 0.0 ? std::log(2.0 / var_y) : 0.0;

  const auto vg = [&eval](const Eigen::VectorXd& x, double& v,
                          Eigen::VectorXd& g) {
    return eval.value_and_gradient(x, v, g);
  };
  const auto v = [&eval](const Eigen::VectorXd& x, double& val) {
    return eval.value(x, val);
  };
  const LbfgsResult opt =
      lbfgs_maximize(vg, v, std::move(theta0), config.optimizer);

  FitResult res;
  res.kind = config.kind;
  res.k = config.basis_k();
  res.l = config.basis_l();
  res.log_tau = config.log_tau;
  res.theta = opt.x;
  res.log_posterior = opt.f;
  res.iterations = opt.iterations;
  res.converged = opt.converged;
  res.message = opt.message;
  if (compute_sd && opt.converged) {
    res.sd = observed_information_sd(
        [&eval](const Eigen::VectorXd& x) { return eval.gradient(x); },
        res.theta);
  }
  return res;
}

std::optional<Eigen::VectorXd> observed_information_sd(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad_fn,
    const Eigen::VectorXd& theta, double step) {
  const int d = static_cast<int>(theta.size());
  Eigen::MatrixXd H(d, d);
  for (int j = 0; j < d; ++j) {
    Eigen::VectorXd tp = theta;
    Eigen::VectorXd tm = theta;
    tp[j] += step;
    tm[j] -= step;
    H.col(j) = (grad_fn(tp) - grad_fn(tm)) / (2.0 * step);
  }
  const Eigen::MatrixXd info = -0.5 * (H + H.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Eigen::MatrixXd cov =
      llt.solve(Eigen::MatrixXd::Identity(d, d));
  Eigen::VectorXd sd(d);
  for (int j = 0; j < d; ++j) {
    if (cov(j, j) <= 0.0) return std::nullopt;
    sd[j] = std::sqrt(cov(j, j));
  }
  return sd;
}

std::vector<std::array<double, 4>> enumerate_tau_grid(
    const std::vector<double>& values) {
  if (values.empty()) {
    throw ParameterError("tau grid must be non-empty");
  }
  std::vector<std::array<double, 4>> out;
  out.reserve(values.size() * values.size() * values.size() * values.size());
  for (double a : values)
    for (double b : values)
      for (double c : values)
        for (double d : values) out.push_back({a, b, c, d});
  return out;
}

namespace {

// Seeded 5-way random partition: fold id per canonical observation row.
std::vector<std::vector<int>> cv_partition(int N, std::uint64_t seed) {
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed, /*stream=*/0x5f01d);
  rng.shuffle(order);
  std::vector<std::vector<int>> folds(5);
  for (int i = 0; i < N; ++i) folds[i % 5].push_back(order[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

struct FoldData {
  ObservationModel train;
  // test rows are implied: full = train + fold
};

// Mean negative log predictive density over the 5 folds for one tuple.
CvRow evaluate_tuple(const RegularGrid& grid, const ObservationModel& obs,
                     const FitConfig& base,
                     const std::vector<std::vector<int>>& folds,
                     const std::array<double, 4>& tuple) {
  CvRow row;
  row.log_tau = tuple;
  FitConfig config = base;
  config.log_tau = tuple;
  double acc = 0.0;
  for (const auto& fold : folds) {
    std::vector<char> in_fold(obs.N(), 0);
    for (int r : fold) in_fold[r] = 1;
    std::vector<int> train_rows;
    train_rows.reserve(obs.N() - fold.size());
    for (int r = 0; r < obs.N(); ++r) {
      if (!in_fold[r]) train_rows.push_back(r);
    }
    const ObservationModel train = obs.subset(train_rows);
    try {
      const FitResult fit =
          fit_map(grid, train, config, /*compute_sd=*/false);
      if (!fit.converged) {
        row.failed = true;
        return row;
      }
      const SpdeGmrfModel model = model_for(grid, config);
      PosteriorEvaluator full_eval(model, obs);
      PosteriorEvaluator train_eval(model, train);
      const double log_pred = full_eval.marginal_loglik(fit.theta) -
                              train_eval.marginal_loglik(fit.theta);
      acc += log_pred;
    } catch (const std::exception&) {
      row.failed = true;
      return row;
    }
  }
  row.score = -acc / 5.0;
  return row;
}

bool tuple_less(const std::array<double, 4>& a,
                const std::array<double, 4>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

CvResult cross_validate(const RegularGrid& grid, const ObservationModel& obs,
                        const FitConfig& config) {
  if (config.cv_log_tau_grid.empty()) {
    throw ParameterError("cross validation needs a non-empty tau grid");
  }
  if (obs.N() < 5) {
    throw ParameterError("cross validation needs at least 5 observations");
  }
  const auto folds = cv_partition(obs.N(), config.seed);

  std::map<std::array<double, 4>, CvRow> cache;
  auto evaluate_batch = [&](const std::vector<std::array<double, 4>>& batch) {
    std::vector<std::array<double, 4>> todo;
    for (const auto& t : batch) {
      if (!cache.count(t)) todo.push_back(t);
    }
    std::vector<CvRow> rows(todo.size());
    parallel_for(todo.size(), config.threads, [&](std::size_t i) {
      rows[i] = evaluate_tuple(grid, obs, config, folds, todo[i]);
    });
    for (std::size_t i = 0; i < todo.size(); ++i) cache[todo[i]] = rows[i];
  };

  auto best_of = [&]() {
    std::array<double, 4> best{};
    bool have = false;
    double best_score = 0.0;
    for (const auto& [tuple, row] : cache) {  // map order = lexicographic
      if (row.failed) continue;
      if (!have || row.score < best_score) {
        have = true;
        best = tuple;
        best_score = row.score;
      }
    }
    if (!have) {
      throw ParameterError("every cross-validation tuple failed");
    }
    return best;
  };

  const auto& values = config.cv_log_tau_grid;
  if (config.cv_full_factorial || values.size() == 1) {
    evaluate_batch(enumerate_tau_grid(values));
  } else {
    // Coordinate-descent pass: sweep each coordinate over the grid,
    // keeping the others fixed, until a sweep leaves the tuple unchanged.
    std::array<double, 4> current = {values[0], values[0], values[0],
                                     values[0]};
    for (int sweep = 0; sweep < config.cv_max_sweeps; ++sweep) {
      const std::array<double, 4> before = current;
      for (int coord = 0; coord < 4; ++coord) {
        std::vector<std::array<double, 4>> batch;
        for (double v : values) {
          auto t = current;
          t[coord] = v;
          batch.push_back(t);
        }
        evaluate_batch(batch);
        double best_score = 0.0;
        bool have = false;
        for (const auto& t : batch) {
          const CvRow& row = cache[t];
          if (row.failed) continue;
          if (!have || row.score < best_score ||
              (row.score == best_score && tuple_less(t, current))) {
            have = true;
            best_score = row.score;
            current = t;
          }
        }
      }
      if (current == before) break;
    }
  }

  CvResult res;
  res.seed = config.seed;
  res.best = best_of();
  res.table.reserve(cache.size());
  for (const auto& [tuple, row] : cache) res.table.push_back(row);
  return res;
}

}  // namespace spdefield
