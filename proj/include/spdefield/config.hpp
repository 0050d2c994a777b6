#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "spdefield/grid.hpp"
#include "spdefield/inference.hpp"

namespace spdefield {

// Parsed and schema-validated run configuration.  Unknown keys anywhere in
// the file are rejected.
struct RunConfig {
  int version = 1;
  std::uint64_t seed = 0;
  int threads = 1;

  double a1 = 0.0, b1 = 1.0, a2 = 0.0, b2 = 1.0;
  int m = 2, n = 2;

  FitConfig model;  // kind, basis, log_tau, optimizer, tau_beta below
  double tau_beta = 1e-4;

  struct Data {
    std::string format = "observations";  // "stations" | "observations"
    std::string path;
    std::string elevation_raster;  // optional; adds elev covariate at cells
  } data;
  bool has_data = false;

  struct Simulate {
    std::vector<double> alpha1, alpha2, alpha3, alpha4;  // default: zeros
    double log_tau_noise = 0.0;
    std::vector<double> beta{0.0};
    int n_obs = 0;
    std::vector<Point> locations;  // optional explicit locations
  } simulate;
  bool has_simulate = false;

  struct Predict {
    std::string model_file = "model.txt";
    bool include_noise = false;
    bool mask_enabled = false;
    double mask_radius = 1.0;
    bool summaries = false;
    std::vector<std::string> covariate_rasters;
    std::vector<Point> locations;  // for correlation contours
    double level = 0.7;
  } predict;
  bool has_predict = false;

  struct Score {
    int repetitions = 20;
    double holdout_frac = 0.2;
    FitConfig first;
    FitConfig second;
  } score;
  bool has_score = false;

  struct Summarize {
    std::string model_file = "model.txt";
    std::vector<Point> locations;
    double level = 0.7;
    bool exact = true;
    bool approximate = true;
  } summarize;
  bool has_summarize = false;

  RegularGrid make_grid() const { return {a1, b1, a2, b2, m, n}; }
};

// Loads and validates a config file.  Throws ConfigError with the offending
// key or value.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const nlohmann::json& j);

}  // namespace spdefield
