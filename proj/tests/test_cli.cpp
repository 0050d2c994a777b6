#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spdefield/data_io.hpp"
#include "spdefield/grid.hpp"

using namespace spdefield;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("spdefield_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CLI_BINARY_PATH) + " " + args +
                          " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& path) {
  std::ifstream in(path);
  int n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

std::string sim_config(double vx = 0.0, int n_obs = 250,
                       const char* extra_model = "\"kind\": \"stationary\"") {
  std::ostringstream ss;
  ss << R"({
  "version": 1,
  "seed": 42,
  "threads": 2,
  "domain": {"a1": 0.0, "b1": 16.0, "a2": 0.0, "b2": 8.0},
  "grid": {"m": 64, "n": 32},
  "model": {)"
     << extra_model << R"(},
  "simulate": {
    "alpha3": [)"
     << vx << R"(],
    "log_tau_noise": 3.7,
    "beta": [1.0],
    "n_obs": )"
     << n_obs << R"(
  }
})";
  return ss.str();
}

// Empirical lag-correlation of a field raster along one axis.
double axis_correlation(const Raster& r, int lag, bool along_x) {
  double mean = 0.0;
  for (double v : r.values) mean += v;
  mean /= r.values.size();
  double num = 0.0, den = 0.0;
  for (int row = 0; row < r.nrows; ++row) {
    for (int col = 0; col < r.ncols; ++col) {
      const double a = r.at(col, row) - mean;
      den += a * a;
      const int c2 = col + (along_x ? lag : 0);
      const int r2 = row + (along_x ? 0 : lag);
      if (c2 < r.ncols && r2 < r.nrows) {
        num += a * (r.at(c2, r2) - mean);
      }
    }
  }
  // normalized with matching counts
  int pairs = along_x ? (r.ncols - lag) * r.nrows : r.ncols * (r.nrows - lag);
  int total = r.ncols * r.nrows;
  return (num / pairs) / (den / total);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate is byte-reproducible for a fixed seed") {
  TempDir tmp;
  write_file(tmp.file("sim.json"), sim_config());
  REQUIRE(run_cli("simulate --config " + tmp.file("sim.json") + " --out " +
                  tmp.file("a")) == 0);
  REQUIRE(run_cli("simulate --config " + tmp.file("sim.json") + " --out " +
                  tmp.file("b")) == 0);
  CHECK(slurp(tmp.file("a") + "/field.asc") ==
        slurp(tmp.file("b") + "/field.asc"));
  CHECK(slurp(tmp.file("a") + "/observations.csv") ==
        slurp(tmp.file("b") + "/observations.csv"));
  CHECK(slurp(tmp.file("a") + "/truth.json") ==
        slurp(tmp.file("b") + "/truth.json"));
}

TEST_CASE("fit emits a five-row parameter table and is reproducible") {
  TempDir tmp;
  write_file(tmp.file("sim.json"), sim_config());
  REQUIRE(run_cli("simulate --config " + tmp.file("sim.json") + " --out " +
                  tmp.file("sim")) == 0);
  const std::string fit_cfg = R"({
  "version": 1,
  "seed": 7,
  "threads": 2,
  "domain": {"a1": 0.0, "b1": 16.0, "a2": 0.0, "b2": 8.0},
  "grid": {"m": 64, "n": 32},
  "model": {"kind": "stationary"},
  "data": {"format": "observations", "path": ")" +
                              tmp.file("sim") + R"(/observations.csv"}
})";
  write_file(tmp.file("fit.json"), fit_cfg);
  REQUIRE(run_cli("fit --config " + tmp.file("fit.json") + " --out " +
                  tmp.file("f1")) == 0);
  REQUIRE(run_cli("fit --config " + tmp.file("fit.json") + " --out " +
                  tmp.file("f2")) == 0);
  // header + 5 parameter rows (Table-1 shape)
  CHECK(count_lines(tmp.file("f1") + "/parameters.csv") == 6);
  CHECK(slurp(tmp.file("f1") + "/parameters.csv") ==
        slurp(tmp.file("f2") + "/parameters.csv"));
  CHECK(slurp(tmp.file("f1") + "/model.txt") ==
        slurp(tmp.file("f2") + "/model.txt"));
}

TEST_CASE("predict with no observations yields a zero mean raster") {
  TempDir tmp;
  write_file(tmp.file("sim.json"), sim_config());
  REQUIRE(run_cli("simulate --config " + tmp.file("sim.json") + " --out " +
                  tmp.file("sim")) == 0);
  const std::string fit_cfg = R"({
  "version": 1, "seed": 7,
  "domain": {"a1": 0.0, "b1": 16.0, "a2": 0.0, "b2": 8.0},
  "grid": {"m": 64, "n": 32},
  "model": {"kind": "stationary"},
  "data": {"format": "observations", "path": ")" +
                              tmp.file("sim") + R"(/observations.csv"}
})";
  write_file(tmp.file("fit.json"), fit_cfg);
  REQUIRE(run_cli("fit --config " + tmp.file("fit.json") + " --out " +
                  tmp.file("fit")) == 0);
  const std::string pred_cfg = R"({
  "version": 1, "seed": 7,
  "domain": {"a1": 0.0, "b1": 16.0, "a2": 0.0, "b2": 8.0},
  "grid": {"m": 64, "n": 32},
  "predict": {"model_file": ")" +
                               tmp.file("fit") + R"(/model.txt"}
})";
  write_file(tmp.file("pred.json"), pred_cfg);
  REQUIRE(run_cli("predict --config " + tmp.file("pred.json") + " --out " +
                  tmp.file("pred")) == 0);
  const Raster mean = read_esri_ascii(tmp.file("pred") + "/pred_mean.asc");
  for (double v : mean.values) CHECK(v == 0.0);
  const Raster sd = read_esri_ascii(tmp.file("pred") + "/pred_sd.asc");
  for (double v : sd.values) CHECK(v > 0.0);
}

TEST_CASE("score with identical arms gives identical per-repetition scores") {
  TempDir tmp;
  write_file(tmp.file("sim.json"), sim_config());
  REQUIRE(run_cli("simulate --config " + tmp.file("sim.json") + " --out " +
                  tmp.file("sim")) == 0);
  const std::string score_cfg = R"({
  "version": 1, "seed": 3, "threads": 2,
  "domain": {"a1": 0.0, "b1": 16.0, "a2": 0.0, "b2": 8.0},
  "grid": {"m": 64, "n": 32},
  "data": {"format": "observations", "path": ")" +
                                tmp.file("sim") + R"(/observations.csv"},
  "score": {
    "repetitions": 2,
    "holdout_frac": 0.2,
    "arms": {
      "first": {"kind": "stationary"},
      "second": {"kind": "stationary"}
    }
  }
})";
  write_file(tmp.file("score.json"), score_cfg);
  REQUIRE(run_cli("score --config " + tmp.file("score.json") + " --out " +
                  tmp.file("sc")) == 0);
  std::ifstream in(tmp.file("sc") + "/scores.csv");
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    REQUIRE(f.size() == 7);
    CHECK(f[1] == "ok");
    CHECK(f[3] == f[5]);  // crps identical
    CHECK(f[4] == f[6]);  // logscore identical
  }
}

TEST_CASE("simulated isotropic field has isotropic correlation") {
  TempDir tmp;
  write_file(tmp.file("sim.json"), sim_config(0.0, 0));
  REQUIRE(run_cli("simulate --config " + tmp.file("sim.json") + " --out " +
                  tmp.file("iso")) == 0);
  const Raster field = read_esri_ascii(tmp.file("iso") + "/field.asc");
  // kappa = 1 and cell 0.25: range ~ sqrt(8) ~ 11 cells.  One realization
  // on a 64x32 grid carries Monte-Carlo noise, so tolerances are loose.
  for (int lag : {2, 4, 8}) {
    const double cx = axis_correlation(field, lag, true);
    const double cy = axis_correlation(field, lag, false);
    CHECK(std::abs(cx - cy) < 0.2);
  }
}

TEST_CASE("anisotropy stretches correlation along v") {
  TempDir tmp;
  write_file(tmp.file("sim.json"), sim_config(2.0, 0));
  REQUIRE(run_cli("simulate --config " + tmp.file("sim.json") + " --out " +
                  tmp.file("ani")) == 0);
  const Raster field = read_esri_ascii(tmp.file("ani") + "/field.asc");
  // v = (2, 0): range along x exceeds range along y
  for (int lag : {4, 8}) {
    CHECK(axis_correlation(field, lag, true) >
          axis_correlation(field, lag, false));
  }
}

TEST_CASE("cv command writes the table and selected tuple") {
  TempDir tmp;
  write_file(tmp.file("sim.json"), sim_config(0.0, 120));
  REQUIRE(run_cli("simulate --config " + tmp.file("sim.json") + " --out " +
                  tmp.file("sim")) == 0);
  const std::string cv_cfg = R"({
  "version": 1, "seed": 5, "threads": 2,
  "domain": {"a1": 0.0, "b1": 16.0, "a2": 0.0, "b2": 8.0},
  "grid": {"m": 32, "n": 16},
  "model": {"kind": "nonstationary", "basis": {"k": 2, "l": 2}},
  "cv": {"log_tau_grid": [2.0, 6.0], "max_sweeps": 1},
  "data": {"format": "observations", "path": ")" +
                             tmp.file("sim") + R"(/observations.csv"}
})";
  write_file(tmp.file("cv.json"), cv_cfg);
  REQUIRE(run_cli("cv --config " + tmp.file("cv.json") + " --out " +
                  tmp.file("cv")) == 0);
  CHECK(count_lines(tmp.file("cv") + "/cv_table.csv") >= 2);
  const std::string sel = slurp(tmp.file("cv") + "/cv_selected.json");
  CHECK(sel.find("log_tau") != std::string::npos);
}

TEST_CASE("lockfile prevents concurrent runs into one directory") {
  TempDir tmp;
  write_file(tmp.file("sim.json"), sim_config());
  fs::create_directories(tmp.file("out"));
  write_file(tmp.file("out") + "/.lock", "");
  CHECK(run_cli("simulate --config " + tmp.file("sim.json") + " --out " +
                tmp.file("out")) != 0);
}

TEST_CASE("unknown config keys are rejected") {
  TempDir tmp;
  write_file(tmp.file("bad.json"), R"({
  "version": 1,
  "domain": {"a1": 0, "b1": 1, "a2": 0, "b2": 1},
  "grid": {"m": 4, "n": 4},
  "typo_key": true
})");
  CHECK(run_cli("simulate --config " + tmp.file("bad.json") + " --out " +
                tmp.file("o")) != 0);
}

TEST_CASE("failed runs leave no partial outputs") {
  TempDir tmp;
  // fit with a missing data file fails after the lock is taken
  write_file(tmp.file("fit.json"), R"({
  "version": 1,
  "domain": {"a1": 0, "b1": 1, "a2": 0, "b2": 1},
  "grid": {"m": 4, "n": 4},
  "model": {"kind": "stationary"},
  "data": {"format": "observations", "path": "/nonexistent/file.csv"}
})");
  CHECK(run_cli("fit --config " + tmp.file("fit.json") + " --out " +
                tmp.file("o")) != 0);
  CHECK(!fs::exists(tmp.file("o") + "/model.txt"));
  CHECK(!fs::exists(tmp.file("o") + "/.lock"));
}

}  // TEST_SUITE
