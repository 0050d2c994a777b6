#include "spdefield/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "spdefield/errors.hpp"

namespace spdefield {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) {
    throw ConfigError(where + " must be an object");
  }
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

double get_number(const json& obj, const std::string& where,
                  const std::string& key, std::optional<double> fallback = {}) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(where + " is missing required key '" + key + "'");
  }
  if (!obj[key].is_number()) {
    throw ConfigError(where + "." + key + " must be a number");
  }
  return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& where, const std::string& key,
            std::optional<int> fallback = {}) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(where + " is missing required key '" + key + "'");
  }
  if (!obj[key].is_number_integer()) {
    throw ConfigError(where + "." + key + " must be an integer");
  }
  return obj[key].get<int>();
}

std::string get_string(const json& obj, const std::string& where,
                       const std::string& key,
                       std::optional<std::string> fallback = {}) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(where + " is missing required key '" + key + "'");
  }
  if (!obj[key].is_string()) {
    throw ConfigError(where + "." + key + " must be a string");
  }
  return obj[key].get<std::string>();
}

std::vector<double> get_number_array(const json& obj, const std::string& where,
                                     const std::string& key) {
  if (!obj[key].is_array()) {
    throw ConfigError(where + "." + key + " must be an array of numbers");
  }
  std::vector<double> out;
  for (const auto& v : obj[key]) {
    if (!v.is_number()) {
      throw ConfigError(where + "." + key + " must contain only numbers");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<Point> get_points(const json& obj, const std::string& where,
                              const std::string& key) {
  if (!obj[key].is_array()) {
    throw ConfigError(where + "." + key + " must be an array of [x, y] pairs");
  }
  std::vector<Point> out;
  for (const auto& v : obj[key]) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() ||
        !v[1].is_number()) {
      throw ConfigError(where + "." + key +
                        " entries must be [x, y] number pairs");
    }
    out.push_back({v[0].get<double>(), v[1].get<double>()});
  }
  return out;
}

FitConfig parse_model(const json& obj, const std::string& where,
                      const LbfgsOptions& optimizer) {
  check_keys(obj, where, {"kind", "basis", "log_tau"});
  FitConfig fc;
  fc.optimizer = optimizer;
  const std::string kind = get_string(obj, where, "kind");
  if (kind == "stationary") {
    fc.kind = ModelKind::Stationary;
  } else if (kind == "nonstationary") {
    fc.kind = ModelKind::Nonstationary;
  } else {
    throw ConfigError(where + ".kind must be 'stationary' or 'nonstationary'");
  }
  if (obj.contains("basis")) {
    check_keys(obj["basis"], where + ".basis", {"k", "l"});
    fc.k = get_int(obj["basis"], where + ".basis", "k");
    fc.l = get_int(obj["basis"], where + ".basis", "l");
    if (fc.k < 1 || fc.l < 1) {
      throw ConfigError(where + ".basis sizes must be >= 1");
    }
  }
  if (obj.contains("log_tau")) {
    const auto taus = get_number_array(obj, where, "log_tau");
    if (taus.size() != 4) {
      throw ConfigError(where + ".log_tau must have exactly 4 entries");
    }
    for (int i = 0; i < 4; ++i) fc.log_tau[i] = taus[i];
  }
  return fc;
}

}  // namespace

RunConfig parse_config(const nlohmann::json& j) {
  check_keys(j, "config",
             {"version", "seed", "threads", "domain", "grid", "model",
              "optimizer", "cv", "data", "simulate", "predict", "score",
              "summarize"});
  RunConfig cfg;
  cfg.version = get_int(j, "config", "version", 1);
  if (cfg.version != 1) {
    throw ConfigError("unsupported config version " +
                      std::to_string(cfg.version));
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
      throw ConfigError("config.seed must be an integer");
    }
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  cfg.threads = get_int(j, "config", "threads", 1);
  if (cfg.threads < 1) throw ConfigError("config.threads must be >= 1");

  if (!j.contains("domain") || !j.contains("grid")) {
    throw ConfigError("config needs 'domain' and 'grid'");
  }
  check_keys(j["domain"], "domain", {"a1", "b1", "a2", "b2"});
  cfg.a1 = get_number(j["domain"], "domain", "a1");
  cfg.b1 = get_number(j["domain"], "domain", "b1");
  cfg.a2 = get_number(j["domain"], "domain", "a2");
  cfg.b2 = get_number(j["domain"], "domain", "b2");
  check_keys(j["grid"], "grid", {"m", "n"});
  cfg.m = get_int(j["grid"], "grid", "m");
  cfg.n = get_int(j["grid"], "grid", "n");

  LbfgsOptions opt;
  if (j.contains("optimizer")) {
    const json& o = j["optimizer"];
    check_keys(o, "optimizer", {"max_iter", "grad_tol", "obj_tol", "memory"});
    opt.max_iter = get_int(o, "optimizer", "max_iter", opt.max_iter);
    opt.grad_tol = get_number(o, "optimizer", "grad_tol", opt.grad_tol);
    opt.obj_tol = get_number(o, "optimizer", "obj_tol", opt.obj_tol);
    opt.memory = get_int(o, "optimizer", "memory", opt.memory);
  }

  cfg.tau_beta = 1e-4;
  if (j.contains("model")) {
    const json& mo = j["model"];
    check_keys(mo, "model", {"kind", "basis", "log_tau", "tau_beta"});
    json trimmed = mo;
    if (trimmed.contains("tau_beta")) trimmed.erase("tau_beta");
    cfg.model = parse_model(trimmed, "model", opt);
    cfg.tau_beta = get_number(mo, "model", "tau_beta", 1e-4);
    if (!(cfg.tau_beta > 0.0)) {
      throw ConfigError("model.tau_beta must be positive");
    }
  } else {
    cfg.model.optimizer = opt;
  }
  cfg.model.seed = cfg.seed;
  cfg.model.threads = cfg.threads;

  if (j.contains("cv")) {
    const json& c = j["cv"];
    check_keys(c, "cv", {"log_tau_grid", "full_factorial", "max_sweeps"});
    if (c.contains("log_tau_grid")) {
      cfg.model.cv_log_tau_grid = get_number_array(c, "cv", "log_tau_grid");
      if (cfg.model.cv_log_tau_grid.empty()) {
        throw ConfigError("cv.log_tau_grid must be non-empty");
      }
    }
    if (c.contains("full_factorial")) {
      if (!c["full_factorial"].is_boolean()) {
        throw ConfigError("cv.full_factorial must be a boolean");
      }
      cfg.model.cv_full_factorial = c["full_factorial"].get<bool>();
    }
    cfg.model.cv_max_sweeps = get_int(c, "cv", "max_sweeps", 3);
  }

  if (j.contains("data")) {
    cfg.has_data = true;
    const json& d = j["data"];
    check_keys(d, "data", {"format", "path", "elevation_raster"});
    cfg.data.format = get_string(d, "data", "format", "observations");
    if (cfg.data.format != "stations" && cfg.data.format != "observations") {
      throw ConfigError("data.format must be 'stations' or 'observations'");
    }
    cfg.data.path = get_string(d, "data", "path");
    cfg.data.elevation_raster =
        get_string(d, "data", "elevation_raster", std::string());
  }

  if (j.contains("simulate")) {
    cfg.has_simulate = true;
    const json& s = j["simulate"];
    check_keys(s, "simulate",
               {"alpha1", "alpha2", "alpha3", "alpha4", "log_tau_noise",
                "beta", "n_obs", "locations"});
    for (const char* key : {"alpha1", "alpha2", "alpha3", "alpha4"}) {
      if (s.contains(key)) {
        auto arr = get_number_array(s, "simulate", key);
        if (key == std::string("alpha1")) cfg.simulate.alpha1 = arr;
        if (key == std::string("alpha2")) cfg.simulate.alpha2 = arr;
        if (key == std::string("alpha3")) cfg.simulate.alpha3 = arr;
        if (key == std::string("alpha4")) cfg.simulate.alpha4 = arr;
      }
    }
    cfg.simulate.log_tau_noise =
        get_number(s, "simulate", "log_tau_noise", 0.0);
    if (s.contains("beta")) {
      cfg.simulate.beta = get_number_array(s, "simulate", "beta");
    }
    cfg.simulate.n_obs = get_int(s, "simulate", "n_obs", 0);
    if (s.contains("locations")) {
      cfg.simulate.locations = get_points(s, "simulate", "locations");
    }
  }

  if (j.contains("predict")) {
    cfg.has_predict = true;
    const json& p = j["predict"];
    check_keys(p, "predict",
               {"model_file", "include_noise", "mask", "summaries",
                "covariate_rasters", "locations", "level"});
    cfg.predict.model_file =
        get_string(p, "predict", "model_file", "model.txt");
    if (p.contains("include_noise")) {
      if (!p["include_noise"].is_boolean()) {
        throw ConfigError("predict.include_noise must be a boolean");
      }
      cfg.predict.include_noise = p["include_noise"].get<bool>();
    }
    if (p.contains("mask")) {
      check_keys(p["mask"], "predict.mask", {"enabled", "radius"});
      if (p["mask"].contains("enabled")) {
        if (!p["mask"]["enabled"].is_boolean()) {
          throw ConfigError("predict.mask.enabled must be a boolean");
        }
        cfg.predict.mask_enabled = p["mask"]["enabled"].get<bool>();
      }
      cfg.predict.mask_radius =
          get_number(p["mask"], "predict.mask", "radius", 1.0);
    }
    if (p.contains("summaries")) {
      if (!p["summaries"].is_boolean()) {
        throw ConfigError("predict.summaries must be a boolean");
      }
      cfg.predict.summaries = p["summaries"].get<bool>();
    }
    if (p.contains("covariate_rasters")) {
      if (!p["covariate_rasters"].is_array()) {
        throw ConfigError("predict.covariate_rasters must be an array");
      }
      for (const auto& v : p["covariate_rasters"]) {
        if (!v.is_string()) {
          throw ConfigError("predict.covariate_rasters must hold strings");
        }
        cfg.predict.covariate_rasters.push_back(v.get<std::string>());
      }
    }
    if (p.contains("locations")) {
      cfg.predict.locations = get_points(p, "predict", "locations");
    }
    cfg.predict.level = get_number(p, "predict", "level", 0.7);
  }

  if (j.contains("score")) {
    cfg.has_score = true;
    const json& s = j["score"];
    check_keys(s, "score", {"repetitions", "holdout_frac", "arms"});
    cfg.score.repetitions = get_int(s, "score", "repetitions", 20);
    cfg.score.holdout_frac = get_number(s, "score", "holdout_frac", 0.2);
    if (!s.contains("arms") || !s["arms"].is_object()) {
      throw ConfigError("score.arms must be an object");
    }
    check_keys(s["arms"], "score.arms", {"first", "second"});
    if (!s["arms"].contains("first") || !s["arms"].contains("second")) {
      throw ConfigError("score.arms needs 'first' and 'second'");
    }
    cfg.score.first = parse_model(s["arms"]["first"], "score.arms.first", opt);
    cfg.score.second =
        parse_model(s["arms"]["second"], "score.arms.second", opt);
    cfg.score.first.seed = cfg.seed;
    cfg.score.second.seed = cfg.seed;
    cfg.score.first.threads = cfg.threads;
    cfg.score.second.threads = cfg.threads;
  }

  if (j.contains("summarize")) {
    cfg.has_summarize = true;
    const json& s = j["summarize"];
    check_keys(s, "summarize",
               {"model_file", "locations", "level", "exact", "approximate"});
    cfg.summarize.model_file =
        get_string(s, "summarize", "model_file", "model.txt");
    if (s.contains("locations")) {
      cfg.summarize.locations = get_points(s, "summarize", "locations");
    }
    cfg.summarize.level = get_number(s, "summarize", "level", 0.7);
    for (const char* key : {"exact", "approximate"}) {
      if (s.contains(key)) {
        if (!s[key].is_boolean()) {
          throw ConfigError(std::string("summarize.") + key +
                            " must be a boolean");
        }
        const bool v = s[key].get<bool>();
        if (key == std::string("exact")) cfg.summarize.exact = v;
        if (key == std::string("approximate")) cfg.summarize.approximate = v;
      }
    }
  }

  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return parse_config(j);
}

}  // namespace spdefield
