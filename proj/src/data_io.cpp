#include "spdefield/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "spdefield/errors.hpp"

namespace spdefield {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_double(const std::string& s, int line_no, const char* what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw IoError("line " + std::to_string(line_no) + ": cannot parse " +
                  what + " from '" + s + "'");
  }
  return v;
}

bool is_missing(const std::string& s, int line_no) {
  if (s.empty()) return true;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw IoError("line " + std::to_string(line_no) +
                  ": cannot parse month value '" + s + "'");
  }
  return v <= -999.0;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Dataset ingest_stations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open station file " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty station file " + path);
  const std::vector<std::string> header = split_csv(line);
  const std::vector<std::string> required = {"id",  "lon", "lat", "elev_m",
                                             "m01", "m02", "m03", "m04",
                                             "m05", "m06", "m07", "m08",
                                             "m09", "m10", "m11", "m12"};
  if (header.size() < required.size()) {
    throw IoError("station file header needs id,lon,lat,elev_m,m01..m12");
  }
  for (std::size_t c = 0; c < required.size(); ++c) {
    if (header[c] != required[c]) {
      throw IoError("station file header column " + std::to_string(c + 1) +
                    " must be '" + required[c] + "', got '" + header[c] + "'");
    }
  }
  std::vector<std::string> extra_names(header.begin() + required.size(),
                                       header.end());

  std::vector<StationRecord> kept;
  Dataset data;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != header.size()) {
      throw IoError("line " + std::to_string(line_no) + ": expected " +
                    std::to_string(header.size()) + " fields, got " +
                    std::to_string(f.size()));
    }
    StationRecord rec;
    rec.id = f[0];
    rec.lon = parse_double(f[1], line_no, "lon");
    rec.lat = parse_double(f[2], line_no, "lat");
    rec.elevation_km = parse_double(f[3], line_no, "elev_m") / 1000.0;
    for (int mth = 0; mth < 12; ++mth) {
      const std::string& s = f[4 + mth];
      if (!is_missing(s, line_no)) {
        rec.monthly[mth] = parse_double(s, line_no, "month value");
      }
    }
    for (std::size_t c = required.size(); c < f.size(); ++c) {
      rec.extra.push_back(parse_double(f[c], line_no, "extra covariate"));
    }
    if (!rec.complete()) {
      ++data.excluded_missing;
      continue;
    }
    double total = 0.0;
    for (const auto& m : rec.monthly) total += *m;
    if (!(total > 0.0)) {
      ++data.excluded_zero;
      continue;
    }
    kept.push_back(std::move(rec));
  }
  if (kept.empty()) {
    throw IoError("no usable stations in " + path);
  }
  const int N = static_cast<int>(kept.size());
  const int p = 2 + static_cast<int>(extra_names.size());
  data.locations.resize(N);
  data.y.resize(N);
  data.X.resize(N, p);
  data.covariate_names = {"intercept", "elev_km"};
  data.covariate_names.insert(data.covariate_names.end(), extra_names.begin(),
                              extra_names.end());
  for (int i = 0; i < N; ++i) {
    const StationRecord& rec = kept[i];
    data.locations[i] = {rec.lon, rec.lat};
    double total = 0.0;
    for (const auto& m : rec.monthly) total += *m;
    data.y[i] = std::log(total);
    data.X(i, 0) = 1.0;
    data.X(i, 1) = rec.elevation_km;
    for (std::size_t c = 0; c < rec.extra.size(); ++c) {
      data.X(i, 2 + static_cast<int>(c)) = rec.extra[c];
    }
  }
  return data;
}

Dataset read_observations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open observation file " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty observation file " + path);
  const std::vector<std::string> header = split_csv(line);
  if (header.size() < 4 || header[0] != "id" || header[1] != "lon" ||
      header[2] != "lat" || header[3] != "y") {
    throw IoError("observation file header must start id,lon,lat,y");
  }
  std::vector<std::string> extra_names(header.begin() + 4, header.end());

  std::vector<Point> locs;
  std::vector<double> ys;
  std::vector<std::vector<double>> extras;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != header.size()) {
      throw IoError("line " + std::to_string(line_no) + ": expected " +
                    std::to_string(header.size()) + " fields, got " +
                    std::to_string(f.size()));
    }
    locs.push_back({parse_double(f[1], line_no, "lon"),
                    parse_double(f[2], line_no, "lat")});
    ys.push_back(parse_double(f[3], line_no, "y"));
    std::vector<double> row;
    for (std::size_t c = 4; c < f.size(); ++c) {
      row.push_back(parse_double(f[c], line_no, "covariate"));
    }
    extras.push_back(std::move(row));
  }
  if (locs.empty()) throw IoError("no observations in " + path);

  Dataset data;
  const int N = static_cast<int>(locs.size());
  const int p = 1 + static_cast<int>(extra_names.size());
  data.locations = std::move(locs);
  data.y.resize(N);
  data.X.resize(N, p);
  data.covariate_names = {"intercept"};
  data.covariate_names.insert(data.covariate_names.end(), extra_names.begin(),
                              extra_names.end());
  for (int i = 0; i < N; ++i) {
    data.y[i] = ys[i];
    data.X(i, 0) = 1.0;
    for (int c = 1; c < p; ++c) data.X(i, c) = extras[i][c - 1];
  }
  return data;
}

void write_observations(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "id,lon,lat,y";
  for (std::size_t c = 1; c < data.covariate_names.size(); ++c) {
    out << "," << data.covariate_names[c];
  }
  out << "\n";
  for (int i = 0; i < data.y.size(); ++i) {
    out << i << "," << format_double(data.locations[i].x) << ","
        << format_double(data.locations[i].y) << ","
        << format_double(data.y[i]);
    for (int c = 1; c < data.X.cols(); ++c) {
      out << "," << format_double(data.X(i, c));
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

Raster read_esri_ascii(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open raster " + path);
  Raster r;
  bool have_cellsize = false;
  std::string key;
  // Header: lowercase keys, order as written by this library or GDAL.
  for (;;) {
    const auto pos = in.tellg();
    if (!(in >> key)) throw IoError("truncated raster header in " + path);
    std::string lower = key;
    std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
    if (lower == "ncols") {
      in >> r.ncols;
    } else if (lower == "nrows") {
      in >> r.nrows;
    } else if (lower == "xllcorner") {
      in >> r.xll;
    } else if (lower == "yllcorner") {
      in >> r.yll;
    } else if (lower == "cellsize") {
      in >> r.dx;
      r.dy = r.dx;
      have_cellsize = true;
    } else if (lower == "dx") {
      in >> r.dx;
      have_cellsize = true;
    } else if (lower == "dy") {
      in >> r.dy;
    } else if (lower == "nodata_value") {
      in >> r.nodata;
    } else {
      in.seekg(pos);  // first value reached
      break;
    }
    if (!in) throw IoError("malformed raster header in " + path);
  }
  if (r.ncols < 1 || r.nrows < 1 || !have_cellsize) {
    throw IoError("raster header incomplete in " + path);
  }
  r.values.resize(static_cast<std::size_t>(r.ncols) * r.nrows);
  for (auto& v : r.values) {
    if (!(in >> v)) {
      throw IoError("raster " + path + " has fewer values than ncols*nrows");
    }
  }
  return r;
}

void write_esri_ascii(const std::string& path, const Raster& raster) {
  if (static_cast<std::size_t>(raster.ncols) * raster.nrows !=
      raster.values.size()) {
    throw DimensionError("raster value count does not match dimensions");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "ncols " << raster.ncols << "\n";
  out << "nrows " << raster.nrows << "\n";
  out << "xllcorner " << format_double(raster.xll) << "\n";
  out << "yllcorner " << format_double(raster.yll) << "\n";
  if (raster.dx == raster.dy) {
    out << "cellsize " << format_double(raster.dx) << "\n";
  } else {
    out << "dx " << format_double(raster.dx) << "\n";
    out << "dy " << format_double(raster.dy) << "\n";
  }
  out << "NODATA_value " << format_double(raster.nodata) << "\n";
  for (int row = 0; row < raster.nrows; ++row) {
    for (int col = 0; col < raster.ncols; ++col) {
      if (col) out << " ";
      out << format_double(
          raster.values[static_cast<std::size_t>(row) * raster.ncols + col]);
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

double bilinear(const Raster& raster, Point s) {
  const double gx = (s.x - raster.xll) / raster.dx - 0.5;
  const double gy = (s.y - raster.yll) / raster.dy - 0.5;
  const int c0 = static_cast<int>(std::floor(gx));
  const int r0 = static_cast<int>(std::floor(gy));
  if (c0 < 0 || c0 + 1 >= raster.ncols || r0 < 0 || r0 + 1 >= raster.nrows) {
    throw DomainError("point (" + std::to_string(s.x) + ", " +
                      std::to_string(s.y) +
                      ") has no four surrounding raster samples");
  }
  const double tx = gx - c0;
  const double ty = gy - r0;
  const double v00 = raster.at(c0, r0);
  const double v10 = raster.at(c0 + 1, r0);
  const double v01 = raster.at(c0, r0 + 1);
  const double v11 = raster.at(c0 + 1, r0 + 1);
  for (double v : {v00, v10, v01, v11}) {
    if (v == raster.nodata) {
      throw DomainError("nodata sample near point (" + std::to_string(s.x) +
                        ", " + std::to_string(s.y) + ")");
    }
  }
  return (1.0 - tx) * (1.0 - ty) * v00 + tx * (1.0 - ty) * v10 +
         (1.0 - tx) * ty * v01 + tx * ty * v11;
}

namespace {

void write_vector(std::ofstream& out, const char* key,
                  const Eigen::VectorXd& v) {
  out << key << " " << v.size();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out << " " << format_double(v[i]);
  }
  out << "\n";
}

}  // namespace

void save_model(const std::string& path, const ModelRecord& record) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model file " + path);
  out << "spdefield-model 1\n";
  out << "kind "
      << (record.fit.kind == ModelKind::Stationary ? "stationary"
                                                   : "nonstationary")
      << "\n";
  out << "domain " << format_double(record.a1) << " "
      << format_double(record.b1) << " " << format_double(record.a2) << " "
      << format_double(record.b2) << "\n";
  out << "grid " << record.m << " " << record.n << "\n";
  out << "basis " << record.fit.k << " " << record.fit.l << "\n";
  out << "log_tau";
  for (double t : record.fit.log_tau) out << " " << format_double(t);
  out << "\n";
  out << "tau_beta " << format_double(record.tau_beta) << "\n";
  out << "covariates " << record.p << "\n";
  out << "seed " << record.seed << "\n";
  out << "converged " << (record.fit.converged ? 1 : 0) << "\n";
  out << "iterations " << record.fit.iterations << "\n";
  out << "log_posterior " << format_double(record.fit.log_posterior) << "\n";
  write_vector(out, "theta", record.fit.theta);
  if (record.fit.sd) {
    write_vector(out, "sd", *record.fit.sd);
  } else {
    out << "sd absent\n";
  }
  if (!out) throw IoError("failed writing model file " + path);
}

ModelRecord load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "spdefield-model") {
    throw IoError(path + " is not a model file");
  }
  if (version != 1) {
    throw IoError("unsupported model file version " +
                  std::to_string(version));
  }
  ModelRecord rec;
  std::string key;
  auto read_vector = [&](Eigen::VectorXd& v) {
    Eigen::Index count = 0;
    if (!(in >> count) || count < 0) {
      throw IoError("corrupt vector in model file " + path);
    }
    v.resize(count);
    for (Eigen::Index i = 0; i < count; ++i) {
      if (!(in >> v[i])) {
        throw IoError("corrupt vector in model file " + path);
      }
    }
  };
  while (in >> key) {
    if (key == "kind") {
      std::string kind;
      in >> kind;
      if (kind == "stationary") {
        rec.fit.kind = ModelKind::Stationary;
      } else if (kind == "nonstationary") {
        rec.fit.kind = ModelKind::Nonstationary;
      } else {
        throw IoError("unknown model kind '" + kind + "' in " + path);
      }
    } else if (key == "domain") {
      in >> rec.a1 >> rec.b1 >> rec.a2 >> rec.b2;
    } else if (key == "grid") {
      in >> rec.m >> rec.n;
    } else if (key == "basis") {
      in >> rec.fit.k >> rec.fit.l;
    } else if (key == "log_tau") {
      for (double& t : rec.fit.log_tau) in >> t;
    } else if (key == "tau_beta") {
      in >> rec.tau_beta;
    } else if (key == "covariates") {
      in >> rec.p;
    } else if (key == "seed") {
      in >> rec.seed;
    } else if (key == "converged") {
      int c = 0;
      in >> c;
      rec.fit.converged = c != 0;
    } else if (key == "iterations") {
      in >> rec.fit.iterations;
    } else if (key == "log_posterior") {
      in >> rec.fit.log_posterior;
    } else if (key == "theta") {
      read_vector(rec.fit.theta);
    } else if (key == "sd") {
      const auto pos = in.tellg();
      std::string word;
      in >> word;
      if (word == "absent") {
        rec.fit.sd.reset();
      } else {
        in.seekg(pos);
        Eigen::VectorXd sd;
        read_vector(sd);
        rec.fit.sd = std::move(sd);
      }
    } else {
      throw IoError("unknown key '" + key + "' in model file " + path);
    }
    if (!in && !in.eof()) {
      throw IoError("corrupt model file " + path + " near key '" + key + "'");
    }
  }
  const int expected = 4 * rec.fit.k * rec.fit.l + 1;
  if (rec.fit.theta.size() != expected) {
    throw IoError("model file " + path + " has theta length " +
                  std::to_string(rec.fit.theta.size()) + ", expected " +
                  std::to_string(expected));
  }
  return rec;
}

void require_grid_match(const ModelRecord& record, const RegularGrid& grid) {
  if (record.m != grid.m() || record.n != grid.n()) {
    throw DimensionError(
        "model file grid " + std::to_string(record.m) + "x" +
        std::to_string(record.n) + " does not match configured grid " +
        std::to_string(grid.m()) + "x" + std::to_string(grid.n()));
  }
  if (!grid.same_domain(record.a1, record.b1, record.a2, record.b2)) {
    throw DimensionError("model file domain does not match configured domain");
  }
}

}  // namespace spdefield
