#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spdefield/grid.hpp"
#include "spdefield/inference.hpp"

namespace spdefield {

struct StationRecord {
  std::string id;
  double lon = 0.0;
  double lat = 0.0;
  double elevation_km = 0.0;
  std::array<std::optional<double>, 12> monthly;  // mm/month
  std::vector<double> extra;                      // extra covariate columns

  bool complete() const {
    for (const auto& m : monthly) {
      if (!m) return false;
    }
    return true;
  }
};

struct Dataset {
  std::vector<Point> locations;
  Eigen::VectorXd y;  // log annual precipitation
  Eigen::MatrixXd X;  // intercept, elevation (km), extras
  std::vector<std::string> covariate_names;
  int excluded_missing = 0;  // stations missing a month
  int excluded_zero = 0;     // zero annual total (log undefined)
};

// Station CSV with header `id,lon,lat,elev_m,m01,...,m12[,extras...]`.
// Missing months are empty fields or sentinels <= -999.  Stations with any
// missing month are excluded; zero annual totals are excluded and counted.
// Elevation converts meters -> kilometers.  Throws IoError with the line
// number on malformed rows and when no stations remain.
Dataset ingest_stations(const std::string& path);

// Plain observation CSV with header `id,lon,lat,y[,names...]`; covariates
// are taken as given and an intercept column is prepended.
Dataset read_observations(const std::string& path);
void write_observations(const std::string& path, const Dataset& data);

// ESRI ASCII grid.  Values are stored row-major, first row = north.
// Non-square cells use the dx/dy header extension.
struct Raster {
  int ncols = 0;
  int nrows = 0;
  double xll = 0.0;  // lower-left corner
  double yll = 0.0;
  double dx = 1.0;
  double dy = 1.0;
  double nodata = -9999.0;
  std::vector<double> values;

  // Sample at (col, row_from_bottom).
  double at(int col, int row) const {
    return values[static_cast<std::size_t>(nrows - 1 - row) * ncols + col];
  }
  Point sample_center(int col, int row) const {
    return {xll + (col + 0.5) * dx, yll + (row + 0.5) * dy};
  }
};

Raster read_esri_ascii(const std::string& path);
void write_esri_ascii(const std::string& path, const Raster& raster);

// Standard bilinear blend of the four samples surrounding s.  Throws
// DomainError when s has no four surrounding samples or one of them is
// nodata.
double bilinear(const Raster& raster, Point s);

// Versioned plain-text model file; doubles round-trip bitwise.
struct ModelRecord {
  FitResult fit;
  double a1 = 0.0, b1 = 1.0, a2 = 0.0, b2 = 1.0;
  int m = 1, n = 1;
  int p = 0;
  double tau_beta = 1e-4;
  std::uint64_t seed = 0;
};

void save_model(const std::string& path, const ModelRecord& record);
ModelRecord load_model(const std::string& path);

// Shape validation for downstream commands; throws DimensionError naming
// the mismatching field.
void require_grid_match(const ModelRecord& record, const RegularGrid& grid);

// Bit-stable formatting used by every emitted file.
std::string format_double(double v);

}  // namespace spdefield
