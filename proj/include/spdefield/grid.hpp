#pragma once

#include <utility>

namespace spdefield {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct CellIndex {
  int i = 0;  // x index
  int j = 0;  // y index
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

// Regular m x n grid of rectangular cells covering [a1,b1] x [a2,b2].
// Cells are stacked column-wise: cell (i, j) has flat index j*m + i.
// Coordinates are treated as planar Euclidean (no great-circle correction).
class RegularGrid {
 public:
  RegularGrid(double a1, double b1, double a2, double b2, int m, int n);

  double a1() const { return a1_; }
  double b1() const { return b1_; }
  double a2() const { return a2_; }
  double b2() const { return b2_; }
  int m() const { return m_; }
  int n() const { return n_; }
  int num_cells() const { return m_ * n_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  double cell_area() const { return hx_ * hy_; }

  // Cell containing s.  Cells are half-open in each axis; points on the
  // upper domain boundary clamp to the last cell so every in-domain point
  // has a cell.  Throws DomainError naming the offending coordinate.
  CellIndex locate(Point s) const;

  Point cell_center(CellIndex c) const;

  int flatten(CellIndex c) const;
  CellIndex unflatten(int flat) const;

  bool same_domain(double a1, double b1, double a2, double b2) const;

 private:
  void check_index(CellIndex c) const;

  double a1_, b1_, a2_, b2_;
  int m_, n_;
  double hx_, hy_;
};

}  // namespace spdefield
