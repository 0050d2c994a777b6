#include "spdefield/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spdefield/errors.hpp"

namespace spdefield {

RegularGrid::RegularGrid(double a1, double b1, double a2, double b2, int m,
                         int n)
    : a1_(a1), b1_(b1), a2_(a2), b2_(b2), m_(m), n_(n) {
  if (!(b1 > a1) || !(b2 > a2)) {
    throw ParameterError("grid domain must have b1 > a1 and b2 > a2");
  }
  if (m < 1 || n < 1) {
    throw ParameterError("grid needs at least one cell per axis");
  }
  hx_ = (b1_ - a1_) / m_;
  hy_ = (b2_ - a2_) / n_;
}

CellIndex RegularGrid::locate(Point s) const {
  if (s.x < a1_ || s.x > b1_) {
    throw DomainError("x coordinate " + std::to_string(s.x) +
                      " outside domain [" + std::to_string(a1_) + ", " +
                      std::to_string(b1_) + "]");
  }
  if (s.y < a2_ || s.y > b2_) {
    throw DomainError("y coordinate " + std::to_string(s.y) +
                      " outside domain [" + std::to_string(a2_) + ", " +
                      std::to_string(b2_) + "]");
  }
  int i = static_cast<int>(std::floor((s.x - a1_) / hx_));
  int j = static_cast<int>(std::floor((s.y - a2_) / hy_));
  i = std::clamp(i, 0, m_ - 1);
  j = std::clamp(j, 0, n_ - 1);
  return {i, j};
}

Point RegularGrid::cell_center(CellIndex c) const {
  check_index(c);
  return {a1_ + (c.i + 0.5) * hx_, a2_ + (c.j + 0.5) * hy_};
}

int RegularGrid::flatten(CellIndex c) const {
  check_index(c);
  return c.j * m_ + c.i;
}

CellIndex RegularGrid::unflatten(int flat) const {
  if (flat < 0 || flat >= num_cells()) {
    throw BoundsError("flat index " + std::to_string(flat) +
                      " out of range for " + std::to_string(num_cells()) +
                      " cells");
  }
  return {flat % m_, flat / m_};
}

bool RegularGrid::same_domain(double a1, double b1, double a2,
                              double b2) const {
  return a1 == a1_ && b1 == b1_ && a2 == a2_ && b2 == b2_;
}

void RegularGrid::check_index(CellIndex c) const {
  if (c.i < 0 || c.i >= m_ || c.j < 0 || c.j >= n_) {
    throw BoundsError("cell index (" + std::to_string(c.i) + ", " +
                      std::to_string(c.j) + ") out of range for " +
                      std::to_string(m_) + " x " + std::to_string(n_) +
                      " grid");
  }
}

}  // namespace spdefield
