#include "spdefield/spde.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "spdefield/errors.hpp"

namespace spdefield {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

struct Term {
  int cell;
  double coef;
};

// Assembles M with [Mu]_c = mass_c u_c - (1/V) sum_edges flux, where the
// flux through an edge uses the given per-cell H entries averaged onto the
// edge.  Null field pointers mean identically zero.  When skip_zero is set,
// zero-valued contributions are not emitted (derivative matrices keep their
// support small); otherwise the full structural stencil is kept so the
// pattern does not depend on the field values.
Eigen::SparseMatrix<double> assemble_core(const RegularGrid& grid,
                                          const Eigen::VectorXd* mass,
                                          const Eigen::VectorXd* H11,
                                          const Eigen::VectorXd* H12,
                                          const Eigen::VectorXd* H22,
                                          bool skip_zero) {
  const int m = grid.m();
  const int n = grid.n();
  const int mn = grid.num_cells();
  const double hx = grid.hx();
  const double hy = grid.hy();
  const double V = grid.cell_area();

  Triplets trips;
  trips.reserve(static_cast<std::size_t>(mn) * 10);

  auto flat = [m](int i, int j) { return j * m + i; };
  auto edge_value = [](const Eigen::VectorXd* field, int c1, int c2) {
    return field ? 0.5 * ((*field)[c1] + (*field)[c2]) : 0.0;
  };

  if (mass) {
    for (int c = 0; c < mn; ++c) {
      const double v = (*mass)[c];
      if (!skip_zero || v != 0.0) trips.emplace_back(c, c, v);
    }
  }

  // Flux terms enter row `left` with -coef/V and row `right` with +coef/V.
  Term terms[6];
  auto add_flux = [&](int left, int right, const Term* t, int count) {
    for (int s = 0; s < count; ++s) {
      if (skip_zero && t[s].coef == 0.0) continue;
      trips.emplace_back(left, t[s].cell, -t[s].coef / V);
      trips.emplace_back(right, t[s].cell, t[s].coef / V);
    }
  };

  // Vertical edges between (i, j) and (i+1, j); flux positive in +x:
  //   hy * [ H11_e (u_{i+1,j} - u_{i,j})/hx + H12_e * dudy_edge ].
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i + 1 < m; ++i) {
      const int cl = flat(i, j);
      const int cr = flat(i + 1, j);
      const double h11 = edge_value(H11, cl, cr);
      const double h12 = edge_value(H12, cl, cr);
      int count = 0;
      const double cn = hy * h11 / hx;
      terms[count++] = {cr, cn};
      terms[count++] = {cl, -cn};
      if (n >= 2) {
        // Tangential derivative: averaged central differences, one-sided
        // at the boundary rows.
        double ct = hy * h12;
        if (j == 0) {
          ct /= 2.0 * hy;
          terms[count++] = {flat(i, 1), ct};
          terms[count++] = {flat(i + 1, 1), ct};
          terms[count++] = {cl, -ct};
          terms[count++] = {cr, -ct};
        } else if (j == n - 1) {
          ct /= 2.0 * hy;
          terms[count++] = {cl, ct};
          terms[count++] = {cr, ct};
          terms[count++] = {flat(i, j - 1), -ct};
          terms[count++] = {flat(i + 1, j - 1), -ct};
        } else {
          ct /= 4.0 * hy;
          terms[count++] = {flat(i, j + 1), ct};
          terms[count++] = {flat(i + 1, j + 1), ct};
          terms[count++] = {flat(i, j - 1), -ct};
          terms[count++] = {flat(i + 1, j - 1), -ct};
        }
      }
      add_flux(cl, cr, terms, count);
    }
  }

  // Horizontal edges between (i, j) and (i, j+1); flux positive in +y:
  //   hx * [ H22_e (u_{i,j+1} - u_{i,j})/hy + H12_e * dudx_edge ].
  for (int j = 0; j + 1 < n; ++j) {
    for (int i = 0; i < m; ++i) {
      const int cb = flat(i, j);
      const int ct_ = flat(i, j + 1);
      const double h22 = edge_value(H22, cb, ct_);
      const double h12 = edge_value(H12, cb, ct_);
      int count = 0;
      const double cn = hx * h22 / hy;
      terms[count++] = {ct_, cn};
      terms[count++] = {cb, -cn};
      if (m >= 2) {
        double cx = hx * h12;
        if (i == 0) {
          cx /= 2.0 * hx;
          terms[count++] = {flat(1, j), cx};
          terms[count++] = {flat(1, j + 1), cx};
          terms[count++] = {cb, -cx};
          terms[count++] = {ct_, -cx};
        } else if (i == m - 1) {
          cx /= 2.0 * hx;
          terms[count++] = {cb, cx};
          terms[count++] = {ct_, cx};
          terms[count++] = {flat(i - 1, j), -cx};
          terms[count++] = {flat(i - 1, j + 1), -cx};
        } else {
          cx /= 4.0 * hx;
          terms[count++] = {flat(i + 1, j), cx};
          terms[count++] = {flat(i + 1, j + 1), cx};
          terms[count++] = {flat(i - 1, j), -cx};
          terms[count++] = {flat(i - 1, j + 1), -cx};
        }
      }
      add_flux(cb, ct_, terms, count);
    }
  }

  Eigen::SparseMatrix<double> M(mn, mn);
  M.setFromTriplets(trips.begin(), trips.end());
  M.makeCompressed();
  return M;
}

}  // namespace

SpdeOperator assemble(const RegularGrid& grid, const AnisotropyField& f) {
  if (f.kappa2.size() != grid.num_cells()) {
    throw DimensionError("field values do not match grid size");
  }
  if (!(f.kappa2.minCoeff() > 0.0)) {
    throw ParameterError("kappa^2 must be strictly positive on all cells");
  }
  SpdeOperator op;
  op.V = grid.cell_area();
  op.A = assemble_core(grid, &f.kappa2, &f.H11, &f.H12, &f.H22,
                       /*skip_zero=*/false);
  Eigen::SparseMatrix<double> At = op.A.transpose();
  Eigen::SparseMatrix<double> Q = (At * op.A) * op.V;
  // A^T A is symmetric up to summation order; average the two halves.
  Eigen::SparseMatrix<double> Qt = Q.transpose();
  op.Q = 0.5 * (Q + Qt);
  op.Q.makeCompressed();
  return op;
}

Eigen::SparseMatrix<double> assemble_dA(const RegularGrid& grid,
                                        const AnisotropyField& f,
                                        const Eigen::SparseMatrix<double>& F,
                                        int field, int idx) {
  if (field < 1 || field > 4) {
    throw BoundsError("field id must be in 1..4, got " +
                      std::to_string(field));
  }
  if (idx < 0 || idx >= F.cols()) {
    throw BoundsError("basis function index " + std::to_string(idx) +
                      " out of range");
  }
  const Eigen::VectorXd fcol = F.col(idx);
  switch (field) {
    case 1: {
      // Only the mass term depends on kappa^2; chain rule through exp.
      const Eigen::VectorXd dmass = f.kappa2.array() * fcol.array();
      return assemble_core(grid, &dmass, nullptr, nullptr, nullptr,
                           /*skip_zero=*/true);
    }
    case 2: {
      const Eigen::VectorXd dh = f.gamma.array() * fcol.array();
      return assemble_core(grid, nullptr, &dh, nullptr, &dh,
                           /*skip_zero=*/true);
    }
    case 3: {
      const Eigen::VectorXd dh11 = 2.0 * f.vx.array() * fcol.array();
      const Eigen::VectorXd dh12 = f.vy.array() * fcol.array();
      return assemble_core(grid, nullptr, &dh11, &dh12, nullptr,
                           /*skip_zero=*/true);
    }
    default: {
      const Eigen::VectorXd dh12 = f.vx.array() * fcol.array();
      const Eigen::VectorXd dh22 = 2.0 * f.vy.array() * fcol.array();
      return assemble_core(grid, nullptr, nullptr, &dh12, &dh22,
                           /*skip_zero=*/true);
    }
  }
}

Eigen::SparseMatrix<double> precision_derivative(
    const SpdeOperator& op, const Eigen::SparseMatrix<double>& dA) {
  Eigen::SparseMatrix<double> dAt = dA.transpose();
  Eigen::SparseMatrix<double> At = op.A.transpose();
  Eigen::SparseMatrix<double> dQ = (dAt * op.A + At * dA) * op.V;
  Eigen::SparseMatrix<double> dQt = dQ.transpose();
  Eigen::SparseMatrix<double> out = 0.5 * (dQ + dQt);
  out.makeCompressed();
  return out;
}

}  // namespace spdefield
