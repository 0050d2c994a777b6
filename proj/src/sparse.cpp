#include "spdefield/sparse.hpp"

#include <Eigen/OrderingMethods>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "spdefield/errors.hpp"

namespace spdefield {

namespace {

// Elimination tree of a full symmetric CSC pattern (Liu's algorithm with
// ancestor path compression).
std::vector<int> elimination_tree(int n, const std::vector<int>& Bp,
                                  const std::vector<int>& Bi) {
  std::vector<int> parent(n, -1), ancestor(n, -1);
  for (int k = 0; k < n; ++k) {
    for (int p = Bp[k]; p < Bp[k + 1]; ++p) {
      int i = Bi[p];
      while (i != -1 && i < k) {
        const int next = ancestor[i];
        ancestor[i] = k;
        if (next == -1) {
          parent[i] = k;
          i = -1;
        } else {
          i = next;
        }
      }
    }
  }
  return parent;
}

// Pattern of row k of L (columns j < k), unordered, via etree walks.
// `mark` must hold values < k on entry for all untouched nodes.
void row_pattern(int k, const std::vector<int>& Bp, const std::vector<int>& Bi,
                 const std::vector<int>& parent, std::vector<int>& mark,
                 std::vector<int>& out) {
  out.clear();
  mark[k] = k;
  for (int p = Bp[k]; p < Bp[k + 1]; ++p) {
    int i = Bi[p];
    if (i >= k) continue;
    while (mark[i] != k) {
      mark[i] = k;
      out.push_back(i);
      i = parent[i];
    }
  }
}

}  // namespace

void SparseCholesky::analyze(const SpMat& Qin, Ordering ordering) {
  SpMat Q = Qin;
  Q.makeCompressed();
  if (Q.rows() != Q.cols()) {
    throw DimensionError("Cholesky requires a square matrix");
  }
  n_ = static_cast<int>(Q.rows());
  source_nnz_ = static_cast<std::size_t>(Q.nonZeros());

  perm_.resize(n_);
  if (ordering == Ordering::Amd) {
    Eigen::AMDOrdering<int> amd;
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> P;
    SpMat pattern = Q;  // AMD reads the structure only
    amd(pattern, P);
    // Map so that B(iperm[r], iperm[c]) = Q(r, c).
    perm_.assign(P.indices().data(), P.indices().data() + n_);
    iperm_.resize(n_);
    for (int i = 0; i < n_; ++i) iperm_[perm_[i]] = i;
  } else {
    std::iota(perm_.begin(), perm_.end(), 0);
    iperm_ = perm_;
  }

  // Build the permuted pattern with values encoding the source position so
  // numeric refactorizations are a flat copy.
  {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(source_nnz_);
    int pos = 0;
    for (int c = 0; c < n_; ++c) {
      for (SpMat::InnerIterator it(Q, c); it; ++it, ++pos) {
        trips.emplace_back(iperm_[static_cast<int>(it.row())], iperm_[c],
                           static_cast<double>(pos));
      }
    }
    SpMat B(n_, n_);
    B.setFromTriplets(trips.begin(), trips.end());
    B.makeCompressed();
    if (static_cast<std::size_t>(B.nonZeros()) != source_nnz_) {
      throw DimensionError("matrix pattern has duplicate entries");
    }
    Bp_.assign(B.outerIndexPtr(), B.outerIndexPtr() + n_ + 1);
    Bi_.assign(B.innerIndexPtr(), B.innerIndexPtr() + B.nonZeros());
    value_map_.resize(source_nnz_);
    for (std::size_t t = 0; t < source_nnz_; ++t) {
      value_map_[t] = static_cast<int>(B.valuePtr()[t]);
    }
    Bx_.assign(source_nnz_, 0.0);
  }

  // Symbolic factorization: etree, then row patterns -> column counts ->
  // column and row index arrays.
  const std::vector<int> parent = elimination_tree(n_, Bp_, Bi_);
  std::vector<int> mark(n_, -1), rowk;
  std::vector<int> colcount(n_, 1);  // diagonal
  Rp_.assign(n_ + 1, 0);
  for (int k = 0; k < n_; ++k) {
    row_pattern(k, Bp_, Bi_, parent, mark, rowk);
    Rp_[k + 1] = Rp_[k] + static_cast<int>(rowk.size());
    for (int j : rowk) ++colcount[j];
  }
  Lp_.assign(n_ + 1, 0);
  for (int k = 0; k < n_; ++k) Lp_[k + 1] = Lp_[k] + colcount[k];
  Li_.assign(Lp_[n_], 0);
  Rj_.assign(Rp_[n_], 0);
  std::vector<int> cursor(n_);
  for (int k = 0; k < n_; ++k) {
    Li_[Lp_[k]] = k;  // diagonal first
    cursor[k] = Lp_[k] + 1;
  }
  std::fill(mark.begin(), mark.end(), -1);
  for (int k = 0; k < n_; ++k) {
    row_pattern(k, Bp_, Bi_, parent, mark, rowk);
    std::sort(rowk.begin(), rowk.end());
    std::copy(rowk.begin(), rowk.end(), Rj_.begin() + Rp_[k]);
    for (int j : rowk) Li_[cursor[j]++] = k;  // ascending k keeps rows sorted
  }
  Lx_.assign(Lp_[n_], 0.0);

  // Full symmetric pattern for the selected inverse: column c is the row
  // pattern of c (entries above the diagonal) followed by the column
  // pattern of c (diagonal and below), both sorted.
  Fp_.assign(n_ + 1, 0);
  for (int c = 0; c < n_; ++c) {
    Fp_[c + 1] = Fp_[c] + (Rp_[c + 1] - Rp_[c]) + (Lp_[c + 1] - Lp_[c]);
  }
  Fi_.resize(Fp_[n_]);
  for (int c = 0; c < n_; ++c) {
    int pos = Fp_[c];
    for (int q = Rp_[c]; q < Rp_[c + 1]; ++q) Fi_[pos++] = Rj_[q];
    for (int p = Lp_[c]; p < Lp_[c + 1]; ++p) Fi_[pos++] = Li_[p];
  }
  flo_.resize(Lp_[n_]);
  fhi_.resize(Lp_[n_]);
  for (int j = 0; j < n_; ++j) {
    const int upper = Rp_[j + 1] - Rp_[j];
    for (int p = Lp_[j]; p < Lp_[j + 1]; ++p) {
      flo_[p] = Fp_[j] + upper + (p - Lp_[j]);
    }
  }
  // Mirror positions: entry (i, j) of L also lives at row j in the upper
  // part of full column i.  Rows arrive in ascending i per column, matching
  // the Li_ layout, so a per-column cursor recovers the L entry index.
  for (int k = 0; k < n_; ++k) cursor[k] = Lp_[k] + 1;
  for (int i = 0; i < n_; ++i) {
    fhi_[Lp_[i]] = flo_[Lp_[i]];  // diagonal maps to itself
    for (int q = Rp_[i]; q < Rp_[i + 1]; ++q) {
      const int j = Rj_[q];
      fhi_[cursor[j]++] = Fp_[i] + (q - Rp_[i]);
    }
  }

  analyzed_ = true;
  factorized_ = false;
}

bool SparseCholesky::try_factorize(const SpMat& Qin) {
  if (!analyzed_) {
    analyze(Qin);
  }
  SpMat Q = Qin;
  Q.makeCompressed();
  if (static_cast<std::size_t>(Q.nonZeros()) != source_nnz_ ||
      Q.rows() != n_) {
    throw DimensionError(
        "matrix pattern changed since analyze(); re-run analyze");
  }
  for (std::size_t t = 0; t < source_nnz_; ++t) {
    Bx_[t] = Q.valuePtr()[value_map_[t]];
  }

  std::vector<double> x(n_, 0.0);
  std::vector<int> cursor(n_);
  for (int k = 0; k < n_; ++k) cursor[k] = Lp_[k] + 1;
  logdet_ = 0.0;
  failed_pivot_ = -1;

  for (int k = 0; k < n_; ++k) {
    double d = 0.0;
    for (int p = Bp_[k]; p < Bp_[k + 1]; ++p) {
      const int i = Bi_[p];
      if (i < k) {
        x[i] = Bx_[p];
      } else if (i == k) {
        d = Bx_[p];
      }
    }
    for (int q = Rp_[k]; q < Rp_[k + 1]; ++q) {
      const int j = Rj_[q];
      const double lkj = x[j] / Lx_[Lp_[j]];
      x[j] = 0.0;
      for (int p = Lp_[j] + 1; p < cursor[j]; ++p) {
        x[Li_[p]] -= Lx_[p] * lkj;
      }
      d -= lkj * lkj;
      Lx_[cursor[j]++] = lkj;
    }
    if (!(d > 0.0)) {
      failed_pivot_ = perm_[k];
      factorized_ = false;
      return false;
    }
    Lx_[Lp_[k]] = std::sqrt(d);
    logdet_ += std::log(d);
  }
  factorized_ = true;
  return true;
}

void SparseCholesky::factorize(const SpMat& Q) {
  if (!try_factorize(Q)) {
    throw NotPositiveDefiniteError(label_, failed_pivot_);
  }
}

void SparseCholesky::require_factorized() const {
  if (!factorized_) {
    throw std::logic_error("Cholesky factor not available");
  }
}

double SparseCholesky::log_det() const {
  require_factorized();
  return logdet_;
}

Eigen::VectorXd SparseCholesky::solve(const Eigen::VectorXd& b) const {
  require_factorized();
  if (b.size() != n_) {
    throw DimensionError("right-hand side length " + std::to_string(b.size()) +
                         " does not match dimension " + std::to_string(n_));
  }
  Eigen::VectorXd w(n_);
  for (int k = 0; k < n_; ++k) w[k] = b[perm_[k]];
  // L w = Pb
  for (int j = 0; j < n_; ++j) {
    w[j] /= Lx_[Lp_[j]];
    const double wj = w[j];
    for (int p = Lp_[j] + 1; p < Lp_[j + 1]; ++p) {
      w[Li_[p]] -= Lx_[p] * wj;
    }
  }
  // L^T v = w
  for (int j = n_ - 1; j >= 0; --j) {
    double s = w[j];
    for (int p = Lp_[j] + 1; p < Lp_[j + 1]; ++p) {
      s -= Lx_[p] * w[Li_[p]];
    }
    w[j] = s / Lx_[Lp_[j]];
  }
  Eigen::VectorXd out(n_);
  for (int k = 0; k < n_; ++k) out[perm_[k]] = w[k];
  return out;
}

Eigen::MatrixXd SparseCholesky::solve(const Eigen::MatrixXd& B) const {
  Eigen::MatrixXd out(B.rows(), B.cols());
  for (Eigen::Index c = 0; c < B.cols(); ++c) {
    out.col(c) = solve(Eigen::VectorXd(B.col(c)));
  }
  return out;
}

Eigen::VectorXd SparseCholesky::sample(const Eigen::VectorXd& z) const {
  require_factorized();
  if (z.size() != n_) {
    throw DimensionError("noise vector length " + std::to_string(z.size()) +
                         " does not match dimension " + std::to_string(n_));
  }
  Eigen::VectorXd w = z;
  for (int j = n_ - 1; j >= 0; --j) {
    double s = w[j];
    for (int p = Lp_[j] + 1; p < Lp_[j + 1]; ++p) {
      s -= Lx_[p] * w[Li_[p]];
    }
    w[j] = s / Lx_[Lp_[j]];
  }
  Eigen::VectorXd out(n_);
  for (int k = 0; k < n_; ++k) out[perm_[k]] = w[k];
  return out;
}

SelectedInverse SparseCholesky::selected_inverse() const {
  require_factorized();
  SelectedInverse inv;
  inv.n_ = n_;
  inv.colptr_ = Fp_;
  inv.rowidx_ = Fi_;
  inv.val_.assign(Fp_[n_], 0.0);
  inv.iperm_ = iperm_;
  std::vector<double>& z = inv.val_;

  // Takahashi recursion over the factor pattern:
  //   Z_ij = (delta_ij / L_jj - sum_{k > j in col j} L_kj Z(i, k)) / L_jj.
  // Columns run from last to first; off-diagonals of column j only read
  // completed columns k > j, the diagonal then reads column j itself.
  // Values are mirrored into both triangles so every read walks one sorted
  // column, merged against the column-j pattern.
  std::vector<double> acc(n_, 0.0);
  for (int j = n_ - 1; j >= 0; --j) {
    const int start = Lp_[j];
    const int end = Lp_[j + 1];
    const double dj = Lx_[start];
    for (int q = start + 1; q < end; ++q) {
      const int k2 = Li_[q];
      const double lkj = Lx_[q];
      // acc[r] += L_{k2,j} * Z(r, k2) for rows r in column j's pattern
      int p = start + 1;
      int f = Fp_[k2];
      const int fend = Fp_[k2 + 1];
      while (p < end && f < fend) {
        const int rp = Li_[p];
        const int rf = Fi_[f];
        if (rp == rf) {
          acc[rp] += lkj * z[f];
          ++p;
          ++f;
        } else if (rp < rf) {
          ++p;
        } else {
          ++f;
        }
      }
    }
    for (int p = end - 1; p > start; --p) {
      const int i = Li_[p];
      const double v = -acc[i] / dj;
      acc[i] = 0.0;
      z[flo_[p]] = v;
      z[fhi_[p]] = v;
    }
    double s = 0.0;
    for (int q = start + 1; q < end; ++q) {
      s += Lx_[q] * z[flo_[q]];
    }
    z[flo_[start]] = (1.0 / dj - s) / dj;
  }
  return inv;
}

const double* SelectedInverse::find_permuted(int r, int c) const {
  const int lo = colptr_[c];
  const int hi = colptr_[c + 1];
  const int* first = rowidx_.data() + lo;
  const int* last = rowidx_.data() + hi;
  const int* it = std::lower_bound(first, last, r);
  if (it == last || *it != r) return nullptr;
  return val_.data() + (it - rowidx_.data());
}

double SelectedInverse::entry_permuted(int r, int c) const {
  const double* z = find_permuted(r, c);
  if (z == nullptr) {
    throw BoundsError("inverse entry (" + std::to_string(r) + ", " +
                      std::to_string(c) +
                      ") is outside the selected-inverse pattern");
  }
  return *z;
}

double SelectedInverse::entry(int r, int c) const {
  if (r < 0 || r >= n_ || c < 0 || c >= n_) {
    throw BoundsError("inverse entry index out of range");
  }
  return entry_permuted(iperm_[r], iperm_[c]);
}

bool SelectedInverse::has_entry(int r, int c) const {
  if (r < 0 || r >= n_ || c < 0 || c >= n_) return false;
  return find_permuted(iperm_[r], iperm_[c]) != nullptr;
}

Eigen::VectorXd SelectedInverse::diagonal() const {
  Eigen::VectorXd d(n_);
  for (int i = 0; i < n_; ++i) {
    const int p = iperm_[i];
    d[i] = entry_permuted(p, p);
  }
  return d;
}

double SelectedInverse::trace_product(const SpMat& M) const {
  // M may be a leading principal block (e.g. the u block of a joint
  // precision); indices are taken as-is.
  if (M.rows() > n_ || M.cols() > n_ || M.rows() != M.cols()) {
    throw DimensionError("trace_product dimension mismatch");
  }
  double acc = 0.0;
  for (int c = 0; c < M.outerSize(); ++c) {
    for (SpMat::InnerIterator it(M, c); it; ++it) {
      const double* z =
          find_permuted(iperm_[static_cast<int>(it.row())], iperm_[c]);
      if (z == nullptr) {
        throw BoundsError(
            "trace_product operand has an entry outside the "
            "selected-inverse pattern");
      }
      acc += it.value() * *z;
    }
  }
  return acc;
}

SpMat SelectedInverse::to_sparse() const {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(val_.size());
  std::vector<int> perm(n_);
  for (int i = 0; i < n_; ++i) perm[iperm_[i]] = i;
  for (int c = 0; c < n_; ++c) {
    for (int p = colptr_[c]; p < colptr_[c + 1]; ++p) {
      trips.emplace_back(perm[rowidx_[p]], perm[c], val_[p]);
    }
  }
  SpMat out(n_, n_);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

}  // namespace spdefield
