#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace spdefield {

using SpMat = Eigen::SparseMatrix<double>;

// Entries of the inverse of an SPD matrix on the Cholesky factor's pattern
// (a superset of the matrix pattern), in original (unpermuted) indexing.
class SelectedInverse {
 public:
  int dim() const { return n_; }

  // Entry (r, c) of the inverse.  Throws BoundsError if (r, c) is outside
  // the stored pattern (the entry exists but was not computed).
  double entry(int r, int c) const;
  bool has_entry(int r, int c) const;

  // Diagonal of the inverse.
  Eigen::VectorXd diagonal() const;

  // sum_{(r,c) in nnz(M)} M(r,c) * inv(r,c) = trace(Q^{ -1} M) for symmetric
  // M with pattern inside the stored pattern.
  double trace_product(const SpMat& M) const;

  // Full symmetric sparse matrix of the stored entries (for tests/export).
  SpMat to_sparse() const;

 private:
  friend class SparseCholesky;
  int n_ = 0;
  // Full symmetric pattern of L + L^T in permuted space, rows sorted.
  std::vector<int> colptr_;
  std::vector<int> rowidx_;
  std::vector<double> val_;
  std::vector<int> iperm_;    // original index -> permuted position

  double entry_permuted(int r, int c) const;
  const double* find_permuted(int r, int c) const;
};

// Simplicial sparse Cholesky P Q P^T = L L^T for symmetric positive
// definite Q, with a fill-reducing (AMD) or natural ordering.  The symbolic
// analysis is reusable across numeric factorizations with the same pattern.
class SparseCholesky {
 public:
  enum class Ordering { Amd, Natural };

  explicit SparseCholesky(std::string label = "matrix")
      : label_(std::move(label)) {}

  // Symbolic analysis of the (structurally symmetric) pattern of Q.
  void analyze(const SpMat& Q, Ordering ordering = Ordering::Amd);

  // Numeric factorization; analyze() is called implicitly if needed.
  // Throws NotPositiveDefiniteError with the failing pivot's original index.
  void factorize(const SpMat& Q);

  // Like factorize but returns false on a non-positive pivot (the failing
  // pivot index is available from failed_pivot()).
  bool try_factorize(const SpMat& Q);

  bool analyzed() const { return analyzed_; }
  bool factorized() const { return factorized_; }
  int dim() const { return n_; }
  long failed_pivot() const { return failed_pivot_; }
  std::int64_t factor_nonzeros() const {
    return static_cast<std::int64_t>(Li_.size());
  }

  // log det Q = 2 sum log L_kk.
  double log_det() const;

  // Solve Q x = b.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const;

  // P^T L^{-T} z: maps iid standard normal z to a draw with precision Q.
  Eigen::VectorXd sample(const Eigen::VectorXd& z) const;

  // Takahashi recursion over the factor pattern.
  SelectedInverse selected_inverse() const;

 private:
  void require_factorized() const;

  std::string label_;
  int n_ = 0;
  bool analyzed_ = false;
  bool factorized_ = false;
  long failed_pivot_ = -1;
  double logdet_ = 0.0;

  std::vector<int> perm_;   // permuted position -> original index
  std::vector<int> iperm_;  // original index -> permuted position

  // Permuted matrix B = P Q P^T pattern (full symmetric CSC) and the map
  // from Q's value array into B's.
  std::vector<int> Bp_, Bi_;
  std::vector<double> Bx_;
  std::vector<int> value_map_;
  std::size_t source_nnz_ = 0;

  // Factor L (CSC lower, diagonal first in each column, rows ascending) and
  // the row patterns (CSR, ascending, excluding the diagonal).
  std::vector<int> Lp_, Li_;
  std::vector<double> Lx_;
  std::vector<int> Rp_, Rj_;

  // Full symmetric pattern of L + L^T: column c = rowL(c) ++ colL(c), both
  // sorted, so the concatenation is sorted.  flo_/fhi_ map each L entry to
  // its two mirror positions in the full value array.
  std::vector<int> Fp_, Fi_;
  std::vector<int> flo_, fhi_;
};

}  // namespace spdefield
