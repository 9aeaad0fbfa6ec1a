#pragma once

#include <functional>

#include "ismd/types.hpp"

namespace ismd {

/// Truncated symmetric eigendecomposition, eigenvalues descending.
/// `values`/`vectors` hold only the retained pairs; `discarded_max` is the
/// first discarded eigenvalue (0 when nothing was discarded), which bounds
/// the spectral reconstruction error.
struct EigenResult {
  Vector values;
  Matrix vectors;
  Index rank = 0;
  double discarded_max = 0.0;
};

/// Full symmetric eigendecomposition (LAPACK dsyevd), descending order,
/// eigenvector signs fixed so the largest-magnitude entry is positive.
/// Retains values > max(trunc_tol * values[0], abs_floor).
EigenResult sym_eig(const SymMatrix& a, double trunc_tol,
                    double abs_floor = 0.0);

/// Eigenvalues only, descending. Used by spectrum diagnostics.
Vector sym_spectrum(const SymMatrix& a);

/// Top-`max_rank` eigenpairs only (LAPACK dsyevr index range); the dense
/// partial-eigendecomposition baseline used by the benchmark harness.
EigenResult sym_eig_partial(const SymMatrix& a, Index max_rank,
                            double trunc_tol);

/// Factor H with H*H^T ~= A, columns are sqrt(eigenvalue)-scaled
/// eigenvectors of the retained spectrum. Throws not_psd if A has an
/// eigenvalue < -trunc_tol * lambda_max.
Matrix truncated_factor(const SymMatrix& a, double trunc_tol,
                        double abs_floor = 0.0);

/// Full-pivoted (diagonal-maximizing) Cholesky of a PSD matrix.
/// `permutation` is a bijection on [n] (pivot order first, remaining indices
/// ascending); `factor` is lower-trapezoidal n x rank in pivoted row order,
/// so A(perm[i], perm[j]) ~= (L L^T)(i, j).
struct PivotedCholesky {
  std::vector<Index> permutation;
  Matrix factor;
  Index rank = 0;

  /// Factor rows scattered back to original index order (the matrix P*L).
  Matrix permuted_factor() const {
    Matrix pl = Matrix::Zero(factor.rows(), factor.cols());
    for (Index i = 0; i < factor.rows(); ++i) pl.row(permutation[i]) = factor.row(i);
    return pl;
  }
};

/// pivot_tol is an absolute threshold on residual diagonal entries; callers
/// wanting the relative default use pivot_tol_rel * a.max_diagonal().
/// Ties between equal maximal diagonals break to the smallest index.
PivotedCholesky pivoted_cholesky(const SymMatrix& a, double pivot_tol);

/// (H^T H)^{-1} H^T for full-column-rank H. Throws `singular` when the
/// smallest singular value is <= rank_tol_rel times the largest.
Matrix pseudo_inverse_factor(const Matrix& h, double rank_tol_rel = 1e-12);

/// Spectral norm of a symmetric operator given by `apply`, via power
/// iteration on the squared operator (handles sign-indefinite spectra).
/// Deterministic seeded start; `tol` is the relative change stopping rule.
double spectral_norm_sym(const std::function<Vector(const Vector&)>& apply,
                         Index n, double tol = 1e-10, int max_iter = 5000,
                         std::uint64_t seed = 0x243f6a8885a308d3ULL);

/// ||A||_2 for a symmetric matrix.
double spectral_norm(const SymMatrix& a, double tol = 1e-10);

/// ||A - G G^T||_2 / ||A||_2 without forming the residual densely.
/// Pass a precomputed ||A||_2 as `norm_a` to skip recomputing it.
double relative_residual(const SymMatrix& a, const Matrix& g,
                         double tol = 1e-10, double norm_a = 0.0);

namespace detail {
/// Pins BLAS to one thread (determinism; patch-level parallelism is ours).
void ensure_single_threaded_blas();
}  // namespace detail

}  // namespace ismd
