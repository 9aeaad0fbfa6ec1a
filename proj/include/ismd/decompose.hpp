#pragma once

#include <optional>

#include "ismd/joint_diag.hpp"
#include "ismd/linalg.hpp"
#include "ismd/partition.hpp"

namespace ismd {

/// Per-patch factor matrices and rotations of the local stage.
struct LocalBasisSet {
  std::vector<Matrix> factors;    // H_m, |P_m| x K_m
  std::vector<Matrix> rotations;  // D_m, K_m x K_m (identity before joint diag)
  std::vector<Index> ranks;       // K_m
  std::vector<Index> offsets;     // block offsets into [0, total_rank)

  Index total_rank() const { return offsets.empty() ? 0 : offsets.back(); }
};

/// Block-structured square matrix over patch-local coordinates.
struct CorrelationMatrix {
  enum class Role { lambda, omega, omega_normalized };

  Matrix data;                 // K_t x K_t
  std::vector<Index> offsets;  // size M+1
  Role role = Role::lambda;

  Index blocks() const { return static_cast<Index>(offsets.size()) - 1; }
  Index block_rank(Index m) const { return offsets[m + 1] - offsets[m]; }
  Eigen::Block<const Matrix> block(Index m, Index n) const {
    return data.block(offsets[m], offsets[n], block_rank(m), block_rank(n));
  }
};

struct DecomposeOptions {
  double trunc_tol = 1e-12;   // relative local eigenvalue truncation
  double jd_eps = 1e-12;
  int jd_max_sweeps = 50;
  double pivot_tol = 1e-12;   // relative to the max diagonal of Omega
  bool normalize = false;     // rescale so G_ext columns are unit length

  // thresholding (noise-robust variant)
  std::optional<double> threshold;  // fixed epsilon_th; unset => learn
  bool snap = false;                // snap surviving entries to +-1
  double gap_factor = 10.0;         // required 2-cluster separation

  // low-rank approximation variant
  std::optional<Index> rank_cap;
  std::optional<double> error_target;
  double coupling_tol = 0.1;          // cross-patch coupling cut, correlation units
  double lowrank_local_factor = 0.25; // local floor = factor * error_target * ||A||

  int workers = 0;  // 0 => hardware concurrency
};

struct StageTimings {
  double local_eig = 0, joint_diag = 0, patch_up = 0, total = 0;
};

struct DecompositionResult {
  ModeSet modes;
  Index rank = 0;
  double residual = 0.0;              // ||A - G G^T||_2 / ||A||_2
  std::vector<int> sparseness;        // per-mode patch sparseness
  std::vector<Index> local_ranks;     // K_m
  std::string algorithm;
  double threshold_used = 0.0;        // epsilon_th actually applied (0: none)
  bool jd_converged = true;           // all per-patch joint diagonalizations
  StageTimings timings;
  std::string options_echo;           // JSON echo of the options used
};

/// Local truncated eigendecompositions A_mm = H_m H_m^T for every patch.
/// `abs_floor` is an absolute eigenvalue cutoff applied on top of the
/// relative trunc_tol (used by the noise and low-rank variants).
LocalBasisSet local_bases(const SymMatrix& a, const Partition& p,
                          double trunc_tol, double abs_floor = 0.0,
                          int workers = 0);

/// Lambda_mn = H_m^+ A_mn (H_n^+)^T, assembled block-wise.
CorrelationMatrix assemble_lambda(const SymMatrix& a, const Partition& p,
                                  const LocalBasisSet& bases, int workers = 0);

/// Sigma_{n;m} = Lambda_mn Lambda_mn^T for all n != m (in ascending n).
std::vector<Matrix> sigma_family(const CorrelationMatrix& lambda, Index m);

/// Algorithm: local eigendecomposition + joint diagonalization +
/// pivoted-Cholesky patch-up. Exact decomposition A = G G^T for exact-rank
/// PSD input.
DecompositionResult ismd(const SymMatrix& a, const Partition& p,
                         const DecomposeOptions& opts = {});

/// Noise-robust variant: entries of Omega below a (learned or fixed)
/// threshold are zeroed before the patch-up; optionally snapped to +-1 when
/// the identifiability pre-check passes.
DecompositionResult ismd_threshold(const SymMatrix& a, const Partition& p,
                                   const DecomposeOptions& opts = {});

/// Low-rank approximation variant: normalized basis, cross-patch couplings
/// extracted first, per-patch spectral truncation, modes kept until the
/// rank cap or the relative error target is met.
DecompositionResult ismd_lowrank(const SymMatrix& a, const Partition& p,
                                 const DecomposeOptions& opts);

/// Learn the zeroing threshold from the entry magnitudes of Omega by 1-D
/// 2-means clustering on log10 of the nonzero absolute entries. Throws
/// gap_not_found (with a histogram payload) when the clusters are closer
/// than opts gap_factor.
double learn_threshold(const CorrelationMatrix& omega, double gap_factor = 10.0);

/// X = G U^T with patch-wise sparse G (from ismd on X X^T) and orthonormal U.
std::pair<ModeSet, Matrix> sparse_orthogonal_factorize(
    const Matrix& x, const Partition& p, const DecomposeOptions& opts = {});

}  // namespace ismd
