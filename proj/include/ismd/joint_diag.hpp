#pragma once

#include "ismd/types.hpp"

namespace ismd {

/// A family of symmetric matrices to be diagonalized by one orthogonal V.
struct JointDiagProblem {
  Index dim = 0;
  std::vector<Matrix> matrices;
};

struct JointDiagResult {
  Matrix rotation;              // orthogonal V
  double off_diag_energy = 0;   // final objective value
  int sweeps = 0;
  bool converged = false;
};

/// sum_k sum_{i != j} (V^T M_k V)_{ij}^2
double off_diag_energy(const JointDiagProblem& problem, const Matrix& v);

/// Optimal Givens pair (c, s) for indices p < q of the problem's matrices:
/// the smallest-singular-value right singular vector w of the K x 2 matrix
/// with rows [M_k(p,q), (M_k(q,q) - M_k(p,p))/2], sign-fixed to w(1) >= 0,
/// then c = sqrt((1+w1)/2), s = w2 / (2c). Returns (1, 0) when the pair
/// matrix vanishes.
std::pair<double, double> pair_rotation(const JointDiagProblem& problem,
                                        Index p, Index q);

/// Jacobi-like sweeps over all pairs; objective monotonically non-increasing.
/// Converged iff the objective reaches eps * sum_k ||M_k||_F^2.
JointDiagResult joint_diagonalize(const JointDiagProblem& problem,
                                  double eps = 1e-12, int max_sweeps = 50);

}  // namespace ismd
