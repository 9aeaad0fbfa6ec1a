#include "ismd/joint_diag.hpp"

#include <cmath>

namespace ismd {

namespace {

void validate(const JointDiagProblem& problem) {
  for (const auto& m : problem.matrices) {
    if (m.rows() != problem.dim || m.cols() != problem.dim)
      throw Error(ErrorCode::invalid_argument, "joint_diag: dimension mismatch");
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = j + 1; i < m.rows(); ++i)
        if (m(i, j) != m(j, i))
          throw Error(ErrorCode::invalid_argument, "joint_diag: matrix not symmetric");
  }
}

double off_energy_of(const std::vector<Matrix>& mats) {
  double e = 0.0;
  for (const auto& m : mats)
    e += m.squaredNorm() - m.diagonal().squaredNorm();
  return e;
}

// (c, s) from the working matrices; also reports the objective reduction
// the rotation would achieve on the (p, q) entries.
std::pair<double, double> pair_rotation_impl(const std::vector<Matrix>& mats,
                                             Index p, Index q, double* reduction) {
  // B = L^T L for the K x 2 matrix L with rows [m(p,q), (m(q,q)-m(p,p))/2]
  double b11 = 0, b12 = 0, b22 = 0;
  for (const auto& m : mats) {
    const double x = m(p, q);
    const double y = 0.5 * (m(q, q) - m(p, p));
    b11 += x * x;
    b12 += x * y;
    b22 += y * y;
  }
  if (reduction) *reduction = 0.0;
  if (b11 == 0.0 && b12 == 0.0 && b22 == 0.0) return {1.0, 0.0};

  const double half_tr = 0.5 * (b11 + b22);
  const double disc = std::hypot(0.5 * (b11 - b22), b12);
  const double lam_min = half_tr - disc;

  // eigenvector of [[b11,b12],[b12,b22]] for lam_min; pick the residual row
  // with the larger |lam_min - b_ii| for conditioning
  double w1, w2;
  if (std::abs(b12) > 0.0) {
    if (std::abs(lam_min - b11) >= std::abs(lam_min - b22)) {
      w1 = b12;
      w2 = lam_min - b11;
    } else {
      w1 = lam_min - b22;
      w2 = b12;
    }
  } else {
    if (b11 <= b22) {
      w1 = 1.0;
      w2 = 0.0;
    } else {
      w1 = 0.0;
      w2 = 1.0;
    }
  }
  const double nw = std::hypot(w1, w2);
  w1 /= nw;
  w2 /= nw;
  if (w1 < 0.0 || (w1 == 0.0 && w2 < 0.0)) {
    w1 = -w1;
    w2 = -w2;
  }
  double c, s;
  if (1.0 + w1 <= 0.0) {
    c = 0.0;
    s = 1.0;
  } else {
    c = std::sqrt(0.5 * (1.0 + w1));
    s = w2 / (2.0 * c);
  }
  if (reduction) {
    // new off-diagonal at (p,q) after rotation: (c^2-s^2) m_pq + cs (m_qq - m_pp)
    double before = 0.0, after = 0.0;
    const double z1 = c * c - s * s, z2 = 2.0 * c * s;
    for (const auto& m : mats) {
      const double x = m(p, q);
      const double y = 0.5 * (m(q, q) - m(p, p));
      before += 2.0 * x * x;
      const double npq = z1 * x + z2 * y;
      after += 2.0 * npq * npq;
    }
    *reduction = before - after;
  }
  return {c, s};
}

void apply_rotation(Matrix& m, Index p, Index q, double c, double s) {
  // rows
  const Vector rp = m.row(p), rq = m.row(q);
  m.row(p) = c * rp + s * rq;
  m.row(q) = -s * rp + c * rq;
  // columns
  const Vector cp = m.col(p), cq = m.col(q);
  m.col(p) = c * cp + s * cq;
  m.col(q) = -s * cp + c * cq;
  // keep exact symmetry at the rotated entries
  m(q, p) = m(p, q);
}

}  // namespace

double off_diag_energy(const JointDiagProblem& problem, const Matrix& v) {
  validate(problem);
  if (v.rows() != problem.dim || v.cols() != problem.dim)
    throw Error(ErrorCode::invalid_argument, "off_diag_energy: bad rotation size");
  double e = 0.0;
  for (const auto& m : problem.matrices) {
    const Matrix r = v.transpose() * m * v;
    e += r.squaredNorm() - r.diagonal().squaredNorm();
  }
  return e;
}

std::pair<double, double> pair_rotation(const JointDiagProblem& problem,
                                        Index p, Index q) {
  validate(problem);
  if (!(p >= 0 && p < q && q < problem.dim))
    throw Error(ErrorCode::invalid_argument, "pair_rotation: need 0 <= p < q < dim");
  return pair_rotation_impl(problem.matrices, p, q, nullptr);
}

JointDiagResult joint_diagonalize(const JointDiagProblem& problem, double eps,
                                  int max_sweeps) {
  validate(problem);
  if (!(eps > 0.0))
    throw Error(ErrorCode::invalid_argument, "joint_diagonalize: eps must be > 0");
  const Index n = problem.dim;

  JointDiagResult out;
  out.rotation = Matrix::Identity(n, n);
  std::vector<Matrix> work = problem.matrices;

  double total = 0.0;
  for (const auto& m : work) total += m.squaredNorm();
  const double stop = eps * total;
  const double skip_tol = 1e-16 * total;

  double off = off_energy_of(work);
  if (off <= stop) {
    out.off_diag_energy = off;
    out.converged = true;
    return out;
  }

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool any = false;
    for (Index p = 0; p < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        double reduction = 0.0;
        auto [c, s] = pair_rotation_impl(work, p, q, &reduction);
        if (s == 0.0 && c == 1.0) continue;
        if (reduction < skip_tol) continue;  // avoid cycling on noise
        for (auto& m : work) apply_rotation(m, p, q, c, s);
        // accumulate V: columns p, q rotate
        const Vector vp = out.rotation.col(p), vq = out.rotation.col(q);
        out.rotation.col(p) = c * vp + s * vq;
        out.rotation.col(q) = -s * vp + c * vq;
        any = true;
      }
    }
    out.sweeps = sweep + 1;
    off = off_energy_of(work);
    if (off <= stop) {
      out.converged = true;
      break;
    }
    if (!any) break;  // stationary; caller decides
  }
  out.off_diag_energy = off;
  return out;
}

}  // namespace ismd
