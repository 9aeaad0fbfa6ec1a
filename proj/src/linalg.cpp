#include "ismd/linalg.hpp"

#include <lapacke.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>

extern "C" void openblas_set_num_threads(int);

namespace ismd {

namespace detail {

void ensure_single_threaded_blas() {
  static std::atomic<bool> done{false};
  bool expected = false;
  if (done.compare_exchange_strong(expected, true)) openblas_set_num_threads(1);
}

}  // namespace detail

namespace {

void check_symmetric(const SymMatrix&) {
  // SymMatrix construction already guarantees exact storage symmetry.
}

// dsyevd on a column-major copy; ascending eigenvalues from LAPACK.
void dsyevd_full(const SymMatrix& a, Vector& w, Matrix* v) {
  detail::ensure_single_threaded_blas();
  const Index n = a.n();
  w.resize(n);
  if (n == 0) {
    if (v) v->resize(0, 0);
    return;
  }
  Matrix work = a.data();  // column-major, overwritten
  lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, v ? 'V' : 'N', 'L',
                                   static_cast<lapack_int>(n), work.data(),
                                   static_cast<lapack_int>(n), w.data());
  if (info != 0)
    throw Error(ErrorCode::no_convergence,
                "sym_eig: dsyevd failed to converge (info=" +
                    std::to_string(info) + ", residual subblock unresolved)");
  if (v) *v = std::move(work);
}

void fix_vector_signs(Matrix& v) {
  for (Index j = 0; j < v.cols(); ++j) {
    Index imax = 0;
    v.col(j).cwiseAbs().maxCoeff(&imax);
    if (v(imax, j) < 0) v.col(j) = -v.col(j);
  }
}

}  // namespace

EigenResult sym_eig(const SymMatrix& a, double trunc_tol, double abs_floor) {
  if (!(trunc_tol > 0.0 && trunc_tol < 1.0))
    throw Error(ErrorCode::invalid_argument, "sym_eig: trunc_tol must be in (0,1)");
  check_symmetric(a);
  const Index n = a.n();

  Vector w;
  Matrix v;
  if (n == 1) {  // fast path for singleton patches
    w.resize(1);
    w[0] = a(0, 0);
    v = Matrix::Ones(1, 1);
  } else {
    dsyevd_full(a, w, &v);
    w.reverseInPlace();
    v = v.rowwise().reverse().eval();
  }

  EigenResult r;
  const double lead = n ? w[0] : 0.0;
  const double cut = std::max(trunc_tol * std::max(lead, 0.0), abs_floor);
  Index rank = 0;
  while (rank < n && w[rank] > cut) ++rank;
  r.rank = rank;
  r.discarded_max = rank < n ? std::max(w[rank], 0.0) : 0.0;
  r.values = w.head(rank);
  r.vectors = v.leftCols(rank);
  fix_vector_signs(r.vectors);
  return r;
}

Vector sym_spectrum(const SymMatrix& a) {
  Vector w;
  dsyevd_full(a, w, nullptr);
  w.reverseInPlace();
  return w;
}

EigenResult sym_eig_partial(const SymMatrix& a, Index max_rank, double trunc_tol) {
  detail::ensure_single_threaded_blas();
  const Index n = a.n();
  if (max_rank < 1 || max_rank > n)
    throw Error(ErrorCode::invalid_argument, "sym_eig_partial: bad rank cap");
  Matrix work = a.data();
  Vector w(n);
  Matrix z(n, max_rank);
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(max_rank));
  lapack_int found = 0;
  lapack_int info = LAPACKE_dsyevr(
      LAPACK_COL_MAJOR, 'V', 'I', 'L', static_cast<lapack_int>(n), work.data(),
      static_cast<lapack_int>(n), 0.0, 0.0,
      static_cast<lapack_int>(n - max_rank + 1), static_cast<lapack_int>(n), 0.0,
      &found, w.data(), z.data(), static_cast<lapack_int>(n), isuppz.data());
  if (info != 0)
    throw Error(ErrorCode::no_convergence,
                "sym_eig_partial: dsyevr failed (info=" + std::to_string(info) + ")");
  EigenResult r;
  const Index got = found;
  Vector vals(got);
  Matrix vecs(n, got);
  for (Index k = 0; k < got; ++k) {  // dsyevr returns ascending
    vals[k] = w[got - 1 - k];
    vecs.col(k) = z.col(got - 1 - k);
  }
  const double lead = got ? vals[0] : 0.0;
  const double cut = trunc_tol * std::max(lead, 0.0);
  Index rank = 0;
  while (rank < got && vals[rank] > cut) ++rank;
  r.rank = rank;
  r.discarded_max = rank < got ? std::max(vals[rank], 0.0) : 0.0;
  r.values = vals.head(rank);
  r.vectors = vecs.leftCols(rank);
  fix_vector_signs(r.vectors);
  return r;
}

Matrix truncated_factor(const SymMatrix& a, double trunc_tol, double abs_floor) {
  const Index n = a.n();
  if (n == 1) {
    const double d = a(0, 0);
    if (d < -trunc_tol) throw Error(ErrorCode::not_psd, "truncated_factor: negative diagonal");
    const double cut = std::max(trunc_tol * std::max(d, 0.0), abs_floor);
    Matrix h(1, d > cut ? 1 : 0);
    if (h.cols() == 1) h(0, 0) = std::sqrt(d);
    return h;
  }
  Vector w;
  Matrix v;
  dsyevd_full(a, w, &v);
  const double lead = n ? w[n - 1] : 0.0;
  if (n && w[0] < -trunc_tol * std::max(lead, 0.0))
    throw Error(ErrorCode::not_psd,
                "truncated_factor: eigenvalue " + std::to_string(w[0]) +
                    " below -trunc_tol * lambda_max");
  const double cut = std::max(trunc_tol * std::max(lead, 0.0), abs_floor);
  Index rank = 0;
  while (rank < n && w[n - 1 - rank] > cut) ++rank;
  Matrix h(n, rank);
  for (Index k = 0; k < rank; ++k)
    h.col(k) = v.col(n - 1 - k) * std::sqrt(w[n - 1 - k]);
  fix_vector_signs(h);
  return h;
}

PivotedCholesky pivoted_cholesky(const SymMatrix& a, double pivot_tol) {
  const Index n = a.n();
  Vector d = a.data().diagonal();
  Index cap = std::min<Index>(n, 128);
  Matrix l = Matrix::Zero(n, cap);       // columns in original row order
  std::vector<Index> pivots;
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  pivots.reserve(static_cast<std::size_t>(n));

  Index rank = 0;
  while (rank < n) {
    if (rank == cap) {
      cap = std::min(n, cap * 2);
      l.conservativeResize(Eigen::NoChange, cap);
      l.rightCols(cap - rank).setZero();
    }
    Index p = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i)
      if (!used[static_cast<std::size_t>(i)] && d[i] > best) {  // strict > breaks ties to smallest index
        best = d[i];
        p = i;
      }
    if (p < 0 || best <= pivot_tol) {
      double dmin = 0.0;
      for (Index i = 0; i < n; ++i)
        if (!used[static_cast<std::size_t>(i)]) dmin = std::min(dmin, d[i]);
      if (dmin < -pivot_tol)
        throw Error(ErrorCode::not_psd,
                    "pivoted_cholesky: residual diagonal " + std::to_string(dmin) +
                        " below -pivot_tol");
      break;
    }
    // left-looking column update: c = A(:,p) - L[:,0:r] * L(p,0:r)^T
    Vector c = a.data().col(p);
    if (rank > 0)
      c.noalias() -= l.leftCols(rank) * l.row(p).head(rank).transpose();
    const double piv = std::sqrt(best);
    c /= piv;
    for (Index j = 0; j < rank; ++j) c[pivots[static_cast<std::size_t>(j)]] = 0.0;
    c[p] = piv;
    l.col(rank) = c;
    d -= c.cwiseAbs2();
    d[p] = 0.0;
    used[static_cast<std::size_t>(p)] = 1;
    pivots.push_back(p);
    ++rank;
  }

  PivotedCholesky out;
  out.rank = rank;
  out.permutation = pivots;
  for (Index i = 0; i < n; ++i)
    if (!used[static_cast<std::size_t>(i)]) out.permutation.push_back(i);
  out.factor.resize(n, rank);
  for (Index i = 0; i < n; ++i) out.factor.row(i) = l.row(out.permutation[i]).head(rank);
  return out;
}

Matrix pseudo_inverse_factor(const Matrix& h, double rank_tol_rel) {
  if (h.cols() == 0) return Matrix(0, h.rows());
  const Matrix gram = h.transpose() * h;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  if (es.info() != Eigen::Success)
    throw Error(ErrorCode::no_convergence, "pseudo_inverse_factor: gram eig failed");
  const Vector& w = es.eigenvalues();  // ascending
  const double wmax = w[w.size() - 1];
  if (wmax <= 0.0 || w[0] <= rank_tol_rel * rank_tol_rel * wmax || w[0] <= 0.0)
    throw Error(ErrorCode::singular,
                "pseudo_inverse_factor: rank-deficient factor (sigma_min/sigma_max = " +
                    std::to_string(w[0] > 0 ? std::sqrt(w[0] / wmax) : 0.0) + ")");
  return es.eigenvectors() * w.cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose() * h.transpose();
}

double spectral_norm_sym(const std::function<Vector(const Vector&)>& apply,
                         Index n, double tol, int max_iter, std::uint64_t seed) {
  if (n == 0) return 0.0;
  std::mt19937_64 rng(seed);
  Vector x(n);
  for (Index i = 0; i < n; ++i)
    x[i] = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
  double nx = x.norm();
  if (nx == 0) x[0] = 1.0, nx = 1.0;
  x /= nx;
  double prev = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector y = apply(apply(x));  // squared operator: converges to lambda_max^2
    const double ny = y.norm();
    if (ny == 0.0) return 0.0;
    const double est = std::sqrt(ny);
    y /= ny;
    x.swap(y);
    if (it > 0 && std::abs(est - prev) <= tol * std::max(est, 1e-300)) return est;
    prev = est;
  }
  return prev;
}

double spectral_norm(const SymMatrix& a, double tol) {
  const Matrix& m = a.data();
  return spectral_norm_sym([&](const Vector& x) { return Vector(m * x); },
                           a.n(), tol);
}

double relative_residual(const SymMatrix& a, const Matrix& g, double tol,
                         double norm_a) {
  const Matrix& m = a.data();
  const double na = norm_a > 0.0 ? norm_a : spectral_norm(a, tol);
  if (na == 0.0) return 0.0;
  auto apply = [&](const Vector& x) {
    Vector y = m * x;
    if (g.cols() > 0) y.noalias() -= g * (g.transpose() * x);
    return y;
  };
  return spectral_norm_sym(apply, a.n(), tol) / na;
}

}  // namespace ismd
