#include "ismd/decompose.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "ismd/parallel.hpp"
#include "json.hpp"

namespace ismd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string echo_options(const DecomposeOptions& o, const std::string& algorithm) {
  nlohmann::json j;
  j["algorithm"] = algorithm;
  j["trunc_tol"] = o.trunc_tol;
  j["jd_eps"] = o.jd_eps;
  j["jd_max_sweeps"] = o.jd_max_sweeps;
  j["pivot_tol"] = o.pivot_tol;
  j["normalize"] = o.normalize;
  if (o.threshold) j["threshold"] = *o.threshold;
  j["snap"] = o.snap;
  j["gap_factor"] = o.gap_factor;
  if (o.rank_cap) j["rank_cap"] = *o.rank_cap;
  if (o.error_target) j["error_target"] = *o.error_target;
  j["coupling_tol"] = o.coupling_tol;
  j["lowrank_local_factor"] = o.lowrank_local_factor;
  j["workers"] = resolve_workers(o.workers);
  return j.dump();
}

struct Pipeline {
  LocalBasisSet bases;
  CorrelationMatrix lambda;
  CorrelationMatrix omega;
  bool jd_converged = true;
  double t_local = 0, t_jd = 0;
};

// Local eigendecompositions, Lambda assembly, per-patch joint
// diagonalization and the rotated correlation matrix Omega. Shared front
// end of all algorithm variants.
Pipeline run_front(const SymMatrix& a, const Partition& p,
                   const DecomposeOptions& opts, double abs_floor) {
  if (p.n() != a.n())
    throw Error(ErrorCode::invalid_argument, "decompose: partition size mismatch");
  Pipeline pipe;

  auto t0 = Clock::now();
  pipe.bases = local_bases(a, p, opts.trunc_tol, abs_floor, opts.workers);
  pipe.t_local = seconds_since(t0);

  t0 = Clock::now();
  pipe.lambda = assemble_lambda(a, p, pipe.bases, opts.workers);

  // joint diagonalization per patch (skipped for K_m <= 1: nothing to rotate)
  const Index m_count = p.size();
  std::vector<char> converged(static_cast<std::size_t>(m_count), 1);
  parallel_for(m_count, opts.workers, [&](Index m) {
    const Index km = pipe.bases.ranks[static_cast<std::size_t>(m)];
    if (km <= 1) return;
    JointDiagProblem prob;
    prob.dim = km;
    for (Index n = 0; n < m_count; ++n) {
      if (n == m || pipe.bases.ranks[static_cast<std::size_t>(n)] == 0) continue;
      const Matrix block = pipe.lambda.block(m, n);
      if (block.cwiseAbs().maxCoeff() == 0.0) continue;  // exact-zero shortcut
      prob.matrices.emplace_back(block * block.transpose());
    }
    if (prob.matrices.empty()) return;
    JointDiagResult jd = joint_diagonalize(prob, opts.jd_eps, opts.jd_max_sweeps);
    pipe.bases.rotations[static_cast<std::size_t>(m)] = jd.rotation;
    if (!jd.converged) converged[static_cast<std::size_t>(m)] = 0;
  });
  pipe.jd_converged =
      std::all_of(converged.begin(), converged.end(), [](char c) { return c != 0; });

  // Omega = D^T Lambda D, block-wise
  const Index kt = pipe.bases.total_rank();
  pipe.omega.data.resize(kt, kt);
  pipe.omega.offsets = pipe.bases.offsets;
  pipe.omega.role = CorrelationMatrix::Role::omega;
  std::vector<std::pair<Index, Index>> pairs;
  for (Index m = 0; m < m_count; ++m) {
    if (pipe.bases.ranks[static_cast<std::size_t>(m)] == 0) continue;
    for (Index n = m; n < m_count; ++n) {
      if (pipe.bases.ranks[static_cast<std::size_t>(n)] == 0) continue;
      pairs.emplace_back(m, n);
    }
  }
  parallel_for(static_cast<Index>(pairs.size()), opts.workers, [&](Index k) {
    const auto [m, n] = pairs[static_cast<std::size_t>(k)];
    const Matrix b = pipe.bases.rotations[static_cast<std::size_t>(m)].transpose() *
                     pipe.lambda.block(m, n) *
                     pipe.bases.rotations[static_cast<std::size_t>(n)];
    pipe.omega.data.block(pipe.omega.offsets[m], pipe.omega.offsets[n], b.rows(),
                          b.cols()) = b;
    if (n != m)
      pipe.omega.data.block(pipe.omega.offsets[n], pipe.omega.offsets[m], b.cols(),
                            b.rows()) = b.transpose();
  });
  pipe.t_jd = seconds_since(t0);
  return pipe;
}

// Column norms of G_ext = diag{H_m D_m} without touching ambient space:
// gram of H_m D_m is D_m^T (H_m^T H_m) D_m.
Vector basis_column_norms(const LocalBasisSet& bases) {
  Vector e(bases.total_rank());
  for (std::size_t m = 0; m < bases.factors.size(); ++m) {
    const Index km = bases.ranks[m];
    if (km == 0) continue;
    const Matrix g = bases.factors[m] * bases.rotations[m];
    for (Index j = 0; j < km; ++j) e[bases.offsets[m] + j] = g.col(j).norm();
  }
  return e;
}

// G = basis * coeff, where basis is the block-diagonal G_ext (optionally
// column-normalized) and coeff is K_t x K in patch-local coordinates.
Matrix assemble_modes(const Partition& p, const LocalBasisSet& bases,
                      const Matrix& coeff, const Vector* col_norms) {
  Matrix g = Matrix::Zero(p.n(), coeff.cols());
  for (Index m = 0; m < p.size(); ++m) {
    const Index km = bases.ranks[static_cast<std::size_t>(m)];
    if (km == 0) continue;
    Matrix local = bases.factors[static_cast<std::size_t>(m)] *
                   bases.rotations[static_cast<std::size_t>(m)];
    if (col_norms) {
      for (Index j = 0; j < km; ++j) {
        const double nj = (*col_norms)[bases.offsets[static_cast<std::size_t>(m)] + j];
        if (nj > 0) local.col(j) /= nj;
      }
    }
    const Matrix contrib =
        local * coeff.middleRows(bases.offsets[static_cast<std::size_t>(m)], km);
    const IndexList& idx = p.patch(m);
    for (std::size_t i = 0; i < idx.size(); ++i)
      g.row(idx[i]) = contrib.row(static_cast<Index>(i));
  }
  return g;
}

void fix_mode_signs(Matrix& g) {
  for (Index k = 0; k < g.cols(); ++k) {
    Index imax = 0;
    g.col(k).cwiseAbs().maxCoeff(&imax);
    if (g(imax, k) < 0) g.col(k) = -g.col(k);
  }
}

DecompositionResult finalize(const SymMatrix& a, const Partition& p,
                             const Pipeline& pipe, Matrix g,
                             const std::string& algorithm,
                             const DecomposeOptions& opts, double threshold_used,
                             Clock::time_point t_start, double t_patchup,
                             double norm_a = 0.0) {
  DecompositionResult r;
  fix_mode_signs(g);
  r.modes.n = p.n();
  r.modes.modes = std::move(g);
  r.rank = r.modes.count();
  r.local_ranks = pipe.bases.ranks;
  r.algorithm = algorithm;
  r.threshold_used = threshold_used;
  r.jd_converged = pipe.jd_converged;
  r.sparseness.reserve(static_cast<std::size_t>(r.rank));
  for (Index k = 0; k < r.rank; ++k)
    r.sparseness.push_back(patch_sparseness(r.modes.modes.col(k), p));
  r.residual = relative_residual(a, r.modes.modes, 1e-10, norm_a);
  r.timings.local_eig = pipe.t_local;
  r.timings.joint_diag = pipe.t_jd;
  r.timings.patch_up = t_patchup;
  r.timings.total = seconds_since(t_start);
  r.options_echo = echo_options(opts, algorithm);
  return r;
}

std::string histogram_json(const std::vector<double>& log_values) {
  nlohmann::json bins = nlohmann::json::array();
  if (!log_values.empty()) {
    const double lo = std::floor(*std::min_element(log_values.begin(), log_values.end()) * 2) / 2;
    const double hi = std::ceil(*std::max_element(log_values.begin(), log_values.end()) * 2) / 2;
    for (double b = lo; b < hi + 0.25; b += 0.5) {
      const auto count = std::count_if(log_values.begin(), log_values.end(), [&](double v) {
        return v >= b && v < b + 0.5;
      });
      if (count > 0)
        bins.push_back({{"log10_lo", b}, {"log10_hi", b + 0.5}, {"count", count}});
    }
  }
  nlohmann::json j;
  j["histogram"] = bins;
  return j.dump();
}

}  // namespace

LocalBasisSet local_bases(const SymMatrix& a, const Partition& p,
                          double trunc_tol, double abs_floor, int workers) {
  const Index m_count = p.size();
  LocalBasisSet b;
  b.factors.resize(static_cast<std::size_t>(m_count));
  b.rotations.resize(static_cast<std::size_t>(m_count));
  b.ranks.resize(static_cast<std::size_t>(m_count));
  parallel_for(m_count, workers, [&](Index m) {
    const IndexList& idx = p.patch(m);
    Matrix h;
    try {
      h = truncated_factor(SymMatrix::symmetrized(a.block(idx, idx)), trunc_tol,
                           abs_floor);
    } catch (const Error& e) {
      throw Error(e.code(), "patch " + std::to_string(m) + ": " + e.what(), e.detail());
    }
    b.ranks[static_cast<std::size_t>(m)] = h.cols();
    b.rotations[static_cast<std::size_t>(m)] =
        Matrix::Identity(h.cols(), h.cols());
    b.factors[static_cast<std::size_t>(m)] = std::move(h);
  });
  b.offsets.resize(static_cast<std::size_t>(m_count) + 1);
  b.offsets[0] = 0;
  for (Index m = 0; m < m_count; ++m)
    b.offsets[static_cast<std::size_t>(m) + 1] =
        b.offsets[static_cast<std::size_t>(m)] + b.ranks[static_cast<std::size_t>(m)];
  return b;
}

CorrelationMatrix assemble_lambda(const SymMatrix& a, const Partition& p,
                                  const LocalBasisSet& bases, int workers) {
  const Index m_count = p.size();
  const Index kt = bases.total_rank();
  CorrelationMatrix lam;
  lam.data = Matrix::Zero(kt, kt);
  lam.offsets = bases.offsets;
  lam.role = CorrelationMatrix::Role::lambda;

  std::vector<Matrix> pinv(static_cast<std::size_t>(m_count));
  parallel_for(m_count, workers, [&](Index m) {
    if (bases.ranks[static_cast<std::size_t>(m)] == 0) return;
    try {
      pinv[static_cast<std::size_t>(m)] =
          pseudo_inverse_factor(bases.factors[static_cast<std::size_t>(m)]);
    } catch (const Error& e) {
      throw Error(e.code(), "patch " + std::to_string(m) + ": " + e.what(), e.detail());
    }
  });

  std::vector<std::pair<Index, Index>> pairs;
  for (Index m = 0; m < m_count; ++m) {
    if (bases.ranks[static_cast<std::size_t>(m)] == 0) continue;
    for (Index n = m; n < m_count; ++n) {
      if (bases.ranks[static_cast<std::size_t>(n)] == 0) continue;
      pairs.emplace_back(m, n);
    }
  }
  parallel_for(static_cast<Index>(pairs.size()), workers, [&](Index k) {
    const auto [m, n] = pairs[static_cast<std::size_t>(k)];
    const Matrix amn = a.block(p.patch(m), p.patch(n));
    const Matrix block = pinv[static_cast<std::size_t>(m)] * amn *
                         pinv[static_cast<std::size_t>(n)].transpose();
    lam.data.block(lam.offsets[m], lam.offsets[n], block.rows(), block.cols()) = block;
    if (n != m)
      lam.data.block(lam.offsets[n], lam.offsets[m], block.cols(), block.rows()) =
          block.transpose();
  });
  return lam;
}

std::vector<Matrix> sigma_family(const CorrelationMatrix& lambda, Index m) {
  if (lambda.role != CorrelationMatrix::Role::lambda)
    throw Error(ErrorCode::invalid_argument, "sigma_family: needs a lambda matrix");
  if (m < 0 || m >= lambda.blocks())
    throw Error(ErrorCode::invalid_argument, "sigma_family: patch index out of range");
  std::vector<Matrix> out;
  for (Index n = 0; n < lambda.blocks(); ++n) {
    if (n == m) continue;
    const Matrix b = lambda.block(m, n);
    out.emplace_back(b * b.transpose());
  }
  return out;
}

double learn_threshold(const CorrelationMatrix& omega, double gap_factor) {
  std::vector<double> logs;
  const Matrix& w = omega.data;
  for (Index j = 0; j < w.cols(); ++j)
    for (Index i = 0; i <= j; ++i) {
      const double v = std::abs(w(i, j));
      if (v > 0.0) logs.push_back(std::log10(v));
    }
  if (logs.empty())
    throw Error(ErrorCode::invalid_argument, "learn_threshold: omega has no nonzero entries");
  std::sort(logs.begin(), logs.end());
  const std::size_t n = logs.size();
  if (n < 2)
    throw Error(ErrorCode::gap_not_found,
                "learn_threshold: too few entries to form two clusters",
                histogram_json(logs));

  // exact 1-D 2-means: clusters are contiguous after sorting
  std::vector<double> pre(n + 1, 0.0), pre2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    pre[i + 1] = pre[i] + logs[i];
    pre2[i + 1] = pre2[i] + logs[i] * logs[i];
  }
  auto sse = [&](std::size_t lo, std::size_t hi) {  // [lo, hi)
    const double cnt = static_cast<double>(hi - lo);
    const double s = pre[hi] - pre[lo];
    return (pre2[hi] - pre2[lo]) - s * s / cnt;
  };
  std::size_t best_split = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s + 1 < n; ++s) {
    const double cost = sse(0, s + 1) + sse(s + 1, n);
    if (cost < best) {
      best = cost;
      best_split = s;
    }
  }
  const double lo_edge = logs[best_split];
  const double hi_edge = logs[best_split + 1];
  if (hi_edge - lo_edge < std::log10(gap_factor))
    throw Error(ErrorCode::gap_not_found,
                "learn_threshold: inter-cluster gap below gap_factor",
                histogram_json(logs));
  return std::pow(10.0, 0.5 * (lo_edge + hi_edge));
}

DecompositionResult ismd(const SymMatrix& a, const Partition& p,
                         const DecomposeOptions& opts) {
  const auto t_start = Clock::now();
  Pipeline pipe = run_front(a, p, opts, 0.0);

  const auto t0 = Clock::now();
  Matrix omega_work = pipe.omega.data;
  Vector col_norms;
  if (opts.normalize) {
    col_norms = basis_column_norms(pipe.bases);
    omega_work = col_norms.asDiagonal() * omega_work * col_norms.asDiagonal();
    for (Index j = 0; j < omega_work.cols(); ++j)  // exact symmetry after scaling
      for (Index i = j + 1; i < omega_work.rows(); ++i)
        omega_work(j, i) = omega_work(i, j);
  }
  const double maxdiag =
      omega_work.rows() ? omega_work.diagonal().maxCoeff() : 0.0;
  PivotedCholesky pc =
      pivoted_cholesky(SymMatrix(std::move(omega_work)), opts.pivot_tol * maxdiag);
  Matrix g = assemble_modes(p, pipe.bases, pc.permuted_factor(),
                            opts.normalize ? &col_norms : nullptr);
  const double t_patchup = seconds_since(t0);
  return finalize(a, p, pipe, std::move(g), "ismd", opts, 0.0, t_start, t_patchup);
}

DecompositionResult ismd_threshold(const SymMatrix& a, const Partition& p,
                                   const DecomposeOptions& opts) {
  const auto t_start = Clock::now();
  const double abs_floor = opts.trunc_tol * std::max(a.max_diagonal(), 0.0);
  Pipeline pipe = run_front(a, p, opts, abs_floor);

  const auto t0 = Clock::now();
  double eps_th = 0.0;
  if (opts.threshold) {
    eps_th = *opts.threshold;
  } else {
    try {
      eps_th = learn_threshold(pipe.omega, opts.gap_factor);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::gap_not_found) throw;
      // single cluster of O(1) entries means there is nothing to clean;
      // anything smaller would be indistinguishable from signal, so rethrow
      double min_nonzero = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < pipe.omega.data.cols(); ++j)
        for (Index i = 0; i <= j; ++i) {
          const double v = std::abs(pipe.omega.data(i, j));
          if (v > 0.0) min_nonzero = std::min(min_nonzero, v);
        }
      if (!(min_nonzero >= 0.25)) throw;
      eps_th = 0.0;
    }
  }

  Matrix omega_work = pipe.omega.data;
  if (eps_th > 0.0)
    omega_work = omega_work.unaryExpr(
        [&](double v) { return std::abs(v) < eps_th ? 0.0 : v; });

  if (opts.snap) {
    bool identifiable = true;
    for (Index j = 0; j < omega_work.cols() && identifiable; ++j)
      for (Index i = 0; i <= j; ++i) {
        const double v = std::abs(omega_work(i, j));
        if (v != 0.0 && (v < 0.5 || v > 1.5)) {
          identifiable = false;
          break;
        }
      }
    if (identifiable)
      omega_work = omega_work.unaryExpr([](double v) {
        return v > 0.5 ? 1.0 : (v < -0.5 ? -1.0 : 0.0);
      });
  }

  Vector col_norms;
  if (opts.normalize) {
    col_norms = basis_column_norms(pipe.bases);
    omega_work = col_norms.asDiagonal() * omega_work * col_norms.asDiagonal();
  }
  for (Index j = 0; j < omega_work.cols(); ++j)
    for (Index i = j + 1; i < omega_work.rows(); ++i)
      omega_work(j, i) = omega_work(i, j);

  const double maxdiag =
      omega_work.rows() ? omega_work.diagonal().maxCoeff() : 0.0;
  const double pivot_tol = std::max(opts.pivot_tol * maxdiag, eps_th);
  PivotedCholesky pc = pivoted_cholesky(SymMatrix(std::move(omega_work)), pivot_tol);
  Matrix g = assemble_modes(p, pipe.bases, pc.permuted_factor(),
                            opts.normalize ? &col_norms : nullptr);
  const double t_patchup = seconds_since(t0);
  return finalize(a, p, pipe, std::move(g), "threshold", opts, eps_th, t_start,
                  t_patchup);
}

DecompositionResult ismd_lowrank(const SymMatrix& a, const Partition& p,
                                 const DecomposeOptions& opts) {
  if (!opts.rank_cap && !opts.error_target)
    throw Error(ErrorCode::invalid_argument,
                "ismd_lowrank: needs a rank cap or an error target");
  if (opts.error_target && !(*opts.error_target > 0))
    throw Error(ErrorCode::invalid_argument, "ismd_lowrank: error target must be > 0");

  const auto t_start = Clock::now();
  const double norm_a = spectral_norm(a);
  const double abs_floor =
      opts.error_target ? opts.lowrank_local_factor * *opts.error_target * norm_a
                        : 0.0;
  Pipeline pipe = run_front(a, p, opts, abs_floor);

  const auto t0 = Clock::now();
  const Index kt = pipe.bases.total_rank();
  const Index m_count = p.size();

  Vector col_norms = basis_column_norms(pipe.bases);  // normalization always on
  Matrix w = col_norms.asDiagonal() * pipe.omega.data * col_norms.asDiagonal();
  for (Index j = 0; j < kt; ++j)
    for (Index i = j + 1; i < kt; ++i) w(j, i) = w(i, j);

  const double maxdiag0 = kt ? w.diagonal().maxCoeff() : 0.0;
  Vector scale0(kt);
  for (Index i = 0; i < kt; ++i) scale0[i] = std::sqrt(std::max(w(i, i), 1e-300));
  std::vector<Index> block_of(static_cast<std::size_t>(kt));
  for (Index m = 0; m < m_count; ++m)
    for (Index j = pipe.bases.offsets[static_cast<std::size_t>(m)];
         j < pipe.bases.offsets[static_cast<std::size_t>(m) + 1]; ++j)
      block_of[static_cast<std::size_t>(j)] = m;

  // 1) extract cross-patch couplings as pivoted-Cholesky columns; couplings
  //    measured in correlation units against the original diagonal scale
  std::vector<Vector> coeff_cols;
  const double theta = opts.coupling_tol;
  for (Index guard = 0; guard < 4 * kt; ++guard) {
    Index bi = -1, bj = -1;
    double bc = 0.0;
    for (Index jj = 0; jj < kt; ++jj)
      for (Index ii = 0; ii < jj; ++ii) {
        if (block_of[static_cast<std::size_t>(ii)] ==
            block_of[static_cast<std::size_t>(jj)])
          continue;
        const double c = std::abs(w(ii, jj)) / (scale0[ii] * scale0[jj]);
        if (c > bc) {
          bc = c;
          bi = ii;
          bj = jj;
        }
      }
    if (bc < theta) break;
    const Index pvt = w(bi, bi) >= w(bj, bj) ? bi : bj;
    if (!(w(pvt, pvt) > 1e-10 * maxdiag0)) break;
    Vector col = w.col(pvt);
    for (Index i = 0; i < kt; ++i) {
      const bool same_patch = block_of[static_cast<std::size_t>(i)] ==
                              block_of[static_cast<std::size_t>(pvt)];
      if (!same_patch && std::abs(col[i]) < theta * scale0[i] * scale0[pvt])
        col[i] = 0.0;  // keep interface modes patch-local
    }
    col /= std::sqrt(w(pvt, pvt));
    w.noalias() -= col * col.transpose();
    coeff_cols.push_back(std::move(col));
  }

  // 2) per-patch spectral truncation of the residual in ambient metric:
  //    eigendecomposition of B^{1/2} S B^{1/2} with B the local basis gram
  const double eig_floor = 1e-12 * std::max(maxdiag0, 0.0);
  for (Index m = 0; m < m_count; ++m) {
    const Index km = pipe.bases.ranks[static_cast<std::size_t>(m)];
    if (km == 0) continue;
    const Index off = pipe.bases.offsets[static_cast<std::size_t>(m)];
    const Matrix s = w.block(off, off, km, km);
    const Matrix gm = pipe.bases.factors[static_cast<std::size_t>(m)] *
                      pipe.bases.rotations[static_cast<std::size_t>(m)];
    Matrix gram = gm.transpose() * gm;
    for (Index jj = 0; jj < km; ++jj)
      for (Index ii = 0; ii < km; ++ii)
        gram(ii, jj) /= col_norms[off + ii] * col_norms[off + jj];
    Eigen::SelfAdjointEigenSolver<Matrix> gs(gram);
    Vector ge = gs.eigenvalues().cwiseMax(0.0);
    const Matrix root = gs.eigenvectors() * ge.cwiseSqrt().asDiagonal() *
                        gs.eigenvectors().transpose();
    Vector ge_inv(km);
    for (Index i = 0; i < km; ++i)
      ge_inv[i] = ge[i] > 1e-14 ? 1.0 / std::sqrt(ge[i]) : 0.0;
    const Matrix root_inv =
        gs.eigenvectors() * ge_inv.asDiagonal() * gs.eigenvectors().transpose();
    Matrix ssym = root * s * root;
    ssym = 0.5 * (ssym + ssym.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(ssym);
    for (Index k = km - 1; k >= 0; --k) {
      const double lam = es.eigenvalues()[k];
      if (lam <= eig_floor) break;
      Vector col = Vector::Zero(kt);
      col.segment(off, km) = root_inv * es.eigenvectors().col(k) * std::sqrt(lam);
      coeff_cols.push_back(std::move(col));
    }
  }

  if (coeff_cols.empty())
    throw Error(ErrorCode::infeasible_target,
                "ismd_lowrank: no modes above the local truncation floor");

  // 3) order by mode energy and select the rank
  Matrix coeff(kt, static_cast<Index>(coeff_cols.size()));
  for (std::size_t k = 0; k < coeff_cols.size(); ++k)
    coeff.col(static_cast<Index>(k)) = coeff_cols[k];
  Matrix g_all = assemble_modes(p, pipe.bases, coeff, &col_norms);
  std::vector<Index> order(static_cast<std::size_t>(g_all.cols()));
  std::iota(order.begin(), order.end(), 0);
  Vector energy(g_all.cols());
  for (Index k = 0; k < g_all.cols(); ++k) energy[k] = g_all.col(k).squaredNorm();
  std::stable_sort(order.begin(), order.end(),
                   [&](Index x, Index y) { return energy[x] > energy[y]; });
  Matrix g_sorted(g_all.rows(), g_all.cols());
  for (Index k = 0; k < g_all.cols(); ++k)
    g_sorted.col(k) = g_all.col(order[static_cast<std::size_t>(k)]);

  Index available = g_sorted.cols();
  Index cap = opts.rank_cap ? std::min(*opts.rank_cap, available) : available;
  if (cap < 1) cap = available ? 1 : 0;
  Index rank = cap;
  if (opts.error_target) {
    const double target = *opts.error_target;
    const double res_cap = relative_residual(a, g_sorted.leftCols(cap), 1e-10, norm_a);
    if (res_cap > target) {
      nlohmann::json detail;
      detail["best_achievable_residual"] = res_cap;
      detail["modes_available"] = cap;
      throw Error(ErrorCode::infeasible_target,
                  "ismd_lowrank: error target " + std::to_string(target) +
                      " unreachable; best achievable " + std::to_string(res_cap),
                  detail.dump());
    }
    // smallest prefix meeting the target (residual treated as monotone in r)
    Index lo = 1, hi = cap;
    while (lo < hi) {
      const Index mid = (lo + hi) / 2;
      const double res = relative_residual(a, g_sorted.leftCols(mid), 1e-10, norm_a);
      if (res <= target)
        hi = mid;
      else
        lo = mid + 1;
    }
    rank = lo;
  }

  Matrix g = g_sorted.leftCols(rank);
  const double t_patchup = seconds_since(t0);
  return finalize(a, p, pipe, std::move(g), "lowrank", opts, 0.0, t_start,
                  t_patchup, norm_a);
}

std::pair<ModeSet, Matrix> sparse_orthogonal_factorize(
    const Matrix& x, const Partition& p, const DecomposeOptions& opts) {
  if (p.n() != x.rows())
    throw Error(ErrorCode::invalid_argument,
                "sparse_orthogonal_factorize: partition does not match rows");
  const SymMatrix a = SymMatrix::symmetrized(x * x.transpose());
  DecompositionResult r = ismd(a, p, opts);
  const Matrix& g = r.modes.modes;
  const Matrix pinv = pseudo_inverse_factor(g);
  Matrix u = x.transpose() * pinv.transpose();
  return {std::move(r.modes), std::move(u)};
}

}  // namespace ismd
