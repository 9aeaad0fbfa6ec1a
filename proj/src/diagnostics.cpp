#include "ismd/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ismd/linalg.hpp"
#include "ismd/parallel.hpp"

namespace ismd {

IntegerSpectrumReport integer_spectrum_test(const CorrelationMatrix& lambda,
                                            double tol) {
  if (lambda.role != CorrelationMatrix::Role::lambda)
    throw Error(ErrorCode::invalid_argument,
                "integer_spectrum_test: needs a lambda matrix");
  IntegerSpectrumReport rep;
  rep.eigenvalues = sym_spectrum(SymMatrix(lambda.data));
  rep.max_deviation = 0.0;
  for (Index i = 0; i < rep.eigenvalues.size(); ++i) {
    const double v = rep.eigenvalues[i];
    const double nearest = std::max(0.0, std::round(v));
    rep.max_deviation = std::max(rep.max_deviation, std::abs(v - nearest));
  }
  rep.pass = rep.max_deviation <= tol;
  return rep;
}

ModeMatchReport match_modes(const ModeSet& candidate, const ModeSet& truth) {
  if (candidate.n != truth.n)
    throw Error(ErrorCode::invalid_argument, "match_modes: dimension mismatch");
  const Index kc = candidate.count(), kt = truth.count();
  Matrix corr(kc, kt);
  for (Index i = 0; i < kc; ++i) {
    const double ni = candidate.modes.col(i).norm();
    for (Index j = 0; j < kt; ++j) {
      const double nj = truth.modes.col(j).norm();
      const double dot = candidate.modes.col(i).dot(truth.modes.col(j));
      corr(i, j) = (ni > 0 && nj > 0) ? std::abs(dot) / (ni * nj) : 0.0;
    }
  }

  ModeMatchReport rep;
  std::vector<char> used_c(static_cast<std::size_t>(kc), 0), used_t(static_cast<std::size_t>(kt), 0);
  const Index pairs = std::min(kc, kt);
  for (Index step = 0; step < pairs; ++step) {
    Index bi = -1, bj = -1;
    double best = -1.0;
    for (Index i = 0; i < kc; ++i) {
      if (used_c[static_cast<std::size_t>(i)]) continue;
      for (Index j = 0; j < kt; ++j) {
        if (used_t[static_cast<std::size_t>(j)]) continue;
        if (corr(i, j) > best) {
          best = corr(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    used_c[static_cast<std::size_t>(bi)] = 1;
    used_t[static_cast<std::size_t>(bj)] = 1;
    const Vector& g = truth.modes.col(bj);
    const Vector& gh = candidate.modes.col(bi);
    const double sign = gh.dot(g) >= 0 ? 1.0 : -1.0;
    const double ng = g.norm();
    const double err = ng > 0 ? (sign * gh - g).norm() / ng : gh.norm();
    rep.assignment.emplace_back(static_cast<int>(bi), static_cast<int>(bj));
    rep.errors.push_back(err);
    rep.correlations.push_back(best);
    if (best < 0.9) rep.flagged.push_back(static_cast<int>(bi));
  }
  for (Index i = 0; i < kc; ++i)
    if (!used_c[static_cast<std::size_t>(i)]) rep.unmatched_candidate.push_back(static_cast<int>(i));
  for (Index j = 0; j < kt; ++j)
    if (!used_t[static_cast<std::size_t>(j)]) rep.unmatched_truth.push_back(static_cast<int>(j));

  double sq = 0.0;
  for (double e : rep.errors) {
    rep.err_inf = std::max(rep.err_inf, e);
    sq += e * e;
  }
  rep.err_2 = std::sqrt(sq);
  return rep;
}

double reconstruction_error(const SymMatrix& a, const ModeSet& modes) {
  if (modes.n != a.n())
    throw Error(ErrorCode::invalid_argument, "reconstruction_error: dimension mismatch");
  return relative_residual(a, modes.modes);
}

ConsistencyReport support_consistency_report(const ModeSet& coarse_modes,
                                             const ModeSet& fine_modes,
                                             const Partition& pc,
                                             const Partition& pf,
                                             double equal_tol) {
  if (!pf.is_refinement_of(pc))
    throw Error(ErrorCode::invalid_argument,
                "support_consistency_report: fine partition is not a refinement");
  ModeMatchReport match = match_modes(fine_modes, coarse_modes);

  // support sets of coarse modes, for identifiability on the coarse partition
  std::vector<std::vector<Index>> coarse_sup;
  for (Index k = 0; k < coarse_modes.count(); ++k)
    coarse_sup.push_back(support_patches(coarse_modes.modes.col(k), pc));

  ConsistencyReport rep;
  for (std::size_t i = 0; i < match.assignment.size(); ++i) {
    const int fk = match.assignment[i].first;
    const int ck = match.assignment[i].second;
    ConsistencyPair pr;
    pr.fine_mode = fk;
    pr.coarse_mode = ck;

    const Vector gf = fine_modes.modes.col(fk);
    const Vector gc = coarse_modes.modes.col(ck);
    pr.coarse_supports_equal =
        support_patches(gf, pc) == coarse_sup[static_cast<std::size_t>(ck)];

    const auto fine_f = support_patches(gf, pf);
    const auto fine_c = support_patches(gc, pf);
    pr.fine_supports_nested = std::includes(fine_c.begin(), fine_c.end(),
                                            fine_f.begin(), fine_f.end());

    int same_support = 0;
    for (const auto& s : coarse_sup)
      if (s == coarse_sup[static_cast<std::size_t>(ck)]) ++same_support;
    pr.identifiable = same_support == 1;
    if (pr.identifiable) {
      const double sign = gf.dot(gc) >= 0 ? 1.0 : -1.0;
      pr.sign_error = (sign * gf - gc).norm() / std::max(gc.norm(), 1e-300);
      pr.equal_up_to_sign = pr.sign_error <= equal_tol;
    }
    const bool ok = pr.coarse_supports_equal && pr.fine_supports_nested &&
                    (!pr.identifiable || pr.equal_up_to_sign);
    if (!ok) ++rep.violations;
    rep.pairs.push_back(pr);
  }
  rep.violations += static_cast<int>(match.unmatched_candidate.size() +
                                     match.unmatched_truth.size());
  rep.pass = rep.violations == 0;
  return rep;
}

NoiseSlopeResult noise_slope(const FieldFixture& fixture, const Partition& p,
                             const std::vector<double>& eps_list,
                             const std::vector<std::uint64_t>& seeds,
                             const DecomposeOptions& base_opts) {
  if (seeds.empty())
    throw Error(ErrorCode::invalid_argument, "noise_slope: needs at least one seed");
  NoiseSlopeResult out;
  out.supports_exact = true;

  std::vector<std::vector<Index>> clean_sup;
  for (Index k = 0; k < fixture.truth.count(); ++k)
    clean_sup.push_back(support_patches(fixture.truth.modes.col(k), p));

  for (std::uint64_t seed : seeds) {
    const Matrix noise = unit_spectral_noise(fixture.a.n(), seed);
    for (double eps : eps_list) {
      NoiseSlopePoint pt;
      pt.eps = eps;
      pt.seed = seed;
      if (eps == 0.0) {
        pt.error = "exact (excluded from fit)";
        out.points.push_back(pt);
        continue;
      }
      try {
        Matrix noisy = fixture.a.data() + eps * noise;
        for (Index j = 0; j < noisy.cols(); ++j)
          for (Index i = j + 1; i < noisy.rows(); ++i) noisy(j, i) = noisy(i, j);
        DecompositionResult r =
            ismd_threshold(SymMatrix(std::move(noisy)), p, base_opts);
        ModeMatchReport match = match_modes(r.modes, fixture.truth);
        pt.err_2 = match.err_2;
        pt.supports_exact = match.unmatched_truth.empty();
        for (const auto& [ck, tk] : match.assignment) {
          if (support_patches(r.modes.modes.col(ck), p) !=
              clean_sup[static_cast<std::size_t>(tk)]) {
            pt.supports_exact = false;
            break;
          }
        }
        pt.ok = true;
      } catch (const Error& e) {
        pt.error = e.what();
      }
      if (pt.ok && !pt.supports_exact) out.supports_exact = false;
      out.points.push_back(pt);
    }
  }

  // least squares on (log eps, log err2)
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& pt : out.points) {
    if (!pt.ok || pt.eps <= 0.0 || pt.err_2 <= 0.0) continue;
    const double x = std::log(pt.eps), y = std::log(pt.err_2);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2)
    throw Error(ErrorCode::invalid_argument,
                "noise_slope: fewer than two valid points for the fit");
  out.fitted_points = n;
  out.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return out;
}

std::vector<TimingRow> timing_profile(
    const SymMatrix& a,
    const std::vector<std::pair<std::string, Partition>>& partitions,
    const DecomposeOptions& opts) {
  std::vector<TimingRow> rows;
  for (const auto& [label, part] : partitions) {
    DecompositionResult r = ismd(a, part, opts);
    TimingRow row;
    row.label = label;
    row.patches = part.size();
    row.t_local_eig = r.timings.local_eig;
    row.t_joint_diag = r.timings.joint_diag;
    row.t_patchup = r.timings.patch_up;
    row.t_total = r.timings.total;
    row.workers = resolve_workers(opts.workers);
    row.rank = r.rank;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ismd
