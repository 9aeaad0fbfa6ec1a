#pragma once

#include "ismd/decompose.hpp"
#include "ismd/generators.hpp"

namespace ismd {

/// Necessary condition for regular-sparseness: every eigenvalue of Lambda
/// within `tol` of a non-negative integer.
struct IntegerSpectrumReport {
  bool pass = false;
  Vector eigenvalues;     // descending
  double max_deviation = 0.0;
};
IntegerSpectrumReport integer_spectrum_test(const CorrelationMatrix& lambda,
                                            double tol = 1e-6);

/// Greedy maximum-|correlation| assignment between candidate and truth
/// modes; per-pair sign chosen to minimize the error. Pairs with
/// correlation below 0.9 are flagged for review.
struct ModeMatchReport {
  std::vector<std::pair<int, int>> assignment;  // (candidate, truth)
  std::vector<double> errors;                   // relative l2, per pair
  std::vector<double> correlations;
  double err_inf = 0.0;
  double err_2 = 0.0;
  std::vector<int> unmatched_candidate;
  std::vector<int> unmatched_truth;
  std::vector<int> flagged;  // candidate indices with correlation < 0.9
};
ModeMatchReport match_modes(const ModeSet& candidate, const ModeSet& truth);

/// ||A - G G^T||_2 / ||A||_2 via power iteration.
double reconstruction_error(const SymMatrix& a, const ModeSet& modes);

/// Verifies the refinement-consistency relations between decompositions on
/// a coarse partition and on a refinement: matched modes are supported on
/// the same coarse patches, fine supports nest inside coarse supports, and
/// modes identifiable on the coarse partition agree up to sign.
struct ConsistencyPair {
  int fine_mode = -1, coarse_mode = -1;
  bool coarse_supports_equal = false;
  bool fine_supports_nested = false;
  bool identifiable = false;        // on the coarse partition
  bool equal_up_to_sign = false;    // checked when identifiable
  double sign_error = 0.0;
};
struct ConsistencyReport {
  std::vector<ConsistencyPair> pairs;
  int violations = 0;
  bool pass = false;
};
ConsistencyReport support_consistency_report(const ModeSet& coarse_modes,
                                             const ModeSet& fine_modes,
                                             const Partition& pc,
                                             const Partition& pf,
                                             double equal_tol = 1e-8);

/// Noise-robustness protocol: run the thresholding variant at each noise
/// level, match against the fixture truth, and fit the log-log slope of
/// Err_2 against eps.
struct NoiseSlopePoint {
  double eps = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  double err_2 = 0.0;
  bool supports_exact = false;
  std::string error;  // failure reason when !ok
};
struct NoiseSlopeResult {
  double slope = 0.0;
  std::vector<NoiseSlopePoint> points;
  int fitted_points = 0;
  bool supports_exact = false;  // across all successful runs
};
NoiseSlopeResult noise_slope(const FieldFixture& fixture, const Partition& p,
                             const std::vector<double>& eps_list,
                             const std::vector<std::uint64_t>& seeds,
                             const DecomposeOptions& base_opts);

/// Wall-clock stage timings of the decomposition across partitions.
struct TimingRow {
  std::string label;
  Index patches = 0;
  double t_local_eig = 0, t_joint_diag = 0, t_patchup = 0, t_total = 0;
  int workers = 1;
  Index rank = 0;
};
std::vector<TimingRow> timing_profile(
    const SymMatrix& a,
    const std::vector<std::pair<std::string, Partition>>& partitions,
    const DecomposeOptions& opts);

}  // namespace ismd
