#pragma once

#include <cstdint>

#include "ismd/partition.hpp"

namespace ismd {

/// Synthetic field fixture: ground-truth modes, the assembled covariance
/// A = sum g_k g_k^T, and a JSON metadata sidecar (features, seed,
/// certification results).
struct FieldFixture {
  IndexList grid;  // 1- or 2-D extent
  ModeSet truth;
  SymMatrix a;
  std::string meta_json;
};

struct LocalizedConfig {
  int channels = 8;
  int inclusions = 9;
  bool multi_blob_mode = true;   // one mode with two disjoint blobs
  Index channel_width_min = 1;
  Index channel_width_max = 2;
  Index inclusion_min = 2;       // inclusion side range (cells)
  Index inclusion_max = 3;
  /// Partitions the fixture must be certified regular-sparse on; the
  /// first one is also used for the pairwise-identifiability requirement
  /// and to lay out channel bands.
  std::vector<IndexList> certify_patch_shapes = {{12, 12}, {6, 6}};
  bool require_identifiable = true;
  int max_attempts = 64;
};

/// Indicator-valued channel strips, rectangular inclusions and optionally a
/// disjoint-blob mode, procedurally placed from the seed with rejection of
/// placements violating the requested certificates.
FieldFixture gen_localized_field(const IndexList& grid, const LocalizedConfig& cfg,
                                 std::uint64_t seed);

/// Localized fixture plus two global sine modes appended to the truth.
FieldFixture gen_global_plus_local(const IndexList& grid, const LocalizedConfig& cfg,
                                   std::uint64_t seed);

/// A_ij = exp(-|x_i - x_j| / l) on n equispaced points (endpoints included).
SymMatrix gen_exponential_kernel(Index n, double l, double lo = -1.0,
                                 double hi = 1.0);

/// Symmetric noise with spectral norm scaled to 1: (T + T^T)/2 for T with
/// i.i.d. Uniform[-1,1] entries, renormalized by power iteration.
Matrix unit_spectral_noise(Index n, std::uint64_t seed);

/// A + eps * noise, with the noise from unit_spectral_noise(seed).
SymMatrix add_noise(const SymMatrix& a, double eps, std::uint64_t seed);

/// Direct Def.-style certificate: the ground-truth modes restricted to every
/// patch are linearly independent (numerical rank check).
bool certify_regular_sparse(const ModeSet& truth, const Partition& p,
                            double rank_tol = 1e-10);

/// All support-patch sets pairwise distinct.
bool pairwise_identifiable(const ModeSet& modes, const Partition& p);

}  // namespace ismd
