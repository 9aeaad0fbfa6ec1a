#pragma once

#include <optional>

#include "ismd/types.hpp"

namespace ismd {

/// Disjoint cover of the index set [n] by non-empty patches. Patches are
/// arbitrary index sets; the uniform grid constructors are conveniences
/// (row-major flattening for 2-D grids).
class Partition {
 public:
  Partition(Index n, std::vector<IndexList> patches);

  /// grid_shape and patch_shape are 1- or 2-element extents; patch_shape
  /// must divide grid_shape component-wise.
  static Partition uniform_grid(const IndexList& grid_shape,
                                const IndexList& patch_shape);
  static Partition single(Index n);   // M = 1
  static Partition finest(Index n);   // M = n

  Index n() const { return n_; }
  Index size() const { return static_cast<Index>(patches_.size()); }
  const IndexList& patch(Index m) const { return patches_.at(static_cast<std::size_t>(m)); }
  const std::vector<IndexList>& patches() const { return patches_; }

  /// True iff every patch of *this is a subset of some patch of `coarse`.
  bool is_refinement_of(const Partition& coarse) const;

  std::string to_json() const;
  static Partition from_json(const std::string& text);

 private:
  Index n_;
  std::vector<IndexList> patches_;
};

/// Columns of a decomposition A = sum g_k g_k^T with the ambient dimension.
struct ModeSet {
  Index n = 0;
  Matrix modes;  // n x K

  Index count() const { return modes.cols(); }
};

/// Default support threshold: 1e-9 times the mode's max-abs entry.
double default_support_tol(const Vector& mode);

/// Number of patches on which `mode` exceeds `support_tol` in max-abs.
/// With no explicit tolerance the relative default above is used.
int patch_sparseness(const Vector& mode, const Partition& p,
                     std::optional<double> support_tol = std::nullopt);

/// Sorted list of patch indices where the mode is nonzero.
std::vector<Index> support_patches(const Vector& mode, const Partition& p,
                                   std::optional<double> support_tol = std::nullopt);

/// Number of modes nonzero on patch m.
int local_dimension(const ModeSet& modes, const Partition& p, Index m,
                    std::optional<double> support_tol = std::nullopt);

/// Partition of [K]: two modes share a group iff their support-patch sets
/// are equal. Groups ordered by smallest member; members ascending.
std::vector<std::vector<int>> unidentifiable_groups(
    const ModeSet& modes, const Partition& p,
    std::optional<double> support_tol = std::nullopt);

}  // namespace ismd
