#include "ismd/partition.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "json.hpp"

namespace ismd {

Partition::Partition(Index n, std::vector<IndexList> patches)
    : n_(n), patches_(std::move(patches)) {
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  Index covered = 0;
  for (const auto& p : patches_) {
    if (p.empty())
      throw Error(ErrorCode::invalid_argument, "Partition: empty patch");
    for (Index i : p) {
      if (i < 0 || i >= n)
        throw Error(ErrorCode::invalid_argument, "Partition: index out of range");
      if (seen[static_cast<std::size_t>(i)])
        throw Error(ErrorCode::invalid_argument, "Partition: patches not disjoint");
      seen[static_cast<std::size_t>(i)] = 1;
      ++covered;
    }
  }
  if (covered != n)
    throw Error(ErrorCode::invalid_argument, "Partition: patches do not cover [n]");
}

Partition Partition::uniform_grid(const IndexList& grid_shape,
                                  const IndexList& patch_shape) {
  if (grid_shape.empty() || grid_shape.size() > 2 ||
      grid_shape.size() != patch_shape.size())
    throw Error(ErrorCode::invalid_argument,
                "uniform_grid: shapes must both be 1-D or 2-D");
  for (std::size_t d = 0; d < grid_shape.size(); ++d) {
    if (grid_shape[d] <= 0 || patch_shape[d] <= 0 ||
        grid_shape[d] % patch_shape[d] != 0)
      throw Error(ErrorCode::invalid_argument,
                  "uniform_grid: patch shape must divide grid shape");
  }
  if (grid_shape.size() == 1) {
    const Index n = grid_shape[0], w = patch_shape[0];
    std::vector<IndexList> patches;
    for (Index s = 0; s < n; s += w) {
      IndexList p(static_cast<std::size_t>(w));
      std::iota(p.begin(), p.end(), s);
      patches.push_back(std::move(p));
    }
    return Partition(n, std::move(patches));
  }
  const Index rows = grid_shape[0], cols = grid_shape[1];
  const Index pr = patch_shape[0], pc = patch_shape[1];
  std::vector<IndexList> patches;
  for (Index br = 0; br < rows; br += pr)
    for (Index bc = 0; bc < cols; bc += pc) {
      IndexList p;
      p.reserve(static_cast<std::size_t>(pr * pc));
      for (Index r = br; r < br + pr; ++r)
        for (Index c = bc; c < bc + pc; ++c) p.push_back(r * cols + c);
      patches.push_back(std::move(p));
    }
  return Partition(rows * cols, std::move(patches));
}

Partition Partition::single(Index n) {
  IndexList all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  return Partition(n, {std::move(all)});
}

Partition Partition::finest(Index n) {
  std::vector<IndexList> patches;
  patches.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) patches.push_back({i});
  return Partition(n, std::move(patches));
}

bool Partition::is_refinement_of(const Partition& coarse) const {
  if (n_ != coarse.n()) return false;
  std::vector<Index> owner(static_cast<std::size_t>(n_));
  for (Index m = 0; m < coarse.size(); ++m)
    for (Index i : coarse.patch(m)) owner[static_cast<std::size_t>(i)] = m;
  for (const auto& p : patches_) {
    const Index o = owner[static_cast<std::size_t>(p.front())];
    for (Index i : p)
      if (owner[static_cast<std::size_t>(i)] != o) return false;
  }
  return true;
}

std::string Partition::to_json() const {
  nlohmann::json j;
  j["n"] = n_;
  j["patches"] = patches_;
  return j.dump();
}

Partition Partition::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::io, std::string("Partition: bad JSON: ") + e.what());
  }
  if (!j.contains("n") || !j.contains("patches"))
    throw Error(ErrorCode::io, "Partition: JSON must have 'n' and 'patches'");
  return Partition(j["n"].get<Index>(), j["patches"].get<std::vector<IndexList>>());
}

double default_support_tol(const Vector& mode) {
  return 1e-9 * mode.cwiseAbs().maxCoeff();
}

namespace {
double resolve_tol(const Vector& mode, std::optional<double> tol) {
  return tol ? *tol : default_support_tol(mode);
}
}  // namespace

int patch_sparseness(const Vector& mode, const Partition& p,
                     std::optional<double> support_tol) {
  if (mode.size() != p.n())
    throw Error(ErrorCode::invalid_argument, "patch_sparseness: length mismatch");
  const double tol = resolve_tol(mode, support_tol);
  int s = 0;
  for (Index m = 0; m < p.size(); ++m) {
    for (Index i : p.patch(m))
      if (std::abs(mode[i]) > tol) {
        ++s;
        break;
      }
  }
  return s;
}

std::vector<Index> support_patches(const Vector& mode, const Partition& p,
                                   std::optional<double> support_tol) {
  if (mode.size() != p.n())
    throw Error(ErrorCode::invalid_argument, "support_patches: length mismatch");
  const double tol = resolve_tol(mode, support_tol);
  std::vector<Index> out;
  for (Index m = 0; m < p.size(); ++m) {
    for (Index i : p.patch(m))
      if (std::abs(mode[i]) > tol) {
        out.push_back(m);
        break;
      }
  }
  return out;
}

int local_dimension(const ModeSet& modes, const Partition& p, Index m,
                    std::optional<double> support_tol) {
  if (modes.n != p.n())
    throw Error(ErrorCode::invalid_argument, "local_dimension: dimension mismatch");
  if (m < 0 || m >= p.size())
    throw Error(ErrorCode::invalid_argument, "local_dimension: patch index out of range");
  int d = 0;
  for (Index k = 0; k < modes.count(); ++k) {
    const Vector col = modes.modes.col(k);
    const double tol = resolve_tol(col, support_tol);
    for (Index i : p.patch(m))
      if (std::abs(col[i]) > tol) {
        ++d;
        break;
      }
  }
  return d;
}

std::vector<std::vector<int>> unidentifiable_groups(
    const ModeSet& modes, const Partition& p, std::optional<double> support_tol) {
  std::map<std::vector<Index>, std::vector<int>> by_support;
  std::vector<std::vector<Index>> order;
  for (Index k = 0; k < modes.count(); ++k) {
    auto sup = support_patches(modes.modes.col(k), p, support_tol);
    auto it = by_support.find(sup);
    if (it == by_support.end()) {
      by_support.emplace(sup, std::vector<int>{static_cast<int>(k)});
      order.push_back(sup);
    } else {
      it->second.push_back(static_cast<int>(k));
    }
  }
  std::vector<std::vector<int>> groups;
  groups.reserve(order.size());
  for (const auto& sup : order) groups.push_back(by_support[sup]);
  return groups;
}

}  // namespace ismd
