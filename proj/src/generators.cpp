#include "ismd/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ismd/linalg.hpp"
#include "json.hpp"

namespace ismd {

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Index uniform_index(std::mt19937_64& rng, Index lo, Index hi) {  // inclusive
  return lo + static_cast<Index>(uniform01(rng) * static_cast<double>(hi - lo + 1));
}

template <typename T>
void shuffle_vec(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[static_cast<std::size_t>(uniform_index(rng, 0, static_cast<Index>(i) - 1))]);
}

struct Feature {
  std::string type;                     // channel_h | channel_v | inclusion | blob_pair
  std::vector<std::array<Index, 4>> rects;  // (r0, c0, rows, cols)
};

Vector indicator_mode(const IndexList& grid, const Feature& f) {
  const Index rows = grid[0], cols = grid[1];
  Vector g = Vector::Zero(rows * cols);
  for (const auto& r : f.rects)
    for (Index i = r[0]; i < r[0] + r[2]; ++i)
      for (Index j = r[1]; j < r[1] + r[3]; ++j) g[i * cols + j] = 1.0;
  return g;
}

nlohmann::json feature_json(const Feature& f) {
  nlohmann::json j;
  j["type"] = f.type;
  j["rects"] = nlohmann::json::array();
  for (const auto& r : f.rects)
    j["rects"].push_back({{"row", r[0]}, {"col", r[1]}, {"rows", r[2]}, {"cols", r[3]}});
  return j;
}

// Accumulate sum g g^T exploiting indicator sparsity.
void add_outer_sparse(Matrix& a, const Vector& g) {
  IndexList sup;
  for (Index i = 0; i < g.size(); ++i)
    if (g[i] != 0.0) sup.push_back(i);
  for (Index i : sup)
    for (Index j : sup) a(i, j) += g[i] * g[j];
}

struct Placement {
  std::vector<Feature> features;
  Matrix modes;  // n x K
};

Placement place_features(const IndexList& grid, const LocalizedConfig& cfg,
                         std::mt19937_64& rng) {
  const Index rows = grid[0], cols = grid[1];
  const IndexList& certify = cfg.certify_patch_shapes.empty()
                                 ? IndexList{rows, cols}
                                 : cfg.certify_patch_shapes.front();
  const Index pr = certify[0], pc = certify.size() > 1 ? certify[1] : certify[0];
  if (rows % pr != 0 || cols % pc != 0)
    throw Error(ErrorCode::invalid_argument,
                "gen_localized_field: certify patch shape does not divide the grid");
  const Index nbr = rows / pr, nbc = cols / pc;

  const int ch_h = (cfg.channels + 1) / 2;
  const int ch_v = cfg.channels - ch_h;
  if (ch_h > nbr || ch_v > nbc)
    throw Error(ErrorCode::invalid_argument,
                "gen_localized_field: more channels than distinct patch bands");
  if (cfg.channel_width_max > pr || cfg.channel_width_max > pc ||
      cfg.channel_width_min < 1)
    throw Error(ErrorCode::invalid_argument,
                "gen_localized_field: channel width outside the grid/patch range");
  if (cfg.inclusion_max > pr || cfg.inclusion_max > pc || cfg.inclusion_min < 1)
    throw Error(ErrorCode::invalid_argument,
                "gen_localized_field: inclusion size outside the patch range");

  Placement out;

  std::vector<Index> hbands(static_cast<std::size_t>(nbr));
  std::iota(hbands.begin(), hbands.end(), 0);
  shuffle_vec(hbands, rng);
  hbands.resize(static_cast<std::size_t>(ch_h));
  std::sort(hbands.begin(), hbands.end());
  for (Index b : hbands) {
    const Index w = uniform_index(rng, cfg.channel_width_min, cfg.channel_width_max);
    const Index off = uniform_index(rng, 0, pr - w);
    out.features.push_back({"channel_h", {{b * pr + off, 0, w, cols}}});
  }
  std::vector<Index> vbands(static_cast<std::size_t>(nbc));
  std::iota(vbands.begin(), vbands.end(), 0);
  shuffle_vec(vbands, rng);
  vbands.resize(static_cast<std::size_t>(ch_v));
  std::sort(vbands.begin(), vbands.end());
  for (Index b : vbands) {
    const Index w = uniform_index(rng, cfg.channel_width_min, cfg.channel_width_max);
    const Index off = uniform_index(rng, 0, pc - w);
    out.features.push_back({"channel_v", {{0, b * pc + off, rows, w}}});
  }

  const int patch_demand = cfg.inclusions + (cfg.multi_blob_mode ? 2 : 0);
  if (patch_demand > nbr * nbc)
    throw Error(ErrorCode::invalid_argument,
                "gen_localized_field: more inclusions than patches");
  std::vector<Index> cells(static_cast<std::size_t>(nbr * nbc));
  std::iota(cells.begin(), cells.end(), 0);
  shuffle_vec(cells, rng);

  auto rect_in_patch = [&](Index cell) -> std::array<Index, 4> {
    const Index br = cell / nbc, bc = cell % nbc;
    const Index hr = uniform_index(rng, cfg.inclusion_min, std::min(cfg.inclusion_max, pr));
    const Index hc = uniform_index(rng, cfg.inclusion_min, std::min(cfg.inclusion_max, pc));
    const Index r0 = br * pr + uniform_index(rng, 0, pr - hr);
    const Index c0 = bc * pc + uniform_index(rng, 0, pc - hc);
    return {r0, c0, hr, hc};
  };

  int used = 0;
  for (int k = 0; k < cfg.inclusions; ++k)
    out.features.push_back({"inclusion", {rect_in_patch(cells[static_cast<std::size_t>(used++)])}});
  if (cfg.multi_blob_mode) {
    const auto r1 = rect_in_patch(cells[static_cast<std::size_t>(used++)]);
    const auto r2 = rect_in_patch(cells[static_cast<std::size_t>(used++)]);
    out.features.push_back({"blob_pair", {r1, r2}});
  }

  const Index n = rows * cols;
  out.modes.resize(n, static_cast<Index>(out.features.size()));
  for (std::size_t k = 0; k < out.features.size(); ++k)
    out.modes.col(static_cast<Index>(k)) = indicator_mode(grid, out.features[k]);
  return out;
}

FieldFixture build_fixture(const IndexList& grid, const LocalizedConfig& cfg,
                           std::uint64_t seed, bool with_globals) {
  if (grid.size() != 2 || grid[0] <= 0 || grid[1] <= 0)
    throw Error(ErrorCode::invalid_argument, "field fixtures need a 2-D grid");
  const Index rows = grid[0], cols = grid[1], n = rows * cols;

  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(attempt));
    Placement placed = place_features(grid, cfg, rng);

    Matrix modes = placed.modes;
    if (with_globals) {
      Matrix withg(n, modes.cols() + 2);
      withg.leftCols(modes.cols()) = modes;
      constexpr double kPi = 3.14159265358979323846;
      Vector f1(n), f2(n);
      for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) {
          const double x1 = (static_cast<double>(c) + 0.5) / static_cast<double>(cols);
          const double x2 = (static_cast<double>(r) + 0.5) / static_cast<double>(rows);
          f1[r * cols + c] = 0.5 * std::sin(2 * kPi * x1 + 4 * kPi * x2);
          f2[r * cols + c] = 0.5 * std::sin(4 * kPi * x1 + 2 * kPi * x2);
        }
      withg.col(modes.cols()) = f1;
      withg.col(modes.cols() + 1) = f2;
      modes = std::move(withg);
    }
    ModeSet truth{n, modes};

    bool ok = true;
    nlohmann::json certs = nlohmann::json::array();
    for (std::size_t ci = 0; ci < cfg.certify_patch_shapes.size(); ++ci) {
      const Partition part = Partition::uniform_grid(grid, cfg.certify_patch_shapes[ci]);
      const bool rs = certify_regular_sparse(truth, part);
      bool ident = true;
      if (ci == 0 && cfg.require_identifiable) {
        // global sine modes are unidentifiable by design; check the localized part
        ModeSet locals{n, placed.modes};
        ident = pairwise_identifiable(with_globals ? locals : truth, part);
      }
      certs.push_back({{"patch_shape", cfg.certify_patch_shapes[ci]},
                       {"regular_sparse", rs},
                       {"pairwise_identifiable_localized", ident}});
      ok = ok && rs && ident;
    }
    if (!ok) continue;

    Matrix a = Matrix::Zero(n, n);
    for (Index k = 0; k < placed.modes.cols(); ++k)
      add_outer_sparse(a, placed.modes.col(k));
    if (with_globals)
      for (Index k = placed.modes.cols(); k < modes.cols(); ++k)
        a.noalias() += modes.col(k) * modes.col(k).transpose();

    nlohmann::json meta;
    meta["kind"] = with_globals ? "global_plus_local" : "localized";
    meta["grid"] = grid;
    meta["k"] = modes.cols();
    meta["seed"] = seed;
    meta["attempt"] = attempt;
    meta["certificates"] = certs;
    meta["features"] = nlohmann::json::array();
    for (const auto& f : placed.features) meta["features"].push_back(feature_json(f));
    if (with_globals) meta["global_modes"] = 2;

    return FieldFixture{grid, std::move(truth), SymMatrix::symmetrized(a),
                        meta.dump()};
  }
  throw Error(ErrorCode::invalid_argument,
              "gen_localized_field: no placement satisfied the certificates after " +
                  std::to_string(cfg.max_attempts) + " attempts");
}

}  // namespace

FieldFixture gen_localized_field(const IndexList& grid, const LocalizedConfig& cfg,
                                 std::uint64_t seed) {
  return build_fixture(grid, cfg, seed, false);
}

FieldFixture gen_global_plus_local(const IndexList& grid, const LocalizedConfig& cfg,
                                   std::uint64_t seed) {
  return build_fixture(grid, cfg, seed, true);
}

SymMatrix gen_exponential_kernel(Index n, double l, double lo, double hi) {
  if (n < 2) throw Error(ErrorCode::invalid_argument, "gen_exponential_kernel: n >= 2");
  if (!(l > 0)) throw Error(ErrorCode::invalid_argument, "gen_exponential_kernel: l > 0");
  Vector x(n);
  for (Index i = 0; i < n; ++i)
    x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  Matrix a(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) a(i, j) = std::exp(-std::abs(x[i] - x[j]) / l);
  return SymMatrix(std::move(a));
}

Matrix unit_spectral_noise(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix t(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) t(i, j) = 2.0 * uniform01(rng) - 1.0;
  Matrix sym = 0.5 * (t + t.transpose());
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) sym(j, i) = sym(i, j);
  const double norm = spectral_norm(SymMatrix(sym), 1e-12);
  if (norm > 0) sym /= norm;
  return sym;
}

SymMatrix add_noise(const SymMatrix& a, double eps, std::uint64_t seed) {
  if (eps < 0) throw Error(ErrorCode::invalid_argument, "add_noise: eps >= 0");
  if (eps == 0.0) return a;
  Matrix noisy = a.data() + eps * unit_spectral_noise(a.n(), seed);
  for (Index j = 0; j < noisy.cols(); ++j)
    for (Index i = j + 1; i < noisy.rows(); ++i) noisy(j, i) = noisy(i, j);
  return SymMatrix(std::move(noisy));
}

bool certify_regular_sparse(const ModeSet& truth, const Partition& p,
                            double rank_tol) {
  for (Index m = 0; m < p.size(); ++m) {
    const IndexList& idx = p.patch(m);
    std::vector<Index> nz;
    for (Index k = 0; k < truth.count(); ++k) {
      const Vector col = truth.modes.col(k);
      const double tol = default_support_tol(col);
      for (Index i : idx)
        if (std::abs(col[i]) > tol) {
          nz.push_back(k);
          break;
        }
    }
    const Index d = static_cast<Index>(nz.size());
    if (d == 0) continue;
    if (d > static_cast<Index>(idx.size())) return false;
    Matrix r(static_cast<Index>(idx.size()), d);
    for (Index k = 0; k < d; ++k)
      for (std::size_t i = 0; i < idx.size(); ++i)
        r(static_cast<Index>(i), k) = truth.modes(idx[i], nz[static_cast<std::size_t>(k)]);
    Eigen::SelfAdjointEigenSolver<Matrix> es(r.transpose() * r);
    const Vector& w = es.eigenvalues();
    if (w[0] <= rank_tol * w[d - 1]) return false;  // rank deficient
  }
  return true;
}

bool pairwise_identifiable(const ModeSet& modes, const Partition& p) {
  std::vector<std::vector<Index>> sups;
  for (Index k = 0; k < modes.count(); ++k)
    sups.push_back(support_patches(modes.modes.col(k), p));
  for (std::size_t i = 0; i < sups.size(); ++i)
    for (std::size_t j = i + 1; j < sups.size(); ++j)
      if (sups[i] == sups[j]) return false;
  return true;
}

}  // namespace ismd
