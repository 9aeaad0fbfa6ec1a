#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ismd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

enum class ErrorCode {
  invalid_argument,
  not_psd,
  singular,
  no_convergence,
  gap_not_found,
  infeasible_target,
  io,
  internal,
};

/// Library error carrying a machine-readable code plus an optional JSON
/// detail payload (e.g. the entry-magnitude histogram for gap_not_found).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::string detail = {})
      : std::runtime_error(what), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const { return code_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// Dense symmetric matrix. Entries are guaranteed symmetric exactly as
/// stored; construct via `SymMatrix(m)` (throws on asymmetry) or
/// `SymMatrix::symmetrized(m)`.
class SymMatrix {
 public:
  explicit SymMatrix(Matrix a) : a_(std::move(a)) {
    if (a_.rows() != a_.cols())
      throw Error(ErrorCode::invalid_argument, "SymMatrix: matrix not square");
    for (Index j = 0; j < a_.cols(); ++j)
      for (Index i = j + 1; i < a_.rows(); ++i)
        if (a_(i, j) != a_(j, i))
          throw Error(ErrorCode::invalid_argument,
                      "SymMatrix: entries not symmetric as stored");
  }

  static SymMatrix symmetrized(const Matrix& m) {
    if (m.rows() != m.cols())
      throw Error(ErrorCode::invalid_argument, "SymMatrix: matrix not square");
    SymMatrix s;
    s.a_ = 0.5 * (m + m.transpose());
    // force bit-exact symmetry (rounding of x+y vs y+x is already symmetric,
    // but keep the lower triangle authoritative)
    for (Index j = 0; j < s.a_.cols(); ++j)
      for (Index i = j + 1; i < s.a_.rows(); ++i) s.a_(j, i) = s.a_(i, j);
    return s;
  }

  Index n() const { return a_.rows(); }
  const Matrix& data() const { return a_; }
  double operator()(Index i, Index j) const { return a_(i, j); }

  double max_diagonal() const {
    return a_.rows() ? a_.diagonal().maxCoeff() : 0.0;
  }

  /// Gathered submatrix A(rows, cols); index lists need not be contiguous.
  Matrix block(const IndexList& rows, const IndexList& cols) const {
    Matrix b(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j)
      for (std::size_t i = 0; i < rows.size(); ++i)
        b(static_cast<Index>(i), static_cast<Index>(j)) = a_(rows[i], cols[j]);
    return b;
  }

 private:
  SymMatrix() = default;
  Matrix a_;
};

}  // namespace ismd
