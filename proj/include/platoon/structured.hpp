#pragma once

#include <cstddef>
#include <vector>

#include "platoon/model.hpp"

namespace platoon {

/// 1-based, strictly increasing positions into a column-major vec.
using IndexSet = std::vector<std::size_t>;

Matrix kron(const Matrix& A, const Matrix& B);

/// Column stacking.
Vector vec(const Matrix& A);
Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

/// 1-based position of entry (r, c) (both 0-based) in vec of a matrix with
/// `rows` rows, and its inverse.
std::size_t vec_position(Eigen::Index r, Eigen::Index c, Eigen::Index rows);
std::pair<Eigen::Index, Eigen::Index> vec_entry(std::size_t position,
                                                Eigen::Index rows);

class SparsityMask {
 public:
  SparsityMask() = default;
  SparsityMask(Eigen::Index rows, Eigen::Index cols, bool value = false);

  static SparsityMask dense(Eigen::Index rows, Eigen::Index cols);
  /// Entries that are exactly nonzero in `pattern`.
  static SparsityMask from_nonzeros(const Matrix& pattern);

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  bool allowed(Eigen::Index r, Eigen::Index c) const;
  void set(Eigen::Index r, Eigen::Index c, bool value = true);

  IndexSet index_set() const;
  std::size_t count() const;

  /// Mask of [this other], side by side.
  SparsityMask hconcat(const SparsityMask& other) const;

  bool operator==(const SparsityMask&) const = default;

 private:
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  std::vector<char> bits_;  // column-major
};

/// Entries of vec(A) at the mask's index set. Throws StructureError when A has
/// a nonzero entry outside the mask.
Vector vec_star(const Matrix& A, const SparsityMask& mask);
/// Inverse of vec_star: places the entries back into a zero matrix.
Matrix scatter(const Vector& reduced, const SparsityMask& mask);

/// E * reduced, with E the 0/1 embedding whose columns are e_j, j in S.
Vector embed(const Vector& reduced, const IndexSet& S, std::size_t full_size);
/// E' Y E.
Matrix submatrix(const Matrix& Y, const IndexSet& S);
/// E' b.
Vector subvector(const Vector& b, const IndexSet& S);

struct ChainMasks {
  SparsityMask F;  // block diagonal
  SparsityMask M;  // block tridiagonal

  /// Index set of vec([F M]); F's entries precede M's.
  IndexSet combined_index_set() const { return F.hconcat(M).index_set(); }
};

/// Masks for the delayed-sharing chain. Chains longer than three subsystems
/// are rejected unless `experimental` is set: the masks are still well
/// defined there but the gains are no longer claimed optimal.
ChainMasks chain_masks(const SubsystemPartition& partition,
                       bool experimental = false);

struct DefinitenessCheck {
  bool positive_definite = false;
  double min_eigenvalue = 0.0;
};

/// Throws ParameterError if Y is asymmetric beyond 1e-8 (relative).
DefinitenessCheck check_positive_definite(const Matrix& Y);
inline bool is_positive_definite(const Matrix& Y) {
  return check_positive_definite(Y).positive_definite;
}

}  // namespace platoon
