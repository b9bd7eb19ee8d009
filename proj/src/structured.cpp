#include "platoon/structured.hpp"

#include <string>

#include "platoon/error.hpp"

namespace platoon {

Matrix kron(const Matrix& A, const Matrix& B) {
  Matrix K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

Vector vec(const Matrix& A) {
  return Eigen::Map<const Vector>(A.data(), A.size());
}

Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) throw ParameterError("unvec: size mismatch");
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

std::size_t vec_position(Eigen::Index r, Eigen::Index c, Eigen::Index rows) {
  return static_cast<std::size_t>(c * rows + r) + 1;
}

std::pair<Eigen::Index, Eigen::Index> vec_entry(std::size_t position,
                                                Eigen::Index rows) {
  if (position == 0 || rows <= 0)
    throw ParameterError("vec_entry: positions are 1-based");
  const auto p = static_cast<Eigen::Index>(position - 1);
  return {p % rows, p / rows};
}

// ---------------------------------------------------------------------------

SparsityMask::SparsityMask(Eigen::Index rows, Eigen::Index cols, bool value)
    : rows_(rows), cols_(cols),
      bits_(static_cast<std::size_t>(rows * cols), value ? 1 : 0) {}

SparsityMask SparsityMask::dense(Eigen::Index rows, Eigen::Index cols) {
  return SparsityMask(rows, cols, true);
}

SparsityMask SparsityMask::from_nonzeros(const Matrix& pattern) {
  SparsityMask m(pattern.rows(), pattern.cols());
  for (Eigen::Index c = 0; c < pattern.cols(); ++c)
    for (Eigen::Index r = 0; r < pattern.rows(); ++r)
      if (pattern(r, c) != 0.0) m.set(r, c);
  return m;
}

bool SparsityMask::allowed(Eigen::Index r, Eigen::Index c) const {
  return bits_.at(static_cast<std::size_t>(c * rows_ + r)) != 0;
}

void SparsityMask::set(Eigen::Index r, Eigen::Index c, bool value) {
  bits_.at(static_cast<std::size_t>(c * rows_ + r)) = value ? 1 : 0;
}

IndexSet SparsityMask::index_set() const {
  IndexSet S;
  for (std::size_t p = 0; p < bits_.size(); ++p)
    if (bits_[p]) S.push_back(p + 1);
  return S;
}

std::size_t SparsityMask::count() const {
  std::size_t k = 0;
  for (char b : bits_) k += b ? 1 : 0;
  return k;
}

SparsityMask SparsityMask::hconcat(const SparsityMask& other) const {
  if (other.rows_ != rows_) throw ParameterError("hconcat: row mismatch");
  SparsityMask out(rows_, cols_ + other.cols_);
  std::copy(bits_.begin(), bits_.end(), out.bits_.begin());
  std::copy(other.bits_.begin(), other.bits_.end(),
            out.bits_.begin() + static_cast<std::ptrdiff_t>(bits_.size()));
  return out;
}

// ---------------------------------------------------------------------------

Vector vec_star(const Matrix& A, const SparsityMask& mask) {
  if (A.rows() != mask.rows() || A.cols() != mask.cols())
    throw ParameterError("vec_star: mask shape differs from matrix shape");
  Vector out(static_cast<Eigen::Index>(mask.count()));
  Eigen::Index k = 0;
  for (Eigen::Index c = 0; c < A.cols(); ++c) {
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      if (mask.allowed(r, c)) {
        out(k++) = A(r, c);
      } else if (A(r, c) != 0.0) {
        throw StructureError("vec_star: nonzero entry (" + std::to_string(r + 1) +
                             "," + std::to_string(c + 1) +
                             ") lies outside the sparsity mask");
      }
    }
  }
  return out;
}

Matrix scatter(const Vector& reduced, const SparsityMask& mask) {
  if (static_cast<std::size_t>(reduced.size()) != mask.count())
    throw ParameterError("scatter: reduced vector length differs from |S|");
  Matrix A = Matrix::Zero(mask.rows(), mask.cols());
  Eigen::Index k = 0;
  for (Eigen::Index c = 0; c < A.cols(); ++c)
    for (Eigen::Index r = 0; r < A.rows(); ++r)
      if (mask.allowed(r, c)) A(r, c) = reduced(k++);
  return A;
}

namespace {

void check_indices(const IndexSet& S, std::size_t size, const char* who) {
  std::size_t prev = 0;
  for (std::size_t s : S) {
    if (s == 0 || s > size)
      throw ParameterError(std::string(who) + ": index " + std::to_string(s) +
                           " out of range 1.." + std::to_string(size));
    if (s <= prev)
      throw ParameterError(std::string(who) + ": index set not increasing");
    prev = s;
  }
}

}  // namespace

Vector embed(const Vector& reduced, const IndexSet& S, std::size_t full_size) {
  if (static_cast<std::size_t>(reduced.size()) != S.size())
    throw ParameterError("embed: reduced vector length differs from |S|");
  check_indices(S, full_size, "embed");
  Vector full = Vector::Zero(static_cast<Eigen::Index>(full_size));
  for (std::size_t i = 0; i < S.size(); ++i)
    full(static_cast<Eigen::Index>(S[i] - 1)) =
        reduced(static_cast<Eigen::Index>(i));
  return full;
}

Matrix submatrix(const Matrix& Y, const IndexSet& S) {
  if (Y.rows() != Y.cols()) throw ParameterError("submatrix: Y not square");
  check_indices(S, static_cast<std::size_t>(Y.rows()), "submatrix");
  const auto k = static_cast<Eigen::Index>(S.size());
  Matrix out(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      out(i, j) = Y(static_cast<Eigen::Index>(S[i] - 1),
                    static_cast<Eigen::Index>(S[j] - 1));
  return out;
}

Vector subvector(const Vector& b, const IndexSet& S) {
  check_indices(S, static_cast<std::size_t>(b.size()), "subvector");
  Vector out(static_cast<Eigen::Index>(S.size()));
  for (std::size_t i = 0; i < S.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = b(static_cast<Eigen::Index>(S[i] - 1));
  return out;
}

// ---------------------------------------------------------------------------

ChainMasks chain_masks(const SubsystemPartition& partition, bool experimental) {
  const std::size_t count = partition.subsystems();
  if (count > 3 && !experimental)
    throw StructureError(
        "chain_masks: only chains of up to three subsystems are supported "
        "(set experimental to build masks for longer chains)");
  const int n = partition.n();
  const int m = partition.m();
  ChainMasks masks{SparsityMask(m, n), SparsityMask(m, n)};
  for (std::size_t i = 0; i < count; ++i) {
    for (int r = 0; r < partition.input_dim(i); ++r) {
      const int row = partition.input_offset(i) + r;
      for (std::size_t j = 0; j < count; ++j) {
        const bool same = i == j;
        const bool adjacent = (i > j ? i - j : j - i) <= 1;
        for (int c = 0; c < partition.state_dim(j); ++c) {
          const int col = partition.state_offset(j) + c;
          if (same) masks.F.set(row, col);
          if (adjacent) masks.M.set(row, col);
        }
      }
    }
  }
  return masks;
}

DefinitenessCheck check_positive_definite(const Matrix& Y) {
  if (Y.rows() != Y.cols())
    throw ParameterError("check_positive_definite: matrix not square");
  if (!is_symmetric(Y, 1e-8))
    throw ParameterError("check_positive_definite: matrix not symmetric");
  DefinitenessCheck out;
  if (Y.size() == 0) {
    out.positive_definite = true;
    return out;
  }
  out.min_eigenvalue = min_symmetric_eigenvalue(Y);
  const Matrix sym = 0.5 * (Y + Y.transpose());
  Eigen::LLT<Matrix> llt(sym);
  out.positive_definite = llt.info() == Eigen::Success && out.min_eigenvalue > 0.0;
  return out;
}

}  // namespace platoon
