#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "platoon/error.hpp"
#include "platoon/structured.hpp"

using namespace platoon;
using testutil::max_abs;

TEST_CASE("kron") {
  CHECK(kron(Matrix::Identity(2, 2), Matrix::Identity(3, 3)).isIdentity(0.0));
  std::mt19937_64 rng(1);
  const Matrix B = testutil::random_matrix(rng, 2, 3);
  CHECK(kron(Matrix::Zero(2, 2), B).isZero(0.0));
  Matrix A(2, 2), C(2, 2);
  A << 1, 2, 3, 4;
  C << 0, 1, 1, 0;
  Matrix expect(4, 4);
  expect << 0, 1, 0, 2,  //
      1, 0, 2, 0,        //
      0, 3, 0, 4,        //
      3, 0, 4, 0;
  CHECK(kron(A, C) == expect);
  // index loop on a rectangular case
  const Matrix P = testutil::random_matrix(rng, 2, 3), R = testutil::random_matrix(rng, 4, 2);
  const Matrix K = kron(P, R);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 6; ++j) CHECK(K(i, j) == P(i / 4, j / 2) * R(i % 4, j % 2));
}

TEST_CASE("vec and index map") {
  Matrix A(2, 3);
  A << 1, 2, 3, 4, 5, 6;
  CHECK(vec(A) == (Vector(6) << 1, 4, 2, 5, 3, 6).finished());
  CHECK(unvec(vec(A), 2, 3) == A);
  for (Eigen::Index r = 0; r < 4; ++r)
    for (Eigen::Index c = 0; c < 3; ++c) {
      const std::size_t pos = vec_position(r, c, 4);
      CHECK(pos == static_cast<std::size_t>(c * 4 + r + 1));
      CHECK(vec_entry(pos, 4) == std::make_pair(r, c));
    }
}

TEST_CASE("vec_star on a diagonal") {
  const Matrix D = Vector((Vector(3) << 7, 8, 9).finished()).asDiagonal();
  const SparsityMask mask = SparsityMask::from_nonzeros(D);
  CHECK(mask.index_set() == IndexSet{1, 5, 9});
  CHECK(vec_star(D, mask) == (Vector(3) << 7, 8, 9).finished());
  CHECK(vec_star(Matrix::Zero(3, 3), mask).isZero(0.0));
  Matrix bad = D;
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(vec_star(bad, mask), StructureError);
}

TEST_CASE("scatter round trip and embedding") {
  std::mt19937_64 rng(2);
  std::bernoulli_distribution coin(0.5);
  for (int t = 0; t < 20; ++t) {
    SparsityMask mask(3, 5);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 5; ++c)
        if (coin(rng)) mask.set(r, c);
    Matrix F = testutil::random_matrix(rng, 3, 5);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 5; ++c)
        if (!mask.allowed(r, c)) F(r, c) = 0.0;
    const Vector red = vec_star(F, mask);
    CHECK(red.size() == static_cast<Eigen::Index>(mask.count()));
    CHECK(scatter(red, mask) == F);
    CHECK(embed(red, mask.index_set(), 15) == vec(F));
    // quadratic forms agree on the embedded vector
    const Matrix Y = testutil::random_pd(rng, 15);
    const IndexSet S = mask.index_set();
    const Vector full = embed(red, S, 15);
    CHECK(std::abs(red.dot(submatrix(Y, S) * red) - full.dot(Y * full)) < 1e-10);
    CHECK(subvector(full, S) == red);
  }
}

TEST_CASE("submatrix") {
  std::mt19937_64 rng(4);
  const Matrix Y = testutil::random_pd(rng, 9);
  IndexSet all(9);
  for (std::size_t i = 0; i < 9; ++i) all[i] = i + 1;
  CHECK(submatrix(Y, all) == Y);
  const Matrix Y2 = testutil::random_matrix(rng, 2, 2);
  CHECK(submatrix(Y2, {1}) == Matrix::Constant(1, 1, Y2(0, 0)));
  const Matrix sub = submatrix(Y, {1, 5, 9});
  CHECK(sub(1, 2) == Y(4, 8));
  CHECK(is_positive_definite(sub));
  CHECK_THROWS(submatrix(Y, {10}));
}

TEST_CASE("chain masks") {
  SUBCASE("three vehicles") {
    const auto masks = chain_masks(SubsystemPartition::chain(3));
    CHECK(masks.F.count() == 5);
    CHECK(masks.M.count() == 12);
    CHECK(masks.combined_index_set().size() == 17);
    // rows of F: {1}, {2,3}, {4,5} (1-based columns)
    const std::vector<std::vector<int>> f_cols = {{0}, {1, 2}, {3, 4}};
    const std::vector<std::vector<int>> m_cols = {{0, 1, 2}, {0, 1, 2, 3, 4}, {1, 2, 3, 4}};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 5; ++c) {
        const auto& fr = f_cols[static_cast<std::size_t>(r)];
        const auto& mr = m_cols[static_cast<std::size_t>(r)];
        CHECK(masks.F.allowed(r, c) == (std::find(fr.begin(), fr.end(), c) != fr.end()));
        CHECK(masks.M.allowed(r, c) == (std::find(mr.begin(), mr.end(), c) != mr.end()));
      }
    // F's positions come before M's in vec([F M])
    const IndexSet S = masks.combined_index_set();
    CHECK(S.front() == 1);
    CHECK(S[4] <= 15);
    CHECK(S[5] > 15);
    CHECK(std::is_sorted(S.begin(), S.end()));
  }
  SUBCASE("with the lead integrator") {
    CHECK(chain_masks(SubsystemPartition::chain(3, true)).combined_index_set().size() == 20);
  }
  SUBCASE("single subsystem is dense") {
    const auto masks = chain_masks(SubsystemPartition({2}, {1}));
    CHECK(masks.F.count() == 2);
    CHECK(masks.M.count() == 2);
  }
  SUBCASE("long chains need the experimental flag") {
    CHECK_THROWS_AS(chain_masks(SubsystemPartition::chain(4)), StructureError);
    CHECK_NOTHROW(chain_masks(SubsystemPartition::chain(4), true));
  }
}

TEST_CASE("positive definiteness check") {
  CHECK(is_positive_definite(Matrix::Identity(3, 3)));
  CHECK_FALSE(is_positive_definite(Vector((Vector(2) << 1, -1).finished()).asDiagonal().toDenseMatrix()));
  const auto d = check_positive_definite(Vector((Vector(2) << 3, 0.5).finished()).asDiagonal().toDenseMatrix());
  CHECK(d.min_eigenvalue == doctest::Approx(0.5));
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 1e-3;
  CHECK_THROWS_AS(check_positive_definite(asym), ParameterError);
}
