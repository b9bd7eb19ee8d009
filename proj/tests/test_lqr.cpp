#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "platoon/error.hpp"
#include "platoon/lqr.hpp"

using namespace platoon;
using testutil::max_abs;

namespace {
Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }
}  // namespace

TEST_CASE("riccati step") {
  SUBCASE("scalar hand evaluation") {
    const auto s = riccati_step(scalar(1), scalar(1), scalar(1), scalar(1), scalar(1));
    CHECK(s.X(0, 0) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(s.H(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(s.L(0, 0) == doctest::Approx(-0.5).epsilon(1e-15));
  }
  std::mt19937_64 rng(5);
  const Matrix Q = testutil::random_pd(rng, 3), R = testutil::random_pd(rng, 2);
  const Matrix Xn = testutil::random_pd(rng, 3), B = testutil::random_matrix(rng, 3, 2);
  SUBCASE("A = 0") {
    const auto s = riccati_step(Xn, Matrix::Zero(3, 3), B, Q, R);
    CHECK(max_abs(s.X - Q) < 1e-12);
    CHECK(max_abs(s.L) == 0.0);
    CHECK(max_abs(s.H - (B.transpose() * Xn * B + R)) < 1e-12);
  }
  SUBCASE("B = 0 is a Lyapunov step") {
    const Matrix A = testutil::random_matrix(rng, 3, 3);
    const auto s = riccati_step(Xn, A, Matrix::Zero(3, 2), Q, R);
    CHECK(max_abs(s.X - (A.transpose() * Xn * A + Q)) < 1e-12);
    CHECK(max_abs(s.L) == 0.0);
  }
  SUBCASE("symmetric and PSD output") {
    for (int t = 0; t < 20; ++t) {
      const Matrix A = testutil::random_matrix(rng, 3, 3);
      const Matrix G = testutil::random_matrix(rng, 3, 3);
      const auto s = riccati_step(G * G.transpose(), A, B, G.transpose() * G, R);
      CHECK(is_symmetric(s.X, 1e-12));
      CHECK(min_symmetric_eigenvalue(s.X) >= -1e-10);
    }
  }
}

TEST_CASE("DARE") {
  SUBCASE("golden ratio") {
    const auto s = solve_dare(scalar(1), scalar(1), scalar(1), scalar(1));
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    CHECK(std::abs(s.X(0, 0) - phi) <= 1e-6);
    CHECK(std::abs(s.H(0, 0) - (phi + 1.0)) <= 1e-6);
    CHECK(std::abs(s.L(0, 0) + 0.618034) <= 1e-6);
    CHECK(s.closed_loop_radius == doctest::Approx(0.381966).epsilon(1e-5));
    CHECK(s.stabilizing);
    CHECK(noise_cost_rate(s.X, scalar(1)) == doctest::Approx(phi).epsilon(1e-10));
  }
  SUBCASE("A = 0 converges immediately to Q") {
    std::mt19937_64 rng(3);
    const Matrix Q = testutil::random_pd(rng, 3), R = testutil::random_pd(rng, 2);
    const auto s = solve_dare(Matrix::Zero(3, 3), testutil::random_matrix(rng, 3, 2), Q, R);
    CHECK(max_abs(s.X - Q) < 1e-12);
    CHECK(s.iterations <= 2);
  }
  SUBCASE("default platoon") {
    const auto p = testutil::default_problem();
    const auto s = solve_dare(p.model.A, p.model.B, p.cost.Q, p.cost.R);
    const auto f = riccati_step(s.X, p.model.A, p.model.B, p.cost.Q, p.cost.R);
    CHECK(max_abs(f.X - s.X) <= 1e-9);
    CHECK(s.stabilizing);
    CHECK(s.closed_loop_radius < 1.0);
    CHECK(s.X(0, 0) == doctest::Approx(120.10902610429312).epsilon(1e-8));
    CHECK(s.X(2, 2) == doctest::Approx(162.45997385953166).epsilon(1e-8));
    CHECK(s.X.trace() == doctest::Approx(432.27713308801367).epsilon(1e-8));
    // tail of the iteration is non-increasing
    const auto& tail = s.tail_increments;
    REQUIRE(tail.size() >= 2);
    for (std::size_t i = 1; i < tail.size(); ++i) CHECK(tail[i] <= tail[i - 1] * (1 + 1e-9));
  }
  SUBCASE("unstabilizable pair") {
    // unstable mode with no input: iteration cannot converge
    DareOptions o;
    o.max_iter = 2000;
    CHECK_THROWS_AS(solve_dare(scalar(2), scalar(0), scalar(1), scalar(1), o), ConvergenceError);
  }
  SUBCASE("converged but not stabilizing") {
    // unobservable unstable mode with zero state weight: X = 0, L = 0
    CHECK_THROWS_AS(solve_dare(scalar(2), scalar(1), scalar(0), scalar(1)),
                    NotStabilizingError);
  }
}

TEST_CASE("cost rates") {
  CHECK(noise_cost_rate(Matrix::Identity(3, 3),
                        Vector((Vector(3) << 1, 2, 3).finished()).asDiagonal().toDenseMatrix()) ==
        6.0);
  CHECK(noise_cost_rate(Matrix::Identity(3, 3), Matrix::Zero(3, 3)) == 0.0);
}

TEST_CASE("finite-horizon value equals a brute-force stacked solve") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 10; ++t) {
    const int n = 2, m = 1;
    const std::size_t N = 3;
    const Matrix A = testutil::random_matrix(rng, n, n), B = testutil::random_matrix(rng, n, m);
    const Matrix Q = testutil::random_pd(rng, n), R = testutil::random_pd(rng, m),
                 Q0 = testutil::random_pd(rng, n);
    const Vector x0 = testutil::random_matrix(rng, n, 1);
    const auto sched = riccati_recursion(A, B, Q, R, Q0, N);
    REQUIRE(sched.X.size() == N + 1);
    const double dp = x0.dot(sched.X[0] * x0);

    // x(k) = A^k x0 + sum_j A^{k-1-j} B u(j); minimize over the stacked u.
    const int U = static_cast<int>(N) * m;
    Matrix Hq = Matrix::Zero(U, U);
    Vector g = Vector::Zero(U);
    double c0 = 0.0;
    for (std::size_t k = 0; k <= N; ++k) {
      Matrix Phi = Matrix::Identity(n, n);
      for (std::size_t i = 0; i < k; ++i) Phi = A * Phi;
      Matrix Gam = Matrix::Zero(n, U);
      for (std::size_t j = 0; j < k; ++j) {
        Matrix P = Matrix::Identity(n, n);
        for (std::size_t i = j + 1; i < k; ++i) P = A * P;
        Gam.block(0, static_cast<int>(j) * m, n, m) = P * B;
      }
      const Matrix& S = k == N ? Q0 : Q;
      Hq += Gam.transpose() * S * Gam;
      g += Gam.transpose() * S * Phi * x0;
      c0 += x0.dot(Phi.transpose() * S * Phi * x0);
    }
    for (std::size_t k = 0; k < N; ++k) Hq.block(static_cast<int>(k) * m, static_cast<int>(k) * m, m, m) += R;
    const Vector u = Hq.ldlt().solve(-g);
    const double brute = c0 + 2.0 * g.dot(u) + u.dot(Hq * u);
    CHECK(std::abs(dp - brute) <= 1e-8 * std::max(1.0, std::abs(brute)));
  }
}

TEST_CASE("finite-horizon noise cost") {
  const auto s = riccati_recursion(scalar(1), scalar(1), scalar(1), scalar(1), scalar(1), 3);
  // X(3) = 1, X(2) = 1.5, X(1) = 1.6, X(0) = 1 + 1.6 - 1.6^2/2.6
  const double x0 = 1.0 + 1.6 - 1.6 * 1.6 / 2.6;
  CHECK(s.X[2](0, 0) == doctest::Approx(1.5));
  CHECK(s.X[1](0, 0) == doctest::Approx(1.6));
  CHECK(s.X[0](0, 0) == doctest::Approx(x0));
  const double expect = 2.0 * x0 + (1.6 + 1.5 + 1.0) * 0.5;
  CHECK(finite_horizon_noise_cost(s, scalar(0.5), scalar(2.0)) == doctest::Approx(expect));
}
