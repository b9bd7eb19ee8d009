#include "platoon/lqr.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "platoon/error.hpp"

namespace platoon {

namespace {

void check_dims(const Matrix& A, const Matrix& B, const Matrix& Q,
                const Matrix& R) {
  const auto n = A.rows();
  const auto m = B.cols();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != m || R.cols() != m)
    throw ParameterError("riccati: dimension mismatch");
}

double inf_norm(const Matrix& M) {
  return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff();
}

}  // namespace

RiccatiStep riccati_step(const Matrix& X_next, const Matrix& A, const Matrix& B,
                         const Matrix& Q, const Matrix& R) {
  check_dims(A, B, Q, R);
  if (X_next.rows() != A.rows() || X_next.cols() != A.rows())
    throw ParameterError("riccati: X has the wrong shape");

  RiccatiStep s;
  const Matrix XB = X_next * B;
  s.H = B.transpose() * XB + R;
  s.H = 0.5 * (s.H + s.H.transpose());
  Eigen::LLT<Matrix> llt(s.H);
  if (llt.info() != Eigen::Success)
    throw FactorizationError("riccati: B'XB + R is not positive definite");

  const Matrix BtXA = XB.transpose() * A;
  s.L = -llt.solve(BtXA);
  // A'XA + Q - A'XB H^{-1} B'XA, with the last term written as -(B'XA)' L.
  s.X = A.transpose() * X_next * A + Q + BtXA.transpose() * s.L;
  s.X = 0.5 * (s.X + s.X.transpose());
  return s;
}

RiccatiSolution solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q,
                           const Matrix& R, const DareOptions& opts) {
  check_dims(A, B, Q, R);
  if (!(opts.tol > 0.0)) throw ParameterError("solve_dare: tol must be > 0");

  constexpr std::size_t kTail = 10;
  std::deque<double> tail;
  Matrix X = 0.5 * (Q + Q.transpose());
  RiccatiSolution sol;
  bool converged = false;
  for (long it = 1; it <= opts.max_iter; ++it) {
    RiccatiStep s = riccati_step(X, A, B, Q, R);
    const double inc = inf_norm(s.X - X);
    tail.push_back(inc);
    if (tail.size() > kTail) tail.pop_front();
    X = std::move(s.X);
    if (!std::isfinite(inc))
      throw ConvergenceError("solve_dare: iteration diverged");
    if (inc <= opts.tol * std::max(1.0, inf_norm(X))) {
      sol.iterations = it;
      converged = true;
      break;
    }
  }
  if (!converged)
    throw ConvergenceError("solve_dare: no convergence within " +
                           std::to_string(opts.max_iter) + " iterations");

  const RiccatiStep fin = riccati_step(X, A, B, Q, R);
  sol.X = X;
  sol.H = fin.H;
  sol.L = fin.L;
  sol.residual = inf_norm(fin.X - X);
  sol.tail_increments.assign(tail.begin(), tail.end());
  sol.closed_loop_radius = spectral_radius(A + B * sol.L);
  sol.stabilizing = sol.closed_loop_radius < 1.0;
  if (!sol.stabilizing)
    throw NotStabilizingError(
        "solve_dare: converged solution is not stabilizing (rho(A+BL) = " +
        std::to_string(sol.closed_loop_radius) + ")");
  return sol;
}

RiccatiSchedule riccati_recursion(const Matrix& A, const Matrix& B,
                                  const Matrix& Q, const Matrix& R,
                                  const Matrix& Q0, std::size_t N) {
  check_dims(A, B, Q, R);
  if (Q0.rows() != A.rows() || Q0.cols() != A.rows())
    throw ParameterError("riccati: Q0 has the wrong shape");
  RiccatiSchedule s;
  s.X.resize(N + 1);
  s.H.resize(N);
  s.L.resize(N);
  s.X[N] = Q0;
  for (std::size_t k = N; k-- > 0;) {
    RiccatiStep st = riccati_step(s.X[k + 1], A, B, Q, R);
    s.X[k] = std::move(st.X);
    s.H[k] = std::move(st.H);
    s.L[k] = std::move(st.L);
  }
  return s;
}

double noise_cost_rate(const Matrix& X, const Matrix& W) {
  if (X.rows() != W.rows() || X.cols() != W.cols())
    throw ParameterError("noise_cost_rate: dimension mismatch");
  return (X * W).trace();
}

double finite_horizon_noise_cost(const RiccatiSchedule& schedule,
                                 const Matrix& W, const Matrix& P0) {
  if (schedule.X.empty()) throw ParameterError("empty Riccati schedule");
  double J = noise_cost_rate(schedule.X.front(), P0);
  for (std::size_t k = 0; k < schedule.horizon(); ++k)
    J += noise_cost_rate(schedule.X[k + 1], W);
  return J;
}

}  // namespace platoon
