#pragma once

#include <vector>

#include "platoon/model.hpp"

namespace platoon {

// Sign convention: L is the gain for which u = L x is the optimal
// full-information law, i.e. L = -(B'XB + R)^{-1} B'XA.

struct RiccatiStep {
  Matrix X;
  Matrix H;
  Matrix L;
};

/// One backward step X(k) = f(X(k+1)) of the finite-horizon recursion.
RiccatiStep riccati_step(const Matrix& X_next, const Matrix& A, const Matrix& B,
                         const Matrix& Q, const Matrix& R);

struct DareOptions {
  double tol = 1e-12;  // relative to max(1, |X|_inf)
  long max_iter = 1'000'000;
};

struct RiccatiSolution {
  Matrix X;
  Matrix H;
  Matrix L;
  bool stabilizing = false;
  double closed_loop_radius = 0.0;  // rho(A + BL)
  long iterations = 0;
  double residual = 0.0;  // |X - f(X)|_inf
  std::vector<double> tail_increments;  // last |X_{k+1} - X_k|_inf values
};

/// Stabilizing solution of X = A'XA + Q - A'XB (B'XB + R)^{-1} B'XA by value
/// iteration from X = Q. Throws ConvergenceError or NotStabilizingError.
RiccatiSolution solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q,
                           const Matrix& R, const DareOptions& opts = {});

/// X(0..N), H(0..N-1), L(0..N-1) with X(N) = Q0.
struct RiccatiSchedule {
  std::vector<Matrix> X;
  std::vector<Matrix> H;
  std::vector<Matrix> L;

  std::size_t horizon() const { return H.size(); }
};

RiccatiSchedule riccati_recursion(const Matrix& A, const Matrix& B,
                                  const Matrix& Q, const Matrix& R,
                                  const Matrix& Q0, std::size_t N);

struct CostReport {
  double noise_rate = 0.0;          // Tr{XW}
  double delay_penalty_rate = 0.0;  // per-step J_u^1
  double total_rate() const { return noise_rate + delay_penalty_rate; }
};

/// Stationary per-step cost of the noise, Tr{XW}.
double noise_cost_rate(const Matrix& X, const Matrix& W);

/// E{J_w} = Tr{X(0) P0} + sum_{k<N} Tr{X(k+1) W}.
double finite_horizon_noise_cost(const RiccatiSchedule& schedule,
                                 const Matrix& W, const Matrix& P0);

}  // namespace platoon
