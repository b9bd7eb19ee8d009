#include "platoon/synthesis.hpp"

#include <algorithm>
#include <string>

#include "platoon/error.hpp"
#include "parallel.hpp"

namespace platoon {

namespace {

void check_shapes(const Matrix& A, const Matrix& B, const Matrix& W,
                  const Matrix& H, const Matrix& L) {
  const auto n = A.rows();
  const auto m = B.cols();
  if (A.cols() != n || B.rows() != n || W.rows() != n || W.cols() != n ||
      H.rows() != m || H.cols() != m || L.rows() != m || L.cols() != n)
    throw ParameterError("synthesis: dimension mismatch");
}

// Enforces Y = (Y + Y')/2 after checking the assembled blocks agree.
void symmetrize(Matrix& Y) {
  if (!is_symmetric(Y, 1e-10))
    throw SynthesisError("synthesis: assembled Y is not symmetric");
  Y = 0.5 * (Y + Y.transpose());
}

QuadraticForm assemble(const Matrix& Y11, const Matrix& Y12, const Matrix& Y21,
                       const Matrix& Y22, const Vector& b1, const Vector& b2) {
  const auto p = Y11.rows();
  QuadraticForm q;
  q.Y.resize(2 * p, 2 * p);
  q.Y << Y11, Y12, Y21, Y22;
  symmetrize(q.Y);
  q.b.resize(2 * p);
  q.b << b1, b2;
  return q;
}

}  // namespace

QuadraticForm build_quadratic_steady(const Matrix& A, const Matrix& B,
                                     const Matrix& W, const Matrix& H,
                                     const Matrix& L) {
  check_shapes(A, B, W, H, L);
  const Matrix LB = L * B;
  const Matrix WH = kron(W, H);
  const Matrix Y12 = -kron(W, LB.transpose() * H);
  const Matrix Y21 = -kron(W, H * LB);
  const Matrix Y11 = kron(W, H + LB.transpose() * H * LB);
  const Vector vL = vec(L);
  const Vector vLA = vec(L * A);
  return assemble(Y11, Y12, Y21, WH, WH * vL + Y12 * vLA, WH * vLA);
}

QuadraticForm build_quadratic_step(const Matrix& H_prev, const Matrix& L_prev,
                                   const Matrix& H_cur, const Matrix& L_cur,
                                   const Matrix& A, const Matrix& B,
                                   const Matrix& W) {
  check_shapes(A, B, W, H_cur, L_cur);
  check_shapes(A, B, W, H_prev, L_prev);
  const Matrix LB = L_cur * B;
  const Matrix Y11 = kron(W, H_prev + LB.transpose() * H_cur * LB);
  const Matrix Y12 = -kron(W, LB.transpose() * H_cur);
  const Matrix Y22 = kron(W, H_cur);
  const Matrix Y22_prev = kron(W, H_prev);
  const Vector vLA = vec(L_cur * A);
  return assemble(Y11, Y12, Y12.transpose(), Y22,
                  Y22_prev * vec(L_prev) + Y12 * vLA, Y22 * vLA);
}

QuadraticForm build_quadratic_terminal(const Matrix& H_last,
                                       const Matrix& L_last, const Matrix& W) {
  if (H_last.rows() != L_last.rows() || W.rows() != L_last.cols())
    throw ParameterError("synthesis: dimension mismatch");
  QuadraticForm q;
  q.Y = kron(W, H_last);
  symmetrize(q.Y);
  q.b = q.Y * vec(L_last);
  return q;
}

namespace {

Vector solve_reduced(const QuadraticForm& q, const IndexSet& S) {
  const Matrix Yss = submatrix(q.Y, S);
  const Vector bs = subvector(q.b, S);
  Eigen::LLT<Matrix> llt(Yss);
  if (llt.info() != Eigen::Success)
    throw SynthesisError("synthesis: reduced matrix [Y]_SS is not positive "
                         "definite");
  return llt.solve(bs);
}

}  // namespace

GainPair solve_gains(const QuadraticForm& q, const ChainMasks& masks) {
  const auto rows = masks.F.rows();
  const auto cols = masks.F.cols();
  if (masks.M.rows() != rows || masks.M.cols() != cols ||
      q.Y.rows() != 2 * rows * cols || q.b.size() != q.Y.rows())
    throw ParameterError("solve_gains: masks do not match the quadratic form");

  GainPair out;
  out.reduced = solve_reduced(q, masks.combined_index_set());
  const auto nF = static_cast<Eigen::Index>(masks.F.count());
  out.F = scatter(out.reduced.head(nF), masks.F);
  out.M = scatter(out.reduced.tail(out.reduced.size() - nF), masks.M);
  return out;
}

Matrix solve_terminal_gain(const QuadraticForm& q, const SparsityMask& F_mask) {
  if (q.Y.rows() != F_mask.rows() * F_mask.cols())
    throw ParameterError("solve_terminal_gain: mask does not match");
  return scatter(solve_reduced(q, F_mask.index_set()), F_mask);
}

double delay_penalty_rate(const Matrix& H, const Matrix& L, const Matrix& A,
                          const Matrix& B, const Matrix& W, const Matrix& F,
                          const Matrix& M) {
  check_shapes(A, B, W, H, L);
  const Matrix E1 = F - L;
  const Matrix E2 = M - L * (A + B * F);
  return (H * E1 * W * E1.transpose()).trace() +
         (H * E2 * W * E2.transpose()).trace();
}

DelayedGains synthesize_from_riccati(const LinearPlatoonModel& model,
                                     const RiccatiSolution& riccati,
                                     const SynthesisOptions& opts) {
  Eigen::LLT<Matrix> wllt(model.W);
  if (model.W.rows() != model.n() || wllt.info() != Eigen::Success)
    throw SynthesisError("synthesis: W must be positive definite");

  DelayedGains g;
  g.partition = model.partition;
  g.experimental = model.partition.subsystems() > 3;
  g.masks = chain_masks(model.partition, opts.experimental_masks);
  g.S = g.masks.combined_index_set();
  g.L = riccati.L;
  g.H = riccati.H;
  g.X = riccati.X;
  g.closed_loop_radius = riccati.closed_loop_radius;

  const QuadraticForm q =
      build_quadratic_steady(model.A, model.B, model.W, g.H, g.L);
  const auto pd = check_positive_definite(q.Y);
  const auto pd_ss = check_positive_definite(submatrix(q.Y, g.S));
  g.min_eig_Y = pd.min_eigenvalue;
  g.min_eig_Yss = pd_ss.min_eigenvalue;
  if (!pd.positive_definite || !pd_ss.positive_definite)
    throw SynthesisError("synthesis: Y is not positive definite (min eig " +
                         std::to_string(pd.min_eigenvalue) + ")");

  GainPair gp = solve_gains(q, g.masks);
  g.F = std::move(gp.F);
  g.M = std::move(gp.M);
  g.G = g.M - g.F * (model.A + model.B * g.F);

  g.noise_rate = noise_cost_rate(g.X, model.W);
  g.delay_penalty_rate =
      delay_penalty_rate(g.H, g.L, model.A, model.B, model.W, g.F, g.M);
  const Matrix Z = Matrix::Zero(g.F.rows(), g.F.cols());
  g.baseline_penalty_rate =
      delay_penalty_rate(g.H, g.L, model.A, model.B, model.W, Z, Z);
  return g;
}

DelayedGains synthesize_steady(const LinearPlatoonModel& model,
                               const CostSpec& cost,
                               const SynthesisOptions& opts) {
  const RiccatiSolution ric =
      solve_dare(model.A, model.B, cost.Q, cost.R, opts.dare);
  return synthesize_from_riccati(model, ric, opts);
}

GainSchedule synthesize_finite(const LinearPlatoonModel& model,
                               const CostSpec& cost, std::size_t N,
                               const SynthesisOptions& opts) {
  if (N < 2) throw ParameterError("synthesize_finite: horizon must be >= 2");
  Eigen::LLT<Matrix> wllt(model.W);
  if (wllt.info() != Eigen::Success)
    throw SynthesisError("synthesis: W must be positive definite");
  const ChainMasks masks = chain_masks(model.partition, opts.experimental_masks);
  const RiccatiSchedule ric =
      riccati_recursion(model.A, model.B, cost.Q, cost.R, cost.Q0, N);

  GainSchedule out;
  out.L = ric.L;
  out.H = ric.H;
  out.F.assign(N, Matrix());
  out.M.assign(N, Matrix::Zero(model.m(), model.n()));

  // Each D(k) = [F(k-1) M(k)] is an independent problem once the Riccati
  // sweep is done; slots are written by index so the order does not matter.
  detail::parallel_for(N, [&](std::size_t idx) {
    const std::size_t k = idx + 1;
    if (k < N) {
      const QuadraticForm q = build_quadratic_step(
          ric.H[k - 1], ric.L[k - 1], ric.H[k], ric.L[k], model.A, model.B,
          model.W);
      GainPair gp = solve_gains(q, masks);
      out.F[k - 1] = std::move(gp.F);
      out.M[k] = std::move(gp.M);
    } else {
      const QuadraticForm q =
          build_quadratic_terminal(ric.H[N - 1], ric.L[N - 1], model.W);
      out.F[N - 1] = solve_terminal_gain(q, masks.F);
    }
  });
  return out;
}

}  // namespace platoon
