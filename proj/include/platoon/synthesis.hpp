#pragma once

#include <vector>

#include "platoon/lqr.hpp"
#include "platoon/model.hpp"
#include "platoon/structured.hpp"

namespace platoon {

/// Unconstrained quadratic 1/2 d'Yd - d'b over d = vec([F M]) (or vec(F) for
/// the terminal step). Y is 2mn x 2mn.
struct QuadraticForm {
  Matrix Y;
  Vector b;
};

/// Stationary form, assembled from the closed-form block display.
QuadraticForm build_quadratic_steady(const Matrix& A, const Matrix& B,
                                     const Matrix& W, const Matrix& H,
                                     const Matrix& L);

/// Step k of the finite-horizon problem, 1 <= k <= N-1. `H_prev`, `L_prev`
/// are H(k-1), L(k-1); `H_cur`, `L_cur` are H(k), L(k).
QuadraticForm build_quadratic_step(const Matrix& H_prev, const Matrix& L_prev,
                                   const Matrix& H_cur, const Matrix& L_cur,
                                   const Matrix& A, const Matrix& B,
                                   const Matrix& W);

/// Terminal step k = N, over vec(F(N-1)) only.
QuadraticForm build_quadratic_terminal(const Matrix& H_last,
                                       const Matrix& L_last, const Matrix& W);

struct GainPair {
  Matrix F;
  Matrix M;
  Vector reduced;  // vec*([F M])
};

/// Minimizes the reduced quadratic on the masks' index set.
GainPair solve_gains(const QuadraticForm& q, const ChainMasks& masks);
/// Terminal variant: only F is free.
Matrix solve_terminal_gain(const QuadraticForm& q, const SparsityMask& F_mask);

/// Per-step expected cost of the local correction relative to the
/// full-information law: Tr{H(F-L)W(F-L)'} + Tr{H(M-L(A+BF))W(M-L(A+BF))'}.
double delay_penalty_rate(const Matrix& H, const Matrix& L, const Matrix& A,
                          const Matrix& B, const Matrix& W, const Matrix& F,
                          const Matrix& M);

struct SynthesisOptions {
  DareOptions dare;
  /// Allow chains longer than three subsystems (gains not claimed optimal).
  bool experimental_masks = false;
};

struct DelayedGains {
  SubsystemPartition partition;
  ChainMasks masks;
  IndexSet S;  // 1-based, over vec([F M])
  Matrix F;
  Matrix M;
  Matrix G;  // M - F(A + BF)
  Matrix L;
  Matrix H;
  Matrix X;
  double noise_rate = 0.0;            // Tr{XW}
  double delay_penalty_rate = 0.0;    // at (F, M)
  double baseline_penalty_rate = 0.0; // at F = M = 0 (delayed centralized)
  double closed_loop_radius = 0.0;    // rho(A + BL)
  double min_eig_Y = 0.0;
  double min_eig_Yss = 0.0;
  bool experimental = false;
};

DelayedGains synthesize_steady(const LinearPlatoonModel& model,
                               const CostSpec& cost,
                               const SynthesisOptions& opts = {});

/// Same as synthesize_steady but with a given Riccati solution; used to
/// inject a perturbed L in validation.
DelayedGains synthesize_from_riccati(const LinearPlatoonModel& model,
                                     const RiccatiSolution& riccati,
                                     const SynthesisOptions& opts = {});

/// Finite-horizon gains. F[k] for k = 0..N-1; M[k] for k = 1..N-1 (M[0] is
/// left zero: there is no two-step-old noise at k = 0).
struct GainSchedule {
  std::vector<Matrix> F;
  std::vector<Matrix> M;
  std::vector<Matrix> L;
  std::vector<Matrix> H;

  std::size_t horizon() const { return F.size(); }
};

GainSchedule synthesize_finite(const LinearPlatoonModel& model,
                               const CostSpec& cost, std::size_t N,
                               const SynthesisOptions& opts = {});

}  // namespace platoon
