#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "platoon/controller.hpp"
#include "platoon/model.hpp"
#include "platoon/synthesis.hpp"

namespace platoon {

struct SpeedBreakpoint {
  double time_s = 0.0;
  double speed_mps = 0.0;
};

enum class InitialState { Zero, Sampled };

struct Scenario {
  long horizon = 0;
  std::uint64_t seed = 0;
  /// Lead reference speed from each breakpoint on; v0 before the first.
  std::vector<SpeedBreakpoint> profile;
  double noise_scale = 1.0;
  InitialState initial = InitialState::Sampled;
  bool lead_integrator = false;
  double integrator_noise_variance = 1e-8;

  void validate() const;
};

using Rng = std::mt19937_64;

/// Independent stream for (master seed, run index).
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

/// Draws w = S z with S S' = W.
class NoiseSampler {
 public:
  explicit NoiseSampler(const Matrix& W);
  Vector draw(Rng& rng) const;
  const Matrix& factor() const { return factor_; }

 private:
  Matrix factor_;
};

Vector sample_noise(const Matrix& W, Rng& rng);

/// Reference speed at time t.
double reference_speed(const Scenario& scenario, double v0, double t);

/// Reference offset r(k). A new lead reference v_ref moves the operating
/// point of the whole platoon: every velocity coordinate is shifted by
/// v0 - v_ref(k Ts) and every spacing coordinate by tau (v0 - v_ref), so the
/// controller regulates v_i - v_ref and d - tau v_ref while the plant stays
/// linearized around v0.
Vector scenario_injection(const SubsystemPartition& partition,
                          const Scenario& scenario, long k, double v0,
                          double Ts, double tau);

/// Input that holds the offset operating point r: the least-squares solution
/// of B u = (A - I) r (exact for the chain, where every velocity row has its
/// own input and spacing rows need none).
Vector reference_feedforward(const LinearPlatoonModel& model, const Vector& r);

struct SimTrace {
  ControllerKind controller = ControllerKind::Distributed;
  std::uint64_t seed = 0;
  double Ts = 0.0;
  SubsystemPartition partition;
  std::vector<Vector> x;       // x(0..T), controller coordinates
  std::vector<Vector> u;       // u(0..T-1), applied input
  std::vector<Vector> u_ff;    // reference feedforward part of u
  std::vector<Vector> w;       // w(0..T-1), scaled noise actually applied
  std::vector<Vector> offset;  // reference offset r(0..T)
  std::vector<double> stage_cost;
  std::vector<double> cum_cost;

  long steps() const { return static_cast<long>(u.size()); }
};

struct SimOptions {
  double divergence_guard = 1e6;  // |x|_inf
};

/// x(k+1) = A x(k) + B u(k) + w(k) + r(k+1) - A r(k), where r is the
/// reference offset (the lead integrator row takes no correction, it
/// integrates the tracking error). With a profile, u = u_ff + u_fb where u_ff
/// holds the offset operating point and the controller is told the known
/// remainder r(k+1) - A r(k) + B u_ff(k); the stage cost uses u_fb.
/// Deterministic for a given scenario seed.
SimTrace run_closed_loop(const LinearPlatoonModel& model, const CostSpec& cost,
                         FeedbackController& controller, ControllerKind kind,
                         const Scenario& scenario, const SimOptions& opts = {});

SimTrace run_closed_loop(const LinearPlatoonModel& model, const CostSpec& cost,
                         const DelayedGains& gains, ControllerKind kind,
                         const Scenario& scenario, const SimOptions& opts = {});

/// Mean and batch-means standard error of a stationary series.
struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

MeanEstimate batch_means(const std::vector<double>& series, std::size_t burn_in,
                         std::size_t batch_length);

// Batches several times longer than the slowest closed-loop time constant of
// the default platoon (rho ~ 0.999).
struct CompareOptions {
  std::size_t runs = 8;
  long steps_per_run = 16'000;
  std::size_t burn_in = 3'500;
  std::size_t batch_length = 2'500;
  std::uint64_t seed = 1;
};

struct ControllerStats {
  ControllerKind kind = ControllerKind::Distributed;
  double analytic_rate = 0.0;
  MeanEstimate empirical;
  std::vector<double> input_energy;           // per vehicle, w_u u^2 per step
  std::vector<double> input_energy_relative;  // relative to vehicle 1
};

struct ComparisonReport {
  double noise_rate = 0.0;  // Tr{XW}
  double j_cent = 0.0;
  double j_dist = 0.0;
  double j_delayed = 0.0;
  double gap_dist_cent_pct = 0.0;     // (J_dist - J_cent) / J_cent
  double gap_dist_delayed_pct = 0.0;  // (J_delayed - J_dist) / J_delayed
  std::array<ControllerStats, 3> controllers;  // cent, dist, delayed
  CompareOptions options;
};

ComparisonReport compare_controllers(const LinearPlatoonModel& model,
                                     const CostSpec& cost,
                                     const DelayedGains& gains,
                                     const CompareOptions& opts = {});

/// Analytic part only (no simulation).
ComparisonReport analytic_comparison(const DelayedGains& gains);

}  // namespace platoon
