#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace platoon {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct VehicleParams {
  double mass_kg = 0.0;
  double k_u = 0.0;  // wheel force per unit input
  double k_d = 0.0;  // base air-drag coefficient, F = k_d v^2
  // Brake, rolling and gravity coefficients only fix the linearization point;
  // they do not enter the linear model.
  double k_b = 0.0;
  double k_fr = 0.0;
  double k_g = 0.0;
  double max_engine_input = 0.0;
  double max_brake_input = 0.0;

  void validate() const;
};

/// Air-drag reduction model: a preceding vehicle at distance d reduces the
/// drag by Phi(d) = alpha1 d + alpha2 percent (valid up to 60 m), a follower
/// by phi(d) = beta1 d + beta2 percent (valid up to 15 m).
struct DragReduction {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;

  static constexpr double kPrecedingRange = 60.0;
  static constexpr double kFollowingRange = 15.0;
};

struct OperatingPoint {
  double v0 = 0.0;   // steady-state speed [m/s]
  double tau = 0.0;  // time gap [s]
  double d0 = 0.0;   // intermediate distance, tau * v0 [m]
  double Ts = 0.0;   // sampling time [s]
  DragReduction drag;

  static OperatingPoint from_time_gap(double v0, double tau, double Ts,
                                      DragReduction drag);
  void validate() const;
};

/// Which neighbors shield a vehicle from the air stream.
enum class DragExposure { None, Preceding, Following, Both };

DragExposure exposure_for_position(std::size_t index, std::size_t count);

/// Returns 1 - Phi(d)/100 - phi(d)/100 with each term present only when the
/// corresponding neighbor exists. Beyond its validity range a term is 0.
double air_drag_factor(double d, DragExposure exposure,
                       const DragReduction& drag);

/// Linearized per-vehicle coefficients. `front` couples the velocity to the
/// spacing ahead of the vehicle (absent for the lead), `rear` to the spacing
/// behind it (absent for the last vehicle).
struct VehicleCoefficients {
  double theta = 1.0;
  double front = 0.0;
  double rear = 0.0;
  double input_gain = 0.0;  // Ts * k_u / m
};

std::vector<VehicleCoefficients> linearized_coefficients(
    const std::vector<VehicleParams>& params, const OperatingPoint& op);

/// Per-vehicle state/input dimensions of the chain. The lead vehicle owns its
/// velocity (plus an integrator when augmented); each follower owns the
/// spacing to its predecessor and its velocity.
class SubsystemPartition {
 public:
  SubsystemPartition() = default;
  SubsystemPartition(std::vector<int> state_dims, std::vector<int> input_dims,
                     bool lead_integrator = false);

  static SubsystemPartition chain(std::size_t vehicles,
                                  bool lead_integrator = false);

  std::size_t subsystems() const { return state_dims_.size(); }
  int n() const { return n_; }
  int m() const { return m_; }
  int state_dim(std::size_t i) const { return state_dims_.at(i); }
  int input_dim(std::size_t i) const { return input_dims_.at(i); }
  int state_offset(std::size_t i) const { return state_offsets_.at(i); }
  int input_offset(std::size_t i) const { return input_offsets_.at(i); }
  const std::vector<int>& state_dims() const { return state_dims_; }
  const std::vector<int>& input_dims() const { return input_dims_; }
  bool lead_integrator() const { return lead_integrator_; }

  /// Subsystem that owns state coordinate `index`.
  std::size_t owner_of_state(int index) const;
  std::size_t owner_of_input(int index) const;

  int velocity_index(std::size_t vehicle) const;
  /// Spacing to the predecessor; vehicle must be a follower.
  int spacing_index(std::size_t vehicle) const;
  int integrator_index() const;

  bool operator==(const SubsystemPartition&) const = default;

 private:
  std::vector<int> state_dims_;
  std::vector<int> input_dims_;
  std::vector<int> state_offsets_;
  std::vector<int> input_offsets_;
  int n_ = 0;
  int m_ = 0;
  bool lead_integrator_ = false;
};

struct LinearPlatoonModel {
  Matrix A;
  Matrix B;
  Matrix W;
  Matrix P0;
  SubsystemPartition partition;
  // Operating point the matrices were linearized at (0 for hand-built models).
  double v0 = 0.0;
  double Ts = 0.0;
  double tau = 0.0;

  int n() const { return partition.n(); }
  int m() const { return partition.m(); }
};

LinearPlatoonModel build_platoon_model(const std::vector<VehicleParams>& params,
                                       const OperatingPoint& op,
                                       const Matrix& W, const Matrix& P0);

/// Zeroes every block coupling two different subsystems in A and W.
LinearPlatoonModel decouple(const LinearPlatoonModel& model);

/// Appends a lead-vehicle integrator z(k+1) = z(k) + Ts v1(k). The new state
/// sits right after v1 inside subsystem 1, so the chain pattern is unchanged.
LinearPlatoonModel with_lead_integrator(const LinearPlatoonModel& model,
                                        double Ts, double noise_variance);

struct FollowerWeights {
  double w_tau = 0.0;  // time-gap tracking
  double w_dv = 0.0;   // relative velocity to the predecessor
  double w_d = 0.0;    // spacing deviation
  double w_v = 0.0;    // velocity deviation
  double w_u = 0.0;    // control effort
};

struct PlatoonWeights {
  double lead_w_v = 0.0;
  double lead_w_u = 0.0;
  std::vector<FollowerWeights> followers;  // vehicles 2..M
  double integrator = 0.0;                 // only used when augmented
};

struct CostSpec {
  Matrix Q;
  Matrix R;
  Matrix Q0;
  PlatoonWeights weights;
  double tau = 0.0;
};

/// Zeroes the blocks of Q and Q0 that couple different subsystems. With a
/// decoupled model this makes the centralized gain block diagonal.
CostSpec decouple(const CostSpec& cost, const SubsystemPartition& partition);

/// 3x3 weight on (v_{i-1}, d_{(i-1)i}, v_i) for one follower.
Matrix follower_weight_block(const FollowerWeights& w, double tau);

CostSpec build_cost(const PlatoonWeights& weights, double tau,
                    const SubsystemPartition& partition);

/// Stage cost x'Qx written out as the sum of squared errors, without
/// assembling Q. Used to cross-check build_cost.
double stage_state_cost_by_terms(const PlatoonWeights& weights, double tau,
                                 const SubsystemPartition& partition,
                                 const Vector& x);

// Shared numeric helpers.
bool is_symmetric(const Matrix& M, double tol);
double min_symmetric_eigenvalue(const Matrix& M);
double spectral_radius(const Matrix& M);

}  // namespace platoon
