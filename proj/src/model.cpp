#include "platoon/model.hpp"

#include <cmath>
#include <string>

#include "platoon/error.hpp"

namespace platoon {

namespace {

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void VehicleParams::validate() const {
  for (double c : {mass_kg, k_u, k_d, k_b, k_fr, k_g, max_engine_input,
                   max_brake_input}) {
    if (!finite(c)) throw ParameterError("vehicle coefficient is not finite");
  }
  if (mass_kg <= 0.0) throw ParameterError("vehicle mass must be positive");
  if (max_engine_input <= 0.0 || max_brake_input <= 0.0)
    throw ParameterError("actuator bounds must be strictly positive");
}

OperatingPoint OperatingPoint::from_time_gap(double v0, double tau, double Ts,
                                             DragReduction drag) {
  OperatingPoint op;
  op.v0 = v0;
  op.tau = tau;
  op.d0 = tau * v0;
  op.Ts = Ts;
  op.drag = drag;
  return op;
}

void OperatingPoint::validate() const {
  if (!(v0 > 0.0)) throw ParameterError("v0 must be positive");
  if (!(tau >= 0.0)) throw ParameterError("tau must be non-negative");
  if (!(Ts >= 0.0) || !finite(Ts))
    throw ParameterError("sampling time must be non-negative");
  if (std::abs(d0 - tau * v0) > 1e-12 * std::max(1.0, std::abs(d0)))
    throw ParameterError("d0 must equal tau * v0");
}

DragExposure exposure_for_position(std::size_t index, std::size_t count) {
  const bool has_preceding = index > 0;
  const bool has_following = index + 1 < count;
  if (has_preceding && has_following) return DragExposure::Both;
  if (has_preceding) return DragExposure::Preceding;
  if (has_following) return DragExposure::Following;
  return DragExposure::None;
}

double air_drag_factor(double d, DragExposure exposure,
                       const DragReduction& drag) {
  if (!(d >= 0.0)) throw DomainError("air_drag_factor: distance must be >= 0");
  double factor = 1.0;
  const bool preceding =
      exposure == DragExposure::Preceding || exposure == DragExposure::Both;
  const bool following =
      exposure == DragExposure::Following || exposure == DragExposure::Both;
  if (preceding && d <= DragReduction::kPrecedingRange)
    factor -= (drag.alpha1 * d + drag.alpha2) / 100.0;
  if (following && d <= DragReduction::kFollowingRange)
    factor -= (drag.beta1 * d + drag.beta2) / 100.0;
  return factor;
}

std::vector<VehicleCoefficients> linearized_coefficients(
    const std::vector<VehicleParams>& params, const OperatingPoint& op) {
  if (params.size() < 2)
    throw ParameterError("a platoon needs at least two vehicles");
  op.validate();
  for (const auto& p : params) p.validate();

  const double v0sq = op.v0 * op.v0;
  std::vector<VehicleCoefficients> out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    const double kd_eff =
        p.k_d * air_drag_factor(op.d0, exposure_for_position(i, params.size()),
                                op.drag);
    auto& c = out[i];
    c.theta = 1.0 - op.Ts * 2.0 * kd_eff * op.v0 / p.mass_kg;
    if (i > 0) c.front = -op.Ts * op.drag.alpha1 * p.k_d * v0sq / p.mass_kg;
    if (i + 1 < params.size())
      c.rear = -op.Ts * op.drag.beta1 * p.k_d * v0sq / p.mass_kg;
    c.input_gain = op.Ts * p.k_u / p.mass_kg;
  }
  return out;
}

// ---------------------------------------------------------------------------

SubsystemPartition::SubsystemPartition(std::vector<int> state_dims,
                                       std::vector<int> input_dims,
                                       bool lead_integrator)
    : state_dims_(std::move(state_dims)),
      input_dims_(std::move(input_dims)),
      lead_integrator_(lead_integrator) {
  if (state_dims_.empty() || state_dims_.size() != input_dims_.size())
    throw ParameterError("partition: state/input dimension lists disagree");
  for (std::size_t i = 0; i < state_dims_.size(); ++i) {
    if (state_dims_[i] <= 0 || input_dims_[i] <= 0)
      throw ParameterError("partition: dimensions must be positive");
    state_offsets_.push_back(n_);
    input_offsets_.push_back(m_);
    n_ += state_dims_[i];
    m_ += input_dims_[i];
  }
}

SubsystemPartition SubsystemPartition::chain(std::size_t vehicles,
                                             bool lead_integrator) {
  if (vehicles == 0) throw ParameterError("partition: no vehicles");
  std::vector<int> sd(vehicles, 2), id(vehicles, 1);
  sd[0] = lead_integrator ? 2 : 1;
  return SubsystemPartition(std::move(sd), std::move(id), lead_integrator);
}

std::size_t SubsystemPartition::owner_of_state(int index) const {
  for (std::size_t i = 0; i < state_dims_.size(); ++i)
    if (index >= state_offsets_[i] && index < state_offsets_[i] + state_dims_[i])
      return i;
  throw ParameterError("state index out of range");
}

std::size_t SubsystemPartition::owner_of_input(int index) const {
  for (std::size_t i = 0; i < input_dims_.size(); ++i)
    if (index >= input_offsets_[i] && index < input_offsets_[i] + input_dims_[i])
      return i;
  throw ParameterError("input index out of range");
}

int SubsystemPartition::velocity_index(std::size_t vehicle) const {
  if (vehicle == 0) return 0;
  return state_offset(vehicle) + 1;
}

int SubsystemPartition::spacing_index(std::size_t vehicle) const {
  if (vehicle == 0) throw ParameterError("the lead vehicle has no spacing");
  return state_offset(vehicle);
}

int SubsystemPartition::integrator_index() const {
  if (!lead_integrator_) throw ParameterError("model has no lead integrator");
  return 1;
}

// ---------------------------------------------------------------------------

bool is_symmetric(const Matrix& M, double tol) {
  if (M.rows() != M.cols()) return false;
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

double min_symmetric_eigenvalue(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double spectral_radius(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(M, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

void require_psd(const Matrix& M, const char* what) {
  if (!is_symmetric(M, 1e-12))
    throw ModelError(std::string(what) + " is not symmetric");
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if (min_symmetric_eigenvalue(M) < -1e-10 * scale)
    throw ModelError(std::string(what) + " is not positive semi-definite");
}

void require_pd(const Matrix& M, const char* what) {
  if (!is_symmetric(M, 1e-12))
    throw ModelError(std::string(what) + " is not symmetric");
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success)
    throw ModelError(std::string(what) + " is not positive definite");
}

}  // namespace

LinearPlatoonModel build_platoon_model(const std::vector<VehicleParams>& params,
                                       const OperatingPoint& op,
                                       const Matrix& W, const Matrix& P0) {
  const auto coeffs = linearized_coefficients(params, op);
  const std::size_t count = params.size();

  LinearPlatoonModel model;
  model.partition = SubsystemPartition::chain(count);
  const int n = model.partition.n();
  const int m = model.partition.m();
  if (W.rows() != n || W.cols() != n || P0.rows() != n || P0.cols() != n)
    throw ParameterError("W and P0 must be " + std::to_string(n) + "x" +
                         std::to_string(n));
  require_pd(W, "W");
  require_psd(P0, "P0");

  const auto& part = model.partition;
  model.A = Matrix::Zero(n, n);
  model.B = Matrix::Zero(n, m);
  for (std::size_t i = 0; i < count; ++i) {
    const int vi = part.velocity_index(i);
    model.A(vi, vi) = coeffs[i].theta;
    if (i > 0) {
      const int di = part.spacing_index(i);
      // d_{(i-1)i}(k+1) = v_{i-1}(k) + d_{(i-1)i}(k) - v_i(k)
      model.A(di, part.velocity_index(i - 1)) = 1.0;
      model.A(di, di) = 1.0;
      model.A(di, vi) = -1.0;
      model.A(vi, di) = coeffs[i].front;
    }
    if (i + 1 < count) model.A(vi, part.spacing_index(i + 1)) = coeffs[i].rear;
    model.B(vi, part.input_offset(i)) = coeffs[i].input_gain;
  }
  model.W = W;
  model.P0 = P0;
  model.v0 = op.v0;
  model.Ts = op.Ts;
  model.tau = op.tau;
  return model;
}

LinearPlatoonModel decouple(const LinearPlatoonModel& model) {
  LinearPlatoonModel out = model;
  const auto& part = model.partition;
  for (int r = 0; r < model.n(); ++r) {
    for (int c = 0; c < model.n(); ++c) {
      if (part.owner_of_state(r) != part.owner_of_state(c)) {
        out.A(r, c) = 0.0;
        out.W(r, c) = 0.0;
        out.P0(r, c) = 0.0;
      }
    }
  }
  return out;
}

LinearPlatoonModel with_lead_integrator(const LinearPlatoonModel& model,
                                        double Ts, double noise_variance) {
  if (model.partition.lead_integrator())
    throw ParameterError("model already has a lead integrator");
  if (model.partition.state_dim(0) != 1)
    throw ParameterError("lead integrator expects a scalar lead subsystem");
  if (!(noise_variance > 0.0))
    throw ParameterError("integrator noise variance must be positive");

  const int n = model.n();
  const int m = model.m();
  // Old index j maps to j for j = 0 and j + 1 otherwise.
  auto map = [](int j) { return j == 0 ? 0 : j + 1; };

  std::vector<int> sd = model.partition.state_dims();
  sd[0] = 2;
  LinearPlatoonModel out;
  out.partition =
      SubsystemPartition(sd, model.partition.input_dims(), /*integrator=*/true);
  out.A = Matrix::Zero(n + 1, n + 1);
  out.B = Matrix::Zero(n + 1, m);
  out.W = Matrix::Zero(n + 1, n + 1);
  out.P0 = Matrix::Zero(n + 1, n + 1);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      out.A(map(r), map(c)) = model.A(r, c);
      out.W(map(r), map(c)) = model.W(r, c);
      out.P0(map(r), map(c)) = model.P0(r, c);
    }
    out.B.row(map(r)) = model.B.row(r);
  }
  out.A(1, 0) = Ts;
  out.A(1, 1) = 1.0;
  out.v0 = model.v0;
  out.Ts = model.Ts;
  out.tau = model.tau;
  out.W(1, 1) = noise_variance;
  return out;
}

// ---------------------------------------------------------------------------

Matrix follower_weight_block(const FollowerWeights& w, double tau) {
  Matrix Qi(3, 3);
  Qi << w.w_dv, 0.0, -w.w_dv,                                     //
      0.0, w.w_d + w.w_tau, -tau * w.w_tau,                       //
      -w.w_dv, -tau * w.w_tau, tau * tau * w.w_tau + w.w_dv + w.w_v;
  return Qi;
}

CostSpec build_cost(const PlatoonWeights& weights, double tau,
                    const SubsystemPartition& partition) {
  const std::size_t count = partition.subsystems();
  if (weights.followers.size() + 1 != count)
    throw ParameterError("cost: expected " + std::to_string(count - 1) +
                         " follower weight sets");
  auto check = [](double w, const char* name) {
    if (!std::isfinite(w) || w < 0.0)
      throw ParameterError(std::string("cost: weight ") + name +
                           " must be finite and >= 0");
  };
  check(weights.lead_w_v, "lead w_v");
  check(weights.lead_w_u, "lead w_u");
  check(weights.integrator, "integrator");
  for (const auto& f : weights.followers) {
    check(f.w_tau, "w_tau");
    check(f.w_dv, "w_dv");
    check(f.w_d, "w_d");
    check(f.w_v, "w_v");
    check(f.w_u, "w_u");
  }
  if (!(weights.lead_w_u > 0.0))
    throw ParameterError("cost: R must be positive definite (lead w_u = 0)");
  for (std::size_t i = 0; i < weights.followers.size(); ++i)
    if (!(weights.followers[i].w_u > 0.0))
      throw ParameterError("cost: R must be positive definite (vehicle " +
                           std::to_string(i + 2) + " w_u = 0)");

  const int n = partition.n();
  const int m = partition.m();
  CostSpec cost;
  cost.weights = weights;
  cost.tau = tau;
  cost.Q = Matrix::Zero(n, n);
  cost.R = Matrix::Zero(m, m);

  cost.Q(partition.velocity_index(0), partition.velocity_index(0)) +=
      weights.lead_w_v;
  if (partition.lead_integrator()) {
    const int z = partition.integrator_index();
    cost.Q(z, z) += weights.integrator;
  }
  cost.R(partition.input_offset(0), partition.input_offset(0)) =
      weights.lead_w_u;

  for (std::size_t i = 1; i < count; ++i) {
    const Matrix Qi = follower_weight_block(weights.followers[i - 1], tau);
    const int idx[3] = {partition.velocity_index(i - 1),
                        partition.spacing_index(i), partition.velocity_index(i)};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) cost.Q(idx[r], idx[c]) += Qi(r, c);
    const int u = partition.input_offset(i);
    cost.R(u, u) = weights.followers[i - 1].w_u;
  }
  cost.Q0 = cost.Q;

  require_psd(cost.Q, "Q");
  Eigen::LLT<Matrix> llt(cost.R);
  if (llt.info() != Eigen::Success)
    throw ParameterError("cost: R is not positive definite");
  return cost;
}

CostSpec decouple(const CostSpec& cost, const SubsystemPartition& partition) {
  if (cost.Q.rows() != partition.n())
    throw ParameterError("decouple: cost does not match the partition");
  CostSpec out = cost;
  for (int r = 0; r < partition.n(); ++r)
    for (int c = 0; c < partition.n(); ++c)
      if (partition.owner_of_state(r) != partition.owner_of_state(c)) {
        out.Q(r, c) = 0.0;
        out.Q0(r, c) = 0.0;
      }
  return out;
}

double stage_state_cost_by_terms(const PlatoonWeights& weights, double tau,
                                 const SubsystemPartition& partition,
                                 const Vector& x) {
  double J = 0.0;
  const double v1 = x(partition.velocity_index(0));
  J += weights.lead_w_v * v1 * v1;
  if (partition.lead_integrator()) {
    const double z = x(partition.integrator_index());
    J += weights.integrator * z * z;
  }
  for (std::size_t i = 1; i < partition.subsystems(); ++i) {
    const auto& w = weights.followers[i - 1];
    const double vp = x(partition.velocity_index(i - 1));
    const double d = x(partition.spacing_index(i));
    const double v = x(partition.velocity_index(i));
    J += w.w_tau * (d - tau * v) * (d - tau * v);
    J += w.w_dv * (vp - v) * (vp - v);
    J += w.w_d * d * d;
    J += w.w_v * v * v;
  }
  return J;
}

}  // namespace platoon
