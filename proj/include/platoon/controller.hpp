#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "platoon/model.hpp"
#include "platoon/synthesis.hpp"

namespace platoon {

/// Matrices the controller realization needs. The delayed-centralized
/// baseline is the same realization with F = M = 0.
struct Realization {
  Matrix A;
  Matrix B;
  Matrix F;
  Matrix M;
  Matrix L;

  static Realization distributed(const LinearPlatoonModel& model,
                                 const DelayedGains& gains);
  static Realization delayed_centralized(const LinearPlatoonModel& model,
                                         const DelayedGains& gains);
};

/// State of the monolithic realization at step k:
///   zeta = zeta(k) = A x(k-1) + B u(k-1), zeta_prev = zeta(k-1),
///   xi = xi(k) = E{x(k) | x(0:k-2)}, x_prev = x(k-1).
/// Pre-history is zero: x(-1) = zeta(-1) = zeta(0) = xi(0) = 0.
struct ControllerState {
  Vector zeta;
  Vector zeta_prev;
  Vector xi;
  Vector x_prev;
  long k = 0;

  static ControllerState initial(int n);
};

/// xi(k+1) = A zeta(k) + B M (x(k-1) - zeta(k-1)) + B L xi(k) + c(k).
/// Depends only on the state at k, not on x(k). `c` is a known exogenous
/// term of the transition k -> k+1 (a scheduled reference change); empty
/// means zero.
Vector xi_ahead(const ControllerState& s, const Realization& g,
                const Vector& c = {});

struct StepOutput {
  Vector u;
  ControllerState next;
};

/// u(k) = F(x(k) - zeta(k)) + M(x(k-1) - zeta(k-1)) + L xi(k), then advances
/// the predictor zeta(k+1) = A x(k) + B u(k) + c(k) and the two-step
/// conditional mean.
StepOutput monolithic_step(const ControllerState& state, const Realization& g,
                           const Vector& x, const Vector& c = {});

class FeedbackController {
 public:
  virtual ~FeedbackController() = default;
  /// `c` is the known exogenous part of x(k+1) - A x(k) - B u(k) (zero
  /// without a reference schedule); controllers without a predictor ignore it.
  virtual Vector step(const Vector& x, const Vector& c) = 0;
  Vector step(const Vector& x) { return step(x, Vector()); }
};

class MonolithicController : public FeedbackController {
 public:
  explicit MonolithicController(Realization g);
  using FeedbackController::step;
  Vector step(const Vector& x, const Vector& c) override;
  const ControllerState& state() const { return state_; }
  const Realization& realization() const { return g_; }

 private:
  Realization g_;
  ControllerState state_;
};

class CentralizedController : public FeedbackController {
 public:
  explicit CentralizedController(Matrix L) : L_(std::move(L)) {}
  using FeedbackController::step;
  Vector step(const Vector& x, const Vector&) override { return L_ * x; }

 private:
  Matrix L_;
};

// ---------------------------------------------------------------------------
// Per-vehicle execution.

struct Message {
  std::size_t sender = 0;
  std::size_t recipient = 0;
  std::size_t origin = 0;  // vehicle whose state is carried
  long origin_step = 0;    // time index of the carried state
  long send_step = 0;
  long delivery_step = 0;
  Vector payload;
};

/// Lossless chain channel with a one-step hop delay. Vehicles only talk to
/// their immediate neighbors; states of non-adjacent vehicles travel through
/// the vehicle in between and arrive two steps after they were measured.
class MessageBus {
 public:
  explicit MessageBus(std::size_t vehicles) : vehicles_(vehicles) {}

  void send(Message msg);
  /// Removes and returns messages due for `recipient` at `step`.
  std::vector<Message> collect(std::size_t recipient, long step);

  /// Test hook: silently drop the message carrying `origin`'s state from
  /// `origin_step` on its way to `recipient`.
  void withhold(std::size_t origin, long origin_step, std::size_t recipient);

  std::size_t vehicles() const { return vehicles_; }
  std::size_t in_flight() const { return queue_.size(); }

 private:
  std::size_t vehicles_;
  std::vector<Message> queue_;
  std::set<std::tuple<std::size_t, long, std::size_t>> withheld_;
};

/// Everything vehicle i may use at step k beyond its own memory:
/// its own state x_i(k), its neighbors' states x_j(k-1), and the full state
/// x(k-2) once it has become common. `known_shift` is c(k) of the public
/// reference schedule (empty when there is none).
struct VehicleInbox {
  std::size_t vehicle = 0;
  long k = 0;
  Vector own_state;
  std::map<std::size_t, Vector> neighbor_prev;
  std::optional<Vector> common;
  Vector known_shift;
};

/// One vehicle's controller. It keeps its own x_i(k-1) and u_i(k-1) and runs
/// a replica of the monolithic realization on the common history x(0:k-2),
/// from which it recovers zeta(k-1), xi(k) and every vehicle's u(k-2).
class VehicleController {
 public:
  VehicleController(std::size_t id, Realization g, SubsystemPartition partition);

  /// Throws InformationViolation when the inbox lacks a required item or holds
  /// anything outside the vehicle's information set.
  Vector step(const VehicleInbox& inbox);

  std::size_t id() const { return id_; }
  const std::vector<Vector>& common_history() const { return common_; }
  /// Neighbors whose k-1 states enter this vehicle's law.
  const std::vector<std::size_t>& neighbors() const { return neighbors_; }

 private:
  void check_inbox(const VehicleInbox& inbox) const;

  std::size_t id_;
  Realization g_;
  SubsystemPartition part_;
  std::vector<std::size_t> neighbors_;
  MonolithicController replica_;
  std::vector<Vector> common_;
  std::vector<Vector> shifts_;  // c(0..k-1)
  Vector own_prev_state_;
  Vector own_prev_input_;
  long k_ = 0;
};

/// Runs one VehicleController per subsystem and exchanges states over a
/// MessageBus. Returns the same u(k) as the monolithic realization.
class DistributedController : public FeedbackController {
 public:
  DistributedController(Realization g, SubsystemPartition partition);

  using FeedbackController::step;
  Vector step(const Vector& x, const Vector& c) override;

  MessageBus& bus() { return bus_; }
  const std::vector<VehicleController>& vehicles() const { return nodes_; }
  /// Inbox handed to vehicle i at the last step (for inspection in tests).
  const VehicleInbox& last_inbox(std::size_t i) const { return last_inbox_.at(i); }

 private:
  struct NodeMemory {
    // States received from neighbors, keyed by (origin, origin_step).
    std::map<std::pair<std::size_t, long>, Vector> received;
    std::map<long, Vector> own_states;
  };

  SubsystemPartition part_;
  std::vector<VehicleController> nodes_;
  std::vector<NodeMemory> memory_;
  std::vector<VehicleInbox> last_inbox_;
  MessageBus bus_;
  long k_ = 0;
};

enum class ControllerKind {
  Distributed,                // monolithic realization of the optimal law
  DistributedMessagePassing,  // per-vehicle execution over the message bus
  Centralized,                // u = L x, full state without delay
  DelayedCentralized,         // u = L xi, common information only
};

std::string to_string(ControllerKind kind);
ControllerKind parse_controller_kind(const std::string& name);

std::unique_ptr<FeedbackController> make_controller(
    ControllerKind kind, const LinearPlatoonModel& model,
    const DelayedGains& gains);

}  // namespace platoon
