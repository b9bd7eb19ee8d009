#include "platoon/controller.hpp"

#include <algorithm>

#include "platoon/error.hpp"

namespace platoon {

Realization Realization::distributed(const LinearPlatoonModel& model,
                                     const DelayedGains& gains) {
  if (gains.F.rows() != model.m() || gains.F.cols() != model.n())
    throw ParameterError("gains do not match the model dimensions");
  return {model.A, model.B, gains.F, gains.M, gains.L};
}

Realization Realization::delayed_centralized(const LinearPlatoonModel& model,
                                             const DelayedGains& gains) {
  if (gains.L.rows() != model.m() || gains.L.cols() != model.n())
    throw ParameterError("gains do not match the model dimensions");
  const Matrix Z = Matrix::Zero(model.m(), model.n());
  return {model.A, model.B, Z, Z, gains.L};
}

ControllerState ControllerState::initial(int n) {
  ControllerState s;
  s.zeta = Vector::Zero(n);
  s.zeta_prev = Vector::Zero(n);
  s.xi = Vector::Zero(n);
  s.x_prev = Vector::Zero(n);
  return s;
}

Vector xi_ahead(const ControllerState& s, const Realization& g,
                const Vector& c) {
  Vector next = g.A * s.zeta + g.B * (g.M * (s.x_prev - s.zeta_prev)) +
                g.B * (g.L * s.xi);
  if (c.size() > 0) next += c;
  return next;
}

StepOutput monolithic_step(const ControllerState& state, const Realization& g,
                           const Vector& x, const Vector& c) {
  if (x.size() != g.A.rows() || state.zeta.size() != g.A.rows() ||
      (c.size() > 0 && c.size() != x.size()))
    throw ParameterError("monolithic_step: state dimension mismatch");
  StepOutput out;
  out.u = g.F * (x - state.zeta) + g.M * (state.x_prev - state.zeta_prev) +
          g.L * state.xi;
  out.next.zeta = g.A * x + g.B * out.u;
  if (c.size() > 0) out.next.zeta += c;
  out.next.zeta_prev = state.zeta;
  out.next.xi = xi_ahead(state, g, c);
  out.next.x_prev = x;
  out.next.k = state.k + 1;
  return out;
}

MonolithicController::MonolithicController(Realization g)
    : g_(std::move(g)), state_(ControllerState::initial(static_cast<int>(g_.A.rows()))) {}

Vector MonolithicController::step(const Vector& x, const Vector& c) {
  StepOutput out = monolithic_step(state_, g_, x, c);
  state_ = std::move(out.next);
  return out.u;
}

// ---------------------------------------------------------------------------

namespace {

bool adjacent(std::size_t a, std::size_t b) {
  return a != b && (a > b ? a - b : b - a) == 1;
}

}  // namespace

void MessageBus::send(Message msg) {
  if (msg.sender >= vehicles_ || msg.recipient >= vehicles_ ||
      !adjacent(msg.sender, msg.recipient))
    throw ParameterError("message bus: vehicles are not chain neighbors");
  msg.delivery_step = msg.send_step + 1;
  if (withheld_.count({msg.origin, msg.origin_step, msg.recipient})) return;
  queue_.push_back(std::move(msg));
}

std::vector<Message> MessageBus::collect(std::size_t recipient, long step) {
  std::vector<Message> due;
  auto it = std::stable_partition(queue_.begin(), queue_.end(), [&](const Message& m) {
    return !(m.recipient == recipient && m.delivery_step == step);
  });
  std::move(it, queue_.end(), std::back_inserter(due));
  queue_.erase(it, queue_.end());
  return due;
}

void MessageBus::withhold(std::size_t origin, long origin_step,
                          std::size_t recipient) {
  withheld_.insert({origin, origin_step, recipient});
}

// ---------------------------------------------------------------------------

VehicleController::VehicleController(std::size_t id, Realization g,
                                     SubsystemPartition partition)
    : id_(id),
      g_(std::move(g)),
      part_(std::move(partition)),
      replica_(g_) {
  if (id_ >= part_.subsystems())
    throw ParameterError("vehicle id out of range");
  if (id_ > 0) neighbors_.push_back(id_ - 1);
  if (id_ + 1 < part_.subsystems()) neighbors_.push_back(id_ + 1);
  own_prev_state_ = Vector::Zero(part_.state_dim(id_));
  own_prev_input_ = Vector::Zero(part_.input_dim(id_));
}

void VehicleController::check_inbox(const VehicleInbox& inbox) const {
  auto fail = [&](const std::string& what) {
    throw InformationViolation("vehicle " + std::to_string(id_ + 1) + ", k = " +
                               std::to_string(inbox.k) + ": " + what);
  };
  if (inbox.vehicle != id_) fail("inbox addressed to another vehicle");
  if (inbox.k != k_) fail("inbox is for the wrong step");
  if (inbox.own_state.size() != part_.state_dim(id_)) fail("own state missing");
  for (const auto& [j, xj] : inbox.neighbor_prev) {
    if (std::find(neighbors_.begin(), neighbors_.end(), j) == neighbors_.end())
      fail("holds the k-1 state of non-neighbor vehicle " + std::to_string(j + 1));
    if (inbox.k == 0) fail("holds neighbor states before any were sent");
    if (xj.size() != part_.state_dim(j))
      fail("neighbor state has the wrong size");
  }
  if (inbox.k >= 1) {
    for (std::size_t j : neighbors_)
      if (!inbox.neighbor_prev.count(j))
        fail("missing x_" + std::to_string(j + 1) + "(k-1)");
  }
  if (inbox.known_shift.size() != 0 && inbox.known_shift.size() != part_.n())
    fail("known shift has the wrong size");
  if (inbox.common) {
    if (inbox.k < 2) fail("holds common history before it exists");
    if (inbox.common->size() != part_.n()) fail("common state has the wrong size");
  } else if (inbox.k >= 2) {
    fail("missing the common state x(k-2)");
  }
}

Vector VehicleController::step(const VehicleInbox& inbox) {
  check_inbox(inbox);
  const int off = part_.state_offset(id_);
  const int dim = part_.state_dim(id_);
  const int uoff = part_.input_offset(id_);
  const int udim = part_.input_dim(id_);

  Vector u(udim);
  if (k_ == 0) {
    u = g_.F.block(uoff, off, udim, dim) * inbox.own_state;
  } else {
    if (inbox.common) {
      common_.push_back(*inbox.common);
      // The replica takes x(k-2) with c(k-2) and is then at step k-1.
      replica_.step(*inbox.common, shifts_.at(static_cast<std::size_t>(k_ - 2)));
    }
    const ControllerState& rs = replica_.state();
    const Vector& c_prev = shifts_.back();  // c(k-1)
    const Vector xi = xi_ahead(rs, g_, c_prev);  // xi(k)

    // zeta_i(k) = sum_j A_ij x_j(k-1) + B_i u_i(k-1), j over self and
    // neighbors; A has no other blocks in row i.
    Vector zeta_i = g_.A.block(off, off, dim, dim) * own_prev_state_ +
                    g_.B.block(off, uoff, dim, udim) * own_prev_input_;
    for (std::size_t j : neighbors_)
      zeta_i += g_.A.block(off, part_.state_offset(j), dim, part_.state_dim(j)) *
                inbox.neighbor_prev.at(j);
    if (c_prev.size() > 0) zeta_i += c_prev.segment(off, dim);

    u = g_.F.block(uoff, off, udim, dim) * (inbox.own_state - zeta_i);
    // M row i only reaches self and neighbors; zeta(k-1) is common.
    auto delayed_term = [&](std::size_t j, const Vector& xj) {
      const int oj = part_.state_offset(j);
      const int dj = part_.state_dim(j);
      u += g_.M.block(uoff, oj, udim, dj) * (xj - rs.zeta.segment(oj, dj));
    };
    delayed_term(id_, own_prev_state_);
    for (std::size_t j : neighbors_) delayed_term(j, inbox.neighbor_prev.at(j));
    u += g_.L.middleRows(uoff, udim) * xi;
  }

  own_prev_state_ = inbox.own_state;
  own_prev_input_ = u;
  shifts_.push_back(inbox.known_shift);
  ++k_;
  return u;
}

// ---------------------------------------------------------------------------

DistributedController::DistributedController(Realization g,
                                             SubsystemPartition partition)
    : part_(std::move(partition)),
      memory_(part_.subsystems()),
      last_inbox_(part_.subsystems()),
      bus_(part_.subsystems()) {
  if (part_.subsystems() > 3)
    throw StructureError(
        "distributed execution needs every state to be common after two "
        "steps; chains longer than three vehicles are not supported");
  for (std::size_t i = 0; i < part_.subsystems(); ++i)
    nodes_.emplace_back(i, g, part_);
}

Vector DistributedController::step(const Vector& x, const Vector& c) {
  const std::size_t count = part_.subsystems();
  if (x.size() != part_.n() || (c.size() > 0 && c.size() != part_.n()))
    throw ParameterError("distributed step: state dimension mismatch");

  Vector u(part_.m());
  std::vector<std::vector<Message>> delivered(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto& mem = memory_[i];
    const Vector own = x.segment(part_.state_offset(i), part_.state_dim(i));
    mem.own_states[k_] = own;

    delivered[i] = bus_.collect(i, k_);
    for (const auto& msg : delivered[i])
      mem.received[{msg.origin, msg.origin_step}] = msg.payload;

    VehicleInbox inbox;
    inbox.vehicle = i;
    inbox.k = k_;
    inbox.own_state = own;
    inbox.known_shift = c;
    for (std::size_t j : nodes_[i].neighbors()) {
      auto it = mem.received.find({j, k_ - 1});
      if (it != mem.received.end()) inbox.neighbor_prev[j] = it->second;
    }
    if (k_ >= 2) {
      Vector common(part_.n());
      bool complete = true;
      for (std::size_t j = 0; j < count && complete; ++j) {
        const Vector* piece = nullptr;
        if (j == i) {
          piece = &mem.own_states.at(k_ - 2);
        } else {
          auto it = mem.received.find({j, k_ - 2});
          if (it != mem.received.end()) piece = &it->second;
        }
        if (piece)
          common.segment(part_.state_offset(j), part_.state_dim(j)) = *piece;
        else
          complete = false;
      }
      if (complete) inbox.common = std::move(common);
    }

    u.segment(part_.input_offset(i), part_.input_dim(i)) = nodes_[i].step(inbox);
    last_inbox_[i] = std::move(inbox);

    // Items older than k-2 are never needed again.
    std::erase_if(mem.received, [&](const auto& kv) { return kv.first.second < k_ - 2; });
    std::erase_if(mem.own_states, [&](const auto& kv) { return kv.first < k_ - 2; });
  }

  // Outgoing traffic: own state to each neighbor, and relay of what arrived
  // from one neighbor to the other side.
  for (std::size_t i = 0; i < count; ++i) {
    const Vector own = x.segment(part_.state_offset(i), part_.state_dim(i));
    for (std::size_t j : nodes_[i].neighbors())
      bus_.send({i, j, i, k_, k_, 0, own});
    for (const auto& msg : delivered[i]) {
      if (msg.origin != msg.sender) continue;  // already relayed once
      for (std::size_t j : nodes_[i].neighbors())
        if (j != msg.sender) bus_.send({i, j, msg.origin, msg.origin_step, k_, 0, msg.payload});
    }
  }
  ++k_;
  return u;
}

// ---------------------------------------------------------------------------

std::string to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::Distributed: return "dist";
    case ControllerKind::DistributedMessagePassing: return "dist-mp";
    case ControllerKind::Centralized: return "cent";
    case ControllerKind::DelayedCentralized: return "delayed";
  }
  return "?";
}

ControllerKind parse_controller_kind(const std::string& name) {
  if (name == "dist") return ControllerKind::Distributed;
  if (name == "dist-mp") return ControllerKind::DistributedMessagePassing;
  if (name == "cent") return ControllerKind::Centralized;
  if (name == "delayed") return ControllerKind::DelayedCentralized;
  throw ParameterError("unknown controller '" + name +
                       "' (expected dist, dist-mp, cent or delayed)");
}

std::unique_ptr<FeedbackController> make_controller(
    ControllerKind kind, const LinearPlatoonModel& model,
    const DelayedGains& gains) {
  switch (kind) {
    case ControllerKind::Distributed:
      return std::make_unique<MonolithicController>(
          Realization::distributed(model, gains));
    case ControllerKind::DistributedMessagePassing:
      return std::make_unique<DistributedController>(
          Realization::distributed(model, gains), model.partition);
    case ControllerKind::Centralized:
      return std::make_unique<CentralizedController>(gains.L);
    case ControllerKind::DelayedCentralized:
      return std::make_unique<MonolithicController>(
          Realization::delayed_centralized(model, gains));
  }
  throw ParameterError("unknown controller kind");
}

}  // namespace platoon
