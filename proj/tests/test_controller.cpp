#include <doctest.h>

#include "helpers.hpp"
#include "platoon/controller.hpp"
#include "platoon/error.hpp"
#include "platoon/simulator.hpp"
#include "platoon/validation.hpp"

using namespace platoon;
using testutil::max_abs;

namespace {

struct Fixture {
  Problem p = testutil::default_problem();
  DelayedGains g = synthesize_steady(p.model, p.cost);
  Realization r = Realization::distributed(p.model, g);
};

}  // namespace

TEST_CASE("monolithic realization boundary and equilibrium") {
  Fixture f;
  std::mt19937_64 rng(1);
  const Vector x0 = testutil::random_matrix(rng, 5, 1);
  const auto out = monolithic_step(ControllerState::initial(5), f.r, x0);
  CHECK(max_abs(out.u - f.g.F * x0) < 1e-15);
  CHECK(max_abs(out.next.zeta - (f.p.model.A * x0 + f.p.model.B * out.u)) < 1e-15);

  MonolithicController c(f.r);
  for (int k = 0; k < 50; ++k) CHECK(c.step(Vector::Zero(5)).isZero(0.0));
  CHECK_THROWS_AS(monolithic_step(ControllerState::initial(5), f.r, Vector::Zero(4)),
                  ParameterError);
}

TEST_CASE("predictor identities on a recorded-noise run") {
  Fixture f;
  const auto r = check_estimator_identities(f.p.model, f.g, 3, 2000);
  CHECK_MESSAGE(r.passed, r.detail);
}

TEST_CASE("delayed-centralized realization is u = L xi") {
  Fixture f;
  const Realization d = Realization::delayed_centralized(f.p.model, f.g);
  CHECK(d.F.isZero(0.0));
  CHECK(d.M.isZero(0.0));
  MonolithicController c(d);
  std::mt19937_64 rng(2);
  for (int k = 0; k < 20; ++k) {
    const Vector xi = c.state().xi;
    const Vector u = c.step(testutil::random_matrix(rng, 5, 1));
    CHECK(max_abs(u - f.g.L * xi) < 1e-14);
  }
}

TEST_CASE("per-vehicle execution") {
  Fixture f;
  const NoiseSampler noise(f.p.model.W);
  SUBCASE("matches the monolithic law") {
    const auto r = check_distributed_equivalence(f.p.model, f.g, 9, 1000);
    CHECK_MESSAGE(r.passed, r.detail);
  }
  SUBCASE("matches with a known exogenous term") {
    Rng rng = make_rng(4, 0);
    MonolithicController mono(f.r);
    DistributedController dist(f.r, f.p.model.partition);
    Vector x = noise.draw(rng);
    double worst = 0.0;
    for (int k = 0; k < 300; ++k) {
      const Vector c = 1e-3 * testutil::random_matrix(rng, 5, 1);
      const Vector u = mono.step(x, c);
      worst = std::max(worst, max_abs(u - dist.step(x, c)));
      x = f.p.model.A * x + f.p.model.B * u + c + noise.draw(rng);
    }
    CHECK(worst <= 1e-12);
  }
  SUBCASE("information timing") {
    Rng rng = make_rng(5, 0);
    DistributedController dist(f.r, f.p.model.partition);
    std::vector<Vector> xs;
    Vector x = noise.draw(rng);
    for (long k = 0; k < 12; ++k) {
      xs.push_back(x);
      const Vector u = dist.step(x);
      const auto& in0 = dist.last_inbox(0);
      const auto& in2 = dist.last_inbox(2);
      if (k == 0) {
        CHECK(in0.neighbor_prev.empty());
        CHECK_FALSE(in0.common.has_value());
      }
      if (k == 1) {
        // vehicle 1 sees only x1(1) and x2(0) beyond its own memory
        CHECK(in0.neighbor_prev.size() == 1);
        CHECK(max_abs(in0.neighbor_prev.at(1) - xs[0].segment(1, 2)) == 0.0);
        CHECK_FALSE(in0.common.has_value());
      }
      if (k >= 1) {
        // x2(k-1) reaches vehicles 1 and 3 after one hop
        CHECK(max_abs(in0.neighbor_prev.at(1) - xs[static_cast<std::size_t>(k - 1)].segment(1, 2)) == 0.0);
        CHECK(max_abs(in2.neighbor_prev.at(1) - xs[static_cast<std::size_t>(k - 1)].segment(1, 2)) == 0.0);
        CHECK(in0.neighbor_prev.count(2) == 0);
      }
      if (k >= 2) {
        // x3(k-2) reaches vehicle 1 through the relay, and the whole state is common
        REQUIRE(in0.common.has_value());
        CHECK(*in0.common == xs[static_cast<std::size_t>(k - 2)]);
        CHECK(*in2.common == xs[static_cast<std::size_t>(k - 2)]);
      }
      x = f.p.model.A * x + f.p.model.B * u + noise.draw(rng);
    }
    const auto& v = dist.vehicles();
    CHECK(v[0].common_history() == v[1].common_history());
    CHECK(v[1].common_history() == v[2].common_history());
    CHECK(v[0].common_history().size() == 10);
  }
  SUBCASE("withholding a neighbor state is detected") {
    Rng rng = make_rng(6, 0);
    DistributedController dist(f.r, f.p.model.partition);
    dist.bus().withhold(1, 3, 0);  // x2(3) never reaches vehicle 1
    Vector x = noise.draw(rng);
    bool raised = false;
    try {
      for (long k = 0; k < 6; ++k) {
        const Vector u = dist.step(x);
        x = f.p.model.A * x + f.p.model.B * u + noise.draw(rng);
      }
    } catch (const InformationViolation&) {
      raised = true;
    }
    CHECK(raised);
  }
  SUBCASE("a vehicle rejects information outside its set") {
    VehicleController v(0, f.r, f.p.model.partition);
    VehicleInbox in;
    in.vehicle = 0;
    in.k = 0;
    in.own_state = Vector::Zero(1);
    in.neighbor_prev[2] = Vector::Zero(2);  // vehicle 3 is not a neighbor
    CHECK_THROWS_AS(v.step(in), InformationViolation);
    VehicleInbox early;
    early.vehicle = 0;
    early.k = 0;
    early.own_state = Vector::Zero(1);
    early.common = Vector::Zero(5);  // nothing is common at k = 0
    VehicleController v2(0, f.r, f.p.model.partition);
    CHECK_THROWS_AS(v2.step(early), InformationViolation);
  }
}

TEST_CASE("message bus") {
  MessageBus bus(3);
  bus.send({0, 1, 0, 4, 4, 0, Vector::Ones(1)});
  CHECK(bus.collect(1, 4).empty());
  const auto got = bus.collect(1, 5);
  REQUIRE(got.size() == 1);
  CHECK(got[0].delivery_step == 5);
  CHECK(got[0].payload == Vector::Ones(1));
  CHECK(bus.in_flight() == 0);
}

TEST_CASE("controller kinds") {
  CHECK(parse_controller_kind("dist") == ControllerKind::Distributed);
  CHECK(parse_controller_kind("dist-mp") == ControllerKind::DistributedMessagePassing);
  CHECK(parse_controller_kind("cent") == ControllerKind::Centralized);
  CHECK(parse_controller_kind("delayed") == ControllerKind::DelayedCentralized);
  CHECK_THROWS_AS(parse_controller_kind("lqr"), ParameterError);
  for (auto k : {ControllerKind::Distributed, ControllerKind::DistributedMessagePassing,
                 ControllerKind::Centralized, ControllerKind::DelayedCentralized})
    CHECK(parse_controller_kind(to_string(k)) == k);
}
