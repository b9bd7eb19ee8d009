// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// if any criterion fails, except ids passed with --allow-fail (still printed
// as FAIL).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "platoon/config.hpp"
#include "platoon/io.hpp"
#include "platoon/simulator.hpp"
#include "platoon/validation.hpp"

using namespace platoon;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

CheckResult timed_limit(CheckResult r, double limit) {
  if (r.seconds >= limit) {
    r.passed = false;
    r.detail += "; runtime " + fmt("%.2f", r.seconds) + " s over the " + fmt("%.0f", limit) + " s limit";
  } else {
    r.detail += "; " + fmt("%.3f", r.seconds) + " s";
  }
  return r;
}

CheckResult cost_ordering(const Problem& p, const DelayedGains& g) {
  const auto t0 = Clock::now();
  CheckResult r{"AC8", "cost ordering and Monte Carlo consistency", true, "", 0.0};
  const ComparisonReport rep = compare_controllers(p.model, p.cost, g, CompareOptions{});
  std::ostringstream d;
  d.precision(6);
  const bool ordered = rep.j_cent < rep.j_dist && rep.j_dist < rep.j_delayed;
  d << "J_cent " << rep.j_cent << " < J_dist " << rep.j_dist << " < J_delayed "
    << rep.j_delayed << (ordered ? "" : " (violated)") << "; "
    << rep.options.runs * static_cast<std::size_t>(rep.options.steps_per_run)
    << " steps each, z =";
  r.passed = ordered;
  for (const auto& c : rep.controllers) {
    const double z = (c.empirical.mean - c.analytic_rate) / c.empirical.std_error;
    d << ' ' << to_string(c.kind) << ' ' << fmt("%.2f", z);
    if (!(std::abs(z) <= 3.0)) r.passed = false;
  }
  r.detail = d.str();
  r.seconds = seconds_since(t0);
  return r;
}

// Input that holds vehicle i at v0 on a flat road.
double equilibrium_input(const VehicleParams& v, const OperatingPoint& op,
                         std::size_t i, std::size_t count) {
  const double factor = air_drag_factor(op.d0, exposure_for_position(i, count), op.drag);
  return (v.k_d * factor * op.v0 * op.v0 + v.k_fr * v.mass_kg * v.k_g) / v.k_u;
}

CheckResult scenario(const std::string& config_path, const DelayedGains& base_gains) {
  const auto t0 = Clock::now();
  CheckResult r{"AC9", "speed-profile scenario", true, "", 0.0};
  std::ostringstream d;
  const RunConfig cfg = load_run_config(config_path);
  const Problem p = build_problem(cfg);
  const DelayedGains g = synthesize_steady(p.model, p.cost, cfg.synthesis.options);
  const auto& prof = cfg.scenario.profile;
  const std::size_t count = p.vehicles.size();

  double worst_track = 0.0, min_space = 1e300, worst_margin = 1e300;
  for (auto kind : {ControllerKind::Distributed, ControllerKind::DistributedMessagePassing,
                    ControllerKind::Centralized}) {
    const SimTrace tr = run_closed_loop(p.model, p.cost, g, kind, cfg.scenario);
    const TraceSummary s = summarize_trace(tr, p.cost, p.op.d0);
    // lead tracking: mean error over the last 5 s of each segment vs the step
    const long window = std::lround(5.0 / p.model.Ts);
    for (std::size_t seg = 0; seg < prof.size(); ++seg) {
      const long end = seg + 1 < prof.size() ? std::lround(prof[seg + 1].time_s / p.model.Ts)
                                             : tr.steps();
      const double step = std::abs((seg == 0 ? p.model.v0 : prof[seg - 1].speed_mps) -
                                   prof[seg].speed_mps);
      double e = 0.0;
      for (long k = end - window; k < end; ++k) e += tr.x[k](0);
      e = std::abs(e / static_cast<double>(window));
      worst_track = std::max(worst_track, e / step);
    }
    for (double sp : s.min_spacing) min_space = std::min(min_space, sp);
    for (std::size_t i = 0; i < count; ++i) {
      const double ueq = equilibrium_input(p.vehicles[i], p.op, i, count);
      const double hi = p.vehicles[i].max_engine_input - ueq;
      const double lo = -p.vehicles[i].max_brake_input - ueq;
      worst_margin = std::min({worst_margin, hi - s.max_input[i], s.min_input[i] - lo});
    }
  }
  const bool tracks = worst_track <= 0.10;
  const bool spaced = min_space > 0.0;
  const bool bounded = worst_margin >= 0.0;

  const ComparisonReport rep = analytic_comparison(base_gains);
  const double ratio = rep.gap_dist_delayed_pct / rep.gap_dist_cent_pct;
  const bool gaps = ratio >= 10.0;

  d << "tracking error " << fmt("%.1f", 100.0 * worst_track) << " % of step"
    << (tracks ? "" : " (>10 %)") << ", min spacing " << fmt("%.2f", min_space) << " m"
    << (spaced ? "" : " (reversal)") << ", input margin " << fmt("%.3f", worst_margin)
    << (bounded ? "" : " (out of bounds)") << "; gap(dist,cent) "
    << fmt("%.4f", rep.gap_dist_cent_pct) << " %, gap(dist,delayed) "
    << fmt("%.4f", rep.gap_dist_delayed_pct) << " %, ratio " << fmt("%.2f", ratio)
    << (gaps ? "" : " (< 10)");
  r.passed = tracks && spaced && bounded && gaps;
  r.detail = d.str();
  r.seconds = seconds_since(t0);
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string config_dir = PLATOON_CONFIG_DIR;
  std::vector<std::string> allow;
  std::uint64_t seed = ValidationOptions{}.seed;
  app.add_option("--config-dir", config_dir, "directory with the shipped configs");
  app.add_option("--allow-fail", allow, "criterion ids whose failure does not fail the run");
  app.add_option("--seed", seed, "seed for the randomized checks");
  CLI11_PARSE(app, argc, argv);

  const RunConfig cfg = load_run_config(config_dir + "/default.json");
  const Problem p = build_problem(cfg);
  const DelayedGains g = synthesize_steady(p.model, p.cost, cfg.synthesis.options);
  ValidationOptions vo;
  vo.seed = seed;

  std::vector<CheckResult> results;
  auto run = [&](auto&& f) {
    try {
      results.push_back(f());
    } catch (const std::exception& e) {
      results.push_back({"?", "exception", false, e.what(), 0.0});
    }
  };
  run([&] { return timed_limit(check_golden_ratio(), 1.0); });
  run([&] { return check_kronecker_identities(vo.seed, vo.instances); });
  run([&] { return check_quadratic_definiteness(vo.seed, vo.instances); });
  run([&] { return timed_limit(check_oracle_gains(p.model, p.cost, vo), 10.0); });
  run([&] { return check_decoupled_reduction(p.model, p.cost); });
  run([&] { return check_estimator_identities(p.model, g, vo.seed, vo.estimator_steps); });
  run([&] { return check_distributed_equivalence(p.model, g, vo.seed, vo.equivalence_steps); });
  run([&] { return cost_ordering(p, g); });
  run([&] { return scenario(config_dir + "/speed_profile.json", g); });
  run([&] { return check_orthogonality(p.model, g, vo.seed, vo.orthogonality_steps); });

  const std::set<std::string> allowed(allow.begin(), allow.end());
  int hard_failures = 0;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.id << " " << r.name << ": " << r.detail;
    if (!r.passed && allowed.count(r.id)) std::cout << " [allowed]";
    std::cout << '\n';
    if (!r.passed && !allowed.count(r.id)) ++hard_failures;
  }
  return hard_failures == 0 ? 0 : 1;
}
