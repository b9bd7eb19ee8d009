#include "platoon/cli.hpp"

#include <filesystem>
#include <iomanip>
#include <optional>

#include <CLI11.hpp>

#include "platoon/config.hpp"
#include "platoon/error.hpp"
#include "platoon/io.hpp"
#include "platoon/simulator.hpp"
#include "platoon/validation.hpp"

namespace platoon::cli {

namespace {

struct Flags {
  std::string config;
  std::string gains;
  std::string out;
  std::string controller = "dist";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  std::optional<long> horizon;
  bool flip_sign = false;
};

RunConfig config_from(const Flags& f) {
  return f.config.empty() ? default_run_config() : load_run_config(f.config);
}

// Gains from --gains if given, otherwise synthesized on the spot.
DelayedGains gains_for(const Flags& f, const RunConfig& cfg, const Problem& p) {
  if (f.gains.empty()) return synthesize_steady(p.model, p.cost, cfg.synthesis.options);
  DelayedGains g = read_gains(f.gains);
  if (g.partition != p.model.partition)
    throw ConfigError("gains '" + f.gains + "' were synthesized for a different "
                      "state layout than the config describes");
  return g;
}

std::string sibling(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  p.replace_extension();
  return p.string() + suffix;
}

void print_rates(std::ostream& out, const ComparisonReport& r) {
  out << std::setprecision(8);
  out << "  J_cent    " << r.j_cent << '\n'
      << "  J_dist    " << r.j_dist << '\n'
      << "  J_delayed " << r.j_delayed << '\n'
      << std::setprecision(4)
      << "  gap(dist, cent)    " << r.gap_dist_cent_pct << " %\n"
      << "  gap(dist, delayed) " << r.gap_dist_delayed_pct << " %\n";
}

int cmd_synthesize(const Flags& f, std::ostream& out) {
  const RunConfig cfg = config_from(f);
  const Problem p = build_problem(cfg);
  const DelayedGains g = synthesize_steady(p.model, p.cost, cfg.synthesis.options);
  const std::string path = !f.out.empty() ? f.out
                           : !cfg.output.gains.empty() ? cfg.output.gains
                                                       : "gains.json";
  nlohmann::json j = gains_to_json(g);
  if (cfg.synthesis.horizon > 0) {
    const GainSchedule s = synthesize_finite(
        p.model, p.cost, static_cast<std::size_t>(cfg.synthesis.horizon),
        cfg.synthesis.options);
    nlohmann::json sched;
    sched["horizon"] = cfg.synthesis.horizon;
    sched["F"] = nlohmann::json::array();
    sched["M"] = nlohmann::json::array();
    for (const Matrix& F : s.F) sched["F"].push_back(matrix_to_json(F));
    for (const Matrix& M : s.M) sched["M"].push_back(matrix_to_json(M));
    j["schedule"] = std::move(sched);
    out << "finite horizon N=" << cfg.synthesis.horizon << ": |F(0)-F|="
        << (s.F[0] - g.F).cwiseAbs().maxCoeff() << " |M(1)-M|="
        << (s.M[1] - g.M).cwiseAbs().maxCoeff() << '\n';
  }
  write_json(path, j);
  out << "n=" << p.model.n() << " m=" << p.model.m() << " |S|=" << g.S.size()
      << " rho(A+BL)=" << std::setprecision(6) << g.closed_loop_radius << '\n';
  print_rates(out, analytic_comparison(g));
  out << "wrote " << path << '\n';
  return kOk;
}

int cmd_simulate(const Flags& f, std::ostream& out) {
  RunConfig cfg = config_from(f);
  if (f.seed) cfg.scenario.seed = *f.seed;
  if (f.horizon) cfg.scenario.horizon = *f.horizon;
  const Problem p = build_problem(cfg);
  const DelayedGains g = gains_for(f, cfg, p);
  const ControllerKind kind = parse_controller_kind(f.controller);
  const SimTrace tr = run_closed_loop(p.model, p.cost, g, kind, cfg.scenario);

  const std::string csv = !f.out.empty() ? f.out
                          : !cfg.output.trace.empty() ? cfg.output.trace
                                                      : "trace.csv";
  const std::string summary_path =
      !cfg.output.summary.empty() && f.out.empty() ? cfg.output.summary
                                                   : sibling(csv, ".summary.json");
  write_trace_csv(csv, tr);
  const TraceSummary s = summarize_trace(tr, p.cost, p.op.d0);
  write_json(summary_path, summary_to_json(s, tr));

  out << "controller " << to_string(kind) << ", " << tr.steps() << " steps, seed "
      << tr.seed << '\n'
      << std::setprecision(8) << "  total cost " << s.total_cost << '\n'
      << "  mean stage cost " << s.mean_stage_cost << '\n';
  for (std::size_t i = 0; i < s.input_energy.size(); ++i)
    out << "  vehicle " << i + 1 << ": input energy " << s.input_energy[i]
        << ", u in [" << s.min_input[i] << ", " << s.max_input[i] << "]\n";
  for (std::size_t i = 0; i < s.min_spacing.size(); ++i)
    out << "  min spacing d" << i + 1 << i + 2 << " " << s.min_spacing[i] << " m\n";
  out << "wrote " << csv << " and " << summary_path << '\n';
  return kOk;
}

int cmd_compare(const Flags& f, std::ostream& out) {
  RunConfig cfg = config_from(f);
  if (f.seed) cfg.compare.seed = *f.seed;
  if (f.runs) cfg.compare.runs = *f.runs;
  if (f.horizon) cfg.compare.steps_per_run = *f.horizon;
  const Problem p = build_problem(cfg);
  const DelayedGains g = gains_for(f, cfg, p);
  const ComparisonReport r = compare_controllers(p.model, p.cost, g, cfg.compare);

  out << "analytic per-step rates\n";
  print_rates(out, r);
  out << "Monte Carlo (" << r.options.runs << " runs x " << r.options.steps_per_run
      << " steps, seed " << r.options.seed << ")\n";
  for (const auto& c : r.controllers) {
    const double z = c.empirical.std_error > 0.0
                         ? (c.empirical.mean - c.analytic_rate) / c.empirical.std_error
                         : 0.0;
    out << "  " << std::left << std::setw(8) << to_string(c.kind) << std::right
        << std::setprecision(8) << " mean " << c.empirical.mean << " +- "
        << std::setprecision(3) << c.empirical.std_error << "  (z = " << z
        << ")  input energy rel:";
    for (double e : c.input_energy_relative) out << ' ' << e;
    out << '\n';
  }
  const std::string path = !f.out.empty() ? f.out
                           : !cfg.output.comparison.empty() ? cfg.output.comparison
                                                            : "comparison.json";
  write_json(path, comparison_to_json(r));
  out << "wrote " << path << '\n';
  return kOk;
}

int cmd_validate(const Flags& f, std::ostream& out) {
  const RunConfig cfg = config_from(f);
  const Problem p = build_problem(cfg);
  ValidationOptions opts;
  if (f.seed) opts.seed = *f.seed;
  opts.flip_L_sign = f.flip_sign;
  const ValidationReport rep = run_validation(p.model, p.cost, opts);
  for (const auto& c : rep.checks)
    out << (c.passed ? "PASS " : "FAIL ") << std::left << std::setw(5) << c.id
        << std::right << ' ' << c.name << ": " << c.detail << '\n';
  return rep.all_passed() ? kOk : kValidationFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Delayed-information platoon controller synthesis and simulation"};
  app.require_subcommand(1);
  Flags f;

  auto add_config = [&](CLI::App* sc, bool required) {
    auto* o = sc->add_option("--config", f.config, "run configuration (JSON)")
                  ->check(CLI::ExistingFile);
    if (required) o->required();
  };
  auto* syn = app.add_subcommand("synthesize", "compute the delayed-sharing gains");
  add_config(syn, true);
  syn->add_option("--out", f.out, "gains JSON to write");

  auto* sim = app.add_subcommand("simulate", "closed-loop run on the scenario");
  add_config(sim, true);
  sim->add_option("--gains", f.gains, "gains JSON (synthesized if omitted)");
  sim->add_option("--out", f.out, "trace CSV to write");
  sim->add_option("--controller", f.controller, "dist, dist-mp, cent or delayed")
      ->check(CLI::IsMember({"dist", "dist-mp", "cent", "delayed"}));
  sim->add_option("--seed", f.seed, "noise seed");
  sim->add_option("--horizon", f.horizon, "number of steps")->check(CLI::PositiveNumber);

  auto* cmp = app.add_subcommand("compare", "analytic and Monte-Carlo cost comparison");
  add_config(cmp, true);
  cmp->add_option("--gains", f.gains, "gains JSON (synthesized if omitted)");
  cmp->add_option("--out", f.out, "comparison JSON to write");
  cmp->add_option("--seed", f.seed, "master seed");
  cmp->add_option("--runs", f.runs, "independent runs")->check(CLI::PositiveNumber);
  cmp->add_option("--horizon", f.horizon, "steps per run")->check(CLI::PositiveNumber);

  auto* val = app.add_subcommand("validate", "invariant and oracle checks");
  add_config(val, false);
  val->add_option("--seed", f.seed, "seed for the randomized checks");
  val->add_flag("--inject-sign-flip", f.flip_sign,
                "negate L before synthesis (the oracle check must then fail)")
      ->group("");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (*syn) return cmd_synthesize(f, out);
    if (*sim) return cmd_simulate(f, out);
    if (*cmp) return cmd_compare(f, out);
    return cmd_validate(f, out);
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ParameterError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ModelError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InstabilityError& e) {
    err << "simulation unstable: " << e.what() << '\n';
    return kInstability;
  } catch (const Error& e) {
    err << "synthesis error: " << e.what() << '\n';
    return kSynthesisError;
  }
}

}  // namespace platoon::cli
