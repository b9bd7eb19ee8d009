#include "platoon/simulator.hpp"

#include <cmath>
#include <string>

#include "parallel.hpp"
#include "platoon/error.hpp"

namespace platoon {

void Scenario::validate() const {
  if (horizon <= 0) throw ParameterError("scenario: horizon must be > 0");
  if (!(noise_scale >= 0.0)) throw ParameterError("scenario: noise scale < 0");
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (!(profile[i].speed_mps > 0.0))
      throw ParameterError("scenario: reference speeds must be positive");
    if (i > 0 && !(profile[i].time_s > profile[i - 1].time_s))
      throw ParameterError("scenario: profile times must be strictly increasing");
  }
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

NoiseSampler::NoiseSampler(const Matrix& W) {
  Eigen::LLT<Matrix> llt(W);
  if (W.rows() != W.cols() || llt.info() != Eigen::Success)
    throw FactorizationError("noise covariance is not positive definite");
  factor_ = llt.matrixL();
}

Vector NoiseSampler::draw(Rng& rng) const {
  std::normal_distribution<double> normal;
  Vector z(factor_.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  return factor_ * z;
}

Vector sample_noise(const Matrix& W, Rng& rng) {
  return NoiseSampler(W).draw(rng);
}

double reference_speed(const Scenario& scenario, double v0, double t) {
  double v = v0;
  for (const auto& bp : scenario.profile) {
    if (bp.time_s <= t + 1e-9)
      v = bp.speed_mps;
    else
      break;
  }
  return v;
}

Vector scenario_injection(const SubsystemPartition& partition,
                          const Scenario& scenario, long k, double v0,
                          double Ts, double tau) {
  Vector r = Vector::Zero(partition.n());
  if (scenario.profile.empty()) return r;
  const double dv = v0 - reference_speed(scenario, v0, static_cast<double>(k) * Ts);
  for (std::size_t i = 0; i < partition.subsystems(); ++i) {
    r(partition.velocity_index(i)) = dv;
    if (i > 0) r(partition.spacing_index(i)) = tau * dv;
  }
  return r;
}

Vector reference_feedforward(const LinearPlatoonModel& model, const Vector& r) {
  // x = p + r with p the physical deviation; x = 0 needs p = -r to be a
  // fixed point: B u = (A - I) r.
  Vector target = model.A * r - r;
  if (model.partition.lead_integrator())
    target(model.partition.integrator_index()) = 0.0;
  return model.B.completeOrthogonalDecomposition().solve(target);
}

namespace {

// Symmetric square root of a PSD matrix (P0 may be singular).
Matrix psd_factor(const Matrix& P) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (P + P.transpose()));
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

}  // namespace

SimTrace run_closed_loop(const LinearPlatoonModel& model, const CostSpec& cost,
                         FeedbackController& controller, ControllerKind kind,
                         const Scenario& scenario, const SimOptions& opts) {
  scenario.validate();
  const int n = model.n();
  if (cost.Q.rows() != n || cost.R.rows() != model.m())
    throw ParameterError("simulation: cost does not match the model");
  if (!scenario.profile.empty() && !(model.v0 > 0.0 && model.Ts > 0.0))
    throw ParameterError(
        "simulation: a speed profile needs a model with an operating point");

  SimTrace tr;
  tr.controller = kind;
  tr.seed = scenario.seed;
  tr.Ts = model.Ts;
  tr.partition = model.partition;

  Rng rng = make_rng(scenario.seed, 0);
  const NoiseSampler noise(model.W);
  Vector x = Vector::Zero(n);
  if (scenario.initial == InitialState::Sampled) {
    std::normal_distribution<double> normal;
    Vector z(n);
    for (int i = 0; i < n; ++i) z(i) = normal(rng);
    x = psd_factor(model.P0) * z;
  }

  const auto T = static_cast<std::size_t>(scenario.horizon);
  tr.x.reserve(T + 1);
  tr.u.reserve(T);
  tr.u_ff.reserve(T);
  tr.w.reserve(T);
  tr.offset.reserve(T + 1);
  tr.stage_cost.reserve(T);
  tr.cum_cost.reserve(T);

  auto offset_at = [&](long k) {
    return scenario_injection(model.partition, scenario, k, model.v0, model.Ts,
                              model.tau);
  };
  Vector r = offset_at(0);
  // Controller coordinates are deviations from the current reference.
  x += r;
  double cum = 0.0;
  const bool scheduled = !scenario.profile.empty();
  for (std::size_t k = 0; k < T; ++k) {
    const Vector r_next = offset_at(static_cast<long>(k) + 1);
    // Physical rows see the true velocity x - r; the integrator accumulates
    // the tracking error itself, so its row gets no correction.
    Vector drift = r_next - model.A * r;
    if (model.partition.lead_integrator())
      drift(model.partition.integrator_index()) = 0.0;
    Vector u_ff = Vector::Zero(model.m());
    Vector shift;
    if (scheduled) {
      u_ff = reference_feedforward(model, r);
      shift = drift + model.B * u_ff;  // what the schedule adds beyond A x + B u_fb
    }
    const Vector u_fb = controller.step(x, shift);
    const Vector u = u_ff + u_fb;
    const double stage = x.dot(cost.Q * x) + u_fb.dot(cost.R * u_fb);
    cum += stage;
    const Vector w = scenario.noise_scale * noise.draw(rng);
    Vector x_next = model.A * x + model.B * u + w + drift;

    tr.x.push_back(x);
    tr.u.push_back(u);
    tr.u_ff.push_back(u_ff);
    tr.w.push_back(w);
    tr.offset.push_back(r);
    tr.stage_cost.push_back(stage);
    tr.cum_cost.push_back(cum);

    const double size = x_next.cwiseAbs().maxCoeff();
    if (!std::isfinite(size) || size > opts.divergence_guard)
      throw InstabilityError("simulation diverged at step " +
                             std::to_string(k + 1) + " (|x|_inf = " +
                             std::to_string(size) + ", controller " +
                             to_string(kind) + ")");
    x = std::move(x_next);
    r = r_next;
  }
  tr.x.push_back(x);
  tr.offset.push_back(r);
  return tr;
}

SimTrace run_closed_loop(const LinearPlatoonModel& model, const CostSpec& cost,
                         const DelayedGains& gains, ControllerKind kind,
                         const Scenario& scenario, const SimOptions& opts) {
  auto controller = make_controller(kind, model, gains);
  return run_closed_loop(model, cost, *controller, kind, scenario, opts);
}

// ---------------------------------------------------------------------------

MeanEstimate batch_means(const std::vector<double>& series, std::size_t burn_in,
                         std::size_t batch_length) {
  if (batch_length == 0) throw ParameterError("batch length must be > 0");
  MeanEstimate est;
  if (series.size() <= burn_in) return est;
  const std::size_t usable = series.size() - burn_in;
  const std::size_t batches = usable / batch_length;
  if (batches < 2)
    throw ParameterError("batch_means: need at least two full batches");
  std::vector<double> means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < batch_length; ++i)
      s += series[burn_in + b * batch_length + i];
    means[b] = s / static_cast<double>(batch_length);
  }
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= static_cast<double>(batches);
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  var /= static_cast<double>(batches - 1);
  est.mean = mean;
  est.std_error = std::sqrt(var / static_cast<double>(batches));
  est.samples = batches * batch_length;
  return est;
}

ComparisonReport analytic_comparison(const DelayedGains& gains) {
  ComparisonReport rep;
  rep.noise_rate = gains.noise_rate;
  rep.j_cent = gains.noise_rate;
  rep.j_dist = gains.noise_rate + gains.delay_penalty_rate;
  rep.j_delayed = gains.noise_rate + gains.baseline_penalty_rate;
  rep.gap_dist_cent_pct =
      rep.j_cent > 0.0 ? 100.0 * (rep.j_dist - rep.j_cent) / rep.j_cent : 0.0;
  rep.gap_dist_delayed_pct =
      rep.j_delayed > 0.0 ? 100.0 * (rep.j_delayed - rep.j_dist) / rep.j_delayed
                          : 0.0;
  rep.controllers[0].kind = ControllerKind::Centralized;
  rep.controllers[0].analytic_rate = rep.j_cent;
  rep.controllers[1].kind = ControllerKind::Distributed;
  rep.controllers[1].analytic_rate = rep.j_dist;
  rep.controllers[2].kind = ControllerKind::DelayedCentralized;
  rep.controllers[2].analytic_rate = rep.j_delayed;
  return rep;
}

ComparisonReport compare_controllers(const LinearPlatoonModel& model,
                                     const CostSpec& cost,
                                     const DelayedGains& gains,
                                     const CompareOptions& opts) {
  if (opts.runs == 0) throw ParameterError("compare: need at least one run");
  ComparisonReport rep = analytic_comparison(gains);
  rep.options = opts;
  const std::size_t vehicles = model.partition.subsystems();

  for (auto& stats : rep.controllers) {
    struct RunResult {
      std::vector<double> batch_means;
      std::vector<double> energy;
      std::size_t samples = 0;
    };
    std::vector<RunResult> results(opts.runs);
    detail::parallel_for(opts.runs, [&](std::size_t run) {
      Scenario sc;
      sc.horizon = opts.steps_per_run;
      // Each (master seed, run, controller) pair gets its own stream; the
      // controllers share noise realizations run by run.
      sc.seed = make_rng(opts.seed, run)();
      sc.initial = InitialState::Sampled;
      const SimTrace tr = run_closed_loop(model, cost, gains, stats.kind, sc);
      RunResult& res = results[run];
      const std::size_t usable = tr.stage_cost.size() > opts.burn_in
                                     ? tr.stage_cost.size() - opts.burn_in
                                     : 0;
      const std::size_t batches = usable / opts.batch_length;
      for (std::size_t b = 0; b < batches; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < opts.batch_length; ++i)
          s += tr.stage_cost[opts.burn_in + b * opts.batch_length + i];
        res.batch_means.push_back(s / static_cast<double>(opts.batch_length));
      }
      res.samples = batches * opts.batch_length;
      res.energy.assign(vehicles, 0.0);
      for (std::size_t k = opts.burn_in; k < tr.u.size(); ++k)
        for (std::size_t i = 0; i < vehicles; ++i) {
          const int ui = model.partition.input_offset(i);
          res.energy[i] += cost.R(ui, ui) * tr.u[k](ui) * tr.u[k](ui);
        }
      for (double& e : res.energy)
        e /= static_cast<double>(std::max<std::size_t>(1, usable));
    });

    std::vector<double> all;
    stats.input_energy.assign(vehicles, 0.0);
    std::size_t samples = 0;
    for (const auto& res : results) {
      all.insert(all.end(), res.batch_means.begin(), res.batch_means.end());
      samples += res.samples;
      for (std::size_t i = 0; i < vehicles; ++i)
        stats.input_energy[i] += res.energy[i] / static_cast<double>(opts.runs);
    }
    if (all.size() < 2)
      throw ParameterError("compare: runs too short for batch-means errors");
    stats.empirical = batch_means(all, 0, 1);
    stats.empirical.samples = samples;
    stats.input_energy_relative.assign(vehicles, 0.0);
    for (std::size_t i = 0; i < vehicles; ++i)
      stats.input_energy_relative[i] =
          stats.input_energy[0] > 0.0 ? stats.input_energy[i] / stats.input_energy[0]
                                      : 0.0;
  }
  return rep;
}

}  // namespace platoon
