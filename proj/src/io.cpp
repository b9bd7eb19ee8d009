#include "platoon/io.hpp"

#include <fstream>
#include <iomanip>
#include <limits>

#include "platoon/error.hpp"

namespace platoon {

using nlohmann::json;

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw IoError(what + ": expected a non-empty array of rows");
  const std::size_t cols = j[0].size();
  Matrix M(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw IoError(what + ": rows differ in length");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw IoError(what + ": non-numeric entry");
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return M;
}

json gains_to_json(const DelayedGains& g) {
  json j;
  j["format"] = kGainsFormat;
  j["n"] = g.partition.n();
  j["m"] = g.partition.m();
  j["state_dims"] = g.partition.state_dims();
  j["input_dims"] = g.partition.input_dims();
  j["lead_integrator"] = g.partition.lead_integrator();
  j["experimental"] = g.experimental;
  j["S"] = g.S;
  j["S_F"] = g.masks.F.index_set();
  j["S_M"] = g.masks.M.index_set();
  j["F"] = matrix_to_json(g.F);
  j["M"] = matrix_to_json(g.M);
  j["G"] = matrix_to_json(g.G);
  j["L"] = matrix_to_json(g.L);
  j["H"] = matrix_to_json(g.H);
  j["X"] = matrix_to_json(g.X);
  j["noise_rate"] = g.noise_rate;
  j["delay_penalty_rate"] = g.delay_penalty_rate;
  j["baseline_penalty_rate"] = g.baseline_penalty_rate;
  j["closed_loop_radius"] = g.closed_loop_radius;
  j["min_eig_Y"] = g.min_eig_Y;
  j["min_eig_Yss"] = g.min_eig_Yss;
  return j;
}

DelayedGains gains_from_json(const json& j) {
  try {
    if (j.value("format", "") != kGainsFormat)
      throw IoError(std::string("gains: expected format '") + kGainsFormat + "'");
    DelayedGains g;
    g.partition = SubsystemPartition(j.at("state_dims").get<std::vector<int>>(),
                                     j.at("input_dims").get<std::vector<int>>(),
                                     j.at("lead_integrator").get<bool>());
    g.experimental = j.at("experimental").get<bool>();
    g.masks = chain_masks(g.partition, g.experimental);
    g.S = g.masks.combined_index_set();
    if (j.at("S").get<IndexSet>() != g.S)
      throw IoError("gains: stored index set does not match the partition");
    g.F = matrix_from_json(j.at("F"), "gains F");
    g.M = matrix_from_json(j.at("M"), "gains M");
    g.G = matrix_from_json(j.at("G"), "gains G");
    g.L = matrix_from_json(j.at("L"), "gains L");
    g.H = matrix_from_json(j.at("H"), "gains H");
    g.X = matrix_from_json(j.at("X"), "gains X");
    const int n = g.partition.n(), m = g.partition.m();
    for (const Matrix* D : {&g.F, &g.M, &g.G, &g.L})
      if (D->rows() != m || D->cols() != n)
        throw IoError("gains: gain matrix has the wrong size");
    if (g.X.rows() != n || g.X.cols() != n || g.H.rows() != m || g.H.cols() != m)
      throw IoError("gains: X or H has the wrong size");
    // Throws if a stored gain violates its mask.
    vec_star(g.F, g.masks.F);
    vec_star(g.M, g.masks.M);
    g.noise_rate = j.at("noise_rate").get<double>();
    g.delay_penalty_rate = j.at("delay_penalty_rate").get<double>();
    g.baseline_penalty_rate = j.at("baseline_penalty_rate").get<double>();
    g.closed_loop_radius = j.at("closed_loop_radius").get<double>();
    g.min_eig_Y = j.value("min_eig_Y", 0.0);
    g.min_eig_Yss = j.value("min_eig_Yss", 0.0);
    return g;
  } catch (const json::exception& e) {
    throw IoError(std::string("gains: ") + e.what());
  } catch (const StructureError& e) {
    throw IoError(std::string("gains: ") + e.what());
  }
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << std::setw(2) << j << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_gains(const std::string& path, const DelayedGains& gains) {
  write_json(path, gains_to_json(gains));
}

DelayedGains read_gains(const std::string& path) {
  return gains_from_json(read_json(path));
}

void write_trace_csv(std::ostream& out, const SimTrace& tr) {
  const auto& part = tr.partition;
  const std::size_t count = part.subsystems();
  std::vector<int> cols;
  out << "k,t_s";
  for (std::size_t i = 0; i < count; ++i) {
    if (i > 0) {
      out << ",d" << i << i + 1;
      cols.push_back(part.spacing_index(i));
    }
    out << ",v" << i + 1;
    cols.push_back(part.velocity_index(i));
  }
  for (int i = 0; i < part.m(); ++i) out << ",u" << i + 1;
  out << ",stage_cost,cum_cost";
  if (part.lead_integrator()) out << ",z1";
  out << '\n';

  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t k = 0; k < tr.u.size(); ++k) {
    const Vector p = tr.x[k] - tr.offset[k];
    out << k << ',' << static_cast<double>(k) * tr.Ts;
    for (int c : cols) out << ',' << p(c);
    for (Eigen::Index i = 0; i < tr.u[k].size(); ++i) out << ',' << tr.u[k](i);
    out << ',' << tr.stage_cost[k] << ',' << tr.cum_cost[k];
    if (part.lead_integrator()) out << ',' << tr.x[k](part.integrator_index());
    out << '\n';
  }
}

void write_trace_csv(const std::string& path, const SimTrace& trace) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_trace_csv(out, trace);
  if (!out) throw IoError("write failed for '" + path + "'");
}

TraceSummary summarize_trace(const SimTrace& tr, const CostSpec& cost,
                             double d0) {
  TraceSummary s;
  const auto& part = tr.partition;
  const std::size_t count = part.subsystems();
  s.total_cost = tr.cum_cost.empty() ? 0.0 : tr.cum_cost.back();
  s.mean_stage_cost =
      tr.cum_cost.empty() ? 0.0 : s.total_cost / static_cast<double>(tr.cum_cost.size());
  s.input_energy.assign(part.m(), 0.0);
  s.max_input.assign(part.m(), -std::numeric_limits<double>::infinity());
  s.min_input.assign(part.m(), std::numeric_limits<double>::infinity());
  for (const Vector& u : tr.u)
    for (int i = 0; i < part.m(); ++i) {
      s.input_energy[i] += cost.R(i, i) * u(i) * u(i);
      s.max_input[i] = std::max(s.max_input[i], u(i));
      s.min_input[i] = std::min(s.min_input[i], u(i));
    }
  s.min_spacing.assign(count - 1, std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < tr.x.size(); ++k)
    for (std::size_t i = 1; i < count; ++i) {
      const int c = part.spacing_index(i);
      s.min_spacing[i - 1] =
          std::min(s.min_spacing[i - 1], d0 + tr.x[k](c) - tr.offset[k](c));
    }
  return s;
}

json summary_to_json(const TraceSummary& s, const SimTrace& tr) {
  json j;
  j["controller"] = to_string(tr.controller);
  j["seed"] = tr.seed;
  j["steps"] = tr.steps();
  j["total_cost"] = s.total_cost;
  j["mean_stage_cost"] = s.mean_stage_cost;
  j["input_energy"] = s.input_energy;
  json rel = json::array();
  for (double e : s.input_energy)
    rel.push_back(s.input_energy[0] > 0.0 ? e / s.input_energy[0] : 0.0);
  j["input_energy_relative"] = rel;
  j["min_spacing_m"] = s.min_spacing;
  j["max_input"] = s.max_input;
  j["min_input"] = s.min_input;
  return j;
}

json comparison_to_json(const ComparisonReport& r) {
  json j;
  j["noise_rate"] = r.noise_rate;
  j["j_cent"] = r.j_cent;
  j["j_dist"] = r.j_dist;
  j["j_delayed"] = r.j_delayed;
  j["gap_dist_cent_pct"] = r.gap_dist_cent_pct;
  j["gap_dist_delayed_pct"] = r.gap_dist_delayed_pct;
  json ctrls = json::array();
  for (const auto& c : r.controllers) {
    json cj;
    cj["controller"] = to_string(c.kind);
    cj["analytic_rate"] = c.analytic_rate;
    cj["empirical_mean"] = c.empirical.mean;
    cj["empirical_std_error"] = c.empirical.std_error;
    cj["samples"] = c.empirical.samples;
    cj["input_energy"] = c.input_energy;
    cj["input_energy_relative"] = c.input_energy_relative;
    ctrls.push_back(std::move(cj));
  }
  j["controllers"] = std::move(ctrls);
  j["monte_carlo"] = {{"runs", r.options.runs},
                      {"steps_per_run", r.options.steps_per_run},
                      {"burn_in", r.options.burn_in},
                      {"batch_length", r.options.batch_length},
                      {"seed", r.options.seed}};
  return j;
}

}  // namespace platoon
