#pragma once

#include <ostream>
#include <string>

#include <json.hpp>

#include "platoon/config.hpp"
#include "platoon/simulator.hpp"
#include "platoon/synthesis.hpp"

namespace platoon {

inline constexpr const char* kGainsFormat = "platoon-delayed-gains/1";

nlohmann::json matrix_to_json(const Matrix& M);
Matrix matrix_from_json(const nlohmann::json& j, const std::string& what);

nlohmann::json gains_to_json(const DelayedGains& gains);
/// Rebuilds the gains (masks are recomputed from the stored partition and
/// checked against the stored index sets).
DelayedGains gains_from_json(const nlohmann::json& j);

void write_gains(const std::string& path, const DelayedGains& gains);
DelayedGains read_gains(const std::string& path);

/// Plot-ready trace in physical deviation coordinates about v0 (the lead
/// velocity column is v1 - v0, not the tracking error).
void write_trace_csv(std::ostream& out, const SimTrace& trace);
void write_trace_csv(const std::string& path, const SimTrace& trace);

struct TraceSummary {
  double total_cost = 0.0;
  double mean_stage_cost = 0.0;
  std::vector<double> input_energy;  // sum over k of R_ii u_i^2
  std::vector<double> min_spacing;   // d0 + deviation, per follower
  std::vector<double> max_input;     // max u_i over the run
  std::vector<double> min_input;
};

TraceSummary summarize_trace(const SimTrace& trace, const CostSpec& cost,
                             double d0);
nlohmann::json summary_to_json(const TraceSummary& s, const SimTrace& trace);

nlohmann::json comparison_to_json(const ComparisonReport& report);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

}  // namespace platoon
