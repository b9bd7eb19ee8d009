#pragma once

#include <optional>
#include <string>
#include <vector>

#include "platoon/model.hpp"
#include "platoon/simulator.hpp"
#include "platoon/synthesis.hpp"

namespace platoon {

struct ModelConfig {
  double Ts = 0.0;
  double v0 = 0.0;
  double tau = 0.0;
  DragReduction drag;
  std::vector<VehicleParams> vehicles;
  Matrix W;
  std::optional<Matrix> P0;  // defaults to W
  bool zero_coupling = false;
  std::optional<Matrix> A;   // replaces the linearized A
  std::optional<Matrix> B;
};

struct CostConfig {
  PlatoonWeights weights;
  std::optional<Matrix> Q0;  // defaults to Q
};

struct SynthesisConfig {
  SynthesisOptions options;
  long horizon = 0;  // 0: steady state only
};

struct OutputConfig {
  std::string gains;
  std::string trace;
  std::string summary;
  std::string comparison;
};

struct RunConfig {
  ModelConfig model;
  CostConfig cost;
  Scenario scenario;
  SynthesisConfig synthesis;
  CompareOptions compare;
  OutputConfig output;
};

/// The shipped defaults (identical to configs/default.json).
RunConfig default_run_config();

/// Strict parse: unknown keys, wrong types and missing required values are
/// ConfigErrors that name the JSON path and the line it sits on.
RunConfig parse_run_config(const std::string& text,
                           const std::string& source = "<config>");
RunConfig load_run_config(const std::string& path);

/// Everything synthesis and simulation need, built from a config.
struct Problem {
  std::vector<VehicleParams> vehicles;
  OperatingPoint op;
  LinearPlatoonModel model;  // augmented when the scenario asks for it
  CostSpec cost;
};

Problem build_problem(const RunConfig& config);

}  // namespace platoon
